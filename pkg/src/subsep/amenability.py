"""Folner sets: exact checking, search, and the free-product surgery.

All ratio arithmetic is exact rational; a certificate can always be
re-derived bit for bit from its set, window and action.  Search never
proves nonamenability: exhausting a budget is a refusal, not an answer.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

from . import _kernels
from .actions import (
    AmalgamAction,
    ConjugateAction,
    FinBijection,
    FreezeAction,
    Perm,
    augment_fixed_points,
    orbit,
    syllable_trace,
)
from .groups import FreeProduct, ProductWord
from .stallings import PreconditionError


@dataclass(frozen=True)
class FolnerCertificate:
    """A finite set with verified symmetric-difference ratios."""

    points: tuple
    window: tuple
    epsilon: Fraction
    ratios: tuple  # (element, Fraction) pairs aligned with window

    def to_json(self):
        return {
            "F": list(self.points),
            "omega": [g.group.format(g) for g in self.window],
            "epsilon": f"{self.epsilon.numerator}/{self.epsilon.denominator}",
            "ratios": {
                g.group.format(g): f"{r.numerator}/{r.denominator}"
                for g, r in self.ratios
            },
        }


@dataclass(frozen=True)
class Refusal:
    """A budget or precondition stop; never a wrong answer."""

    reason: str
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return False


def _ratio(act, g, sorted_points):
    images = sorted(act.apply(g, p) for p in sorted_points)
    diff = _kernels.symmdiff_size(sorted_points, images)
    return Fraction(diff, len(sorted_points))


def folner_check(act, points, window, epsilon):
    """Exact ratios of a candidate set; certificate iff all are < epsilon."""
    points = sorted(set(points))
    if not points:
        raise PreconditionError("a Folner candidate must be nonempty")
    epsilon = Fraction(epsilon)
    ratios = tuple((g, _ratio(act, g, points)) for g in window)
    if all(r < epsilon for _, r in ratios):
        return FolnerCertificate(tuple(points), tuple(window), epsilon, ratios)
    return Refusal(
        "ratio bound violated",
        {
            "ratios": ratios,
            "best": max(r for _, r in ratios),
            "violations": tuple(g for g, r in ratios if r >= epsilon),
        },
    )


class _BoundaryLedger:
    """Incremental |gF delta F| counts over precomputed neighbor maps."""

    def __init__(self, fwd_maps):
        self.fwd = fwd_maps  # per window element: explored point -> image
        self.bwd = [{v: k for k, v in m.items()} for m in fwd_maps]
        self.F = set()
        self.counts = [0] * len(fwd_maps)

    def _deltas(self, p):
        # boundary change per window element if p were added to F
        for i, fwd in enumerate(self.fwd):
            gp = fwd[p]
            gip = self.bwd[i].get(p)
            d = 0
            if gip is None:
                d += 1  # preimage exists but lies outside the explored window
            elif gip in self.F:
                d -= 1
            elif gip != p:
                d += 1
            if gp in self.F:
                d -= 1
            elif gp != p:
                d += 1
            yield i, d

    def add(self, p):
        for i, d in self._deltas(p):
            self.counts[i] += d
        self.F.add(p)

    def remove(self, p):
        self.F.discard(p)
        for i, d in self._deltas(p):
            self.counts[i] -= d

    def add_marginal(self, p):
        return sum(d for _, d in self._deltas(p))

    def remove_marginal(self, p):
        self.F.discard(p)
        total = -sum(d for _, d in self._deltas(p))
        self.F.add(p)
        return total

    def neighbors(self, p):
        for i, fwd in enumerate(self.fwd):
            q = fwd[p]
            if q != p:
                yield q
            q = self.bwd[i].get(p, p)
            if q != p:
                yield q

    def ok(self, epsilon):
        n = len(self.F)
        return n > 0 and all(Fraction(c, n) < epsilon for c in self.counts)


def folner_search(act, x, window, epsilon, budget=20000, min_size=1, seed=()):
    """Search the orbit of x for an (epsilon, window)-Folner subset.

    Candidates come in a deterministic order: BFS-ball prefixes around
    x, then greedy accretion (add the frontier point with the smallest
    exact boundary increase), then greedy shrinking of an explored ball
    (drop the point contributing the most boundary).  Every candidate
    that passes the incremental bound is re-validated with folner_check
    before being returned, so the strategy cannot hurt soundness.  The
    seed set is always contained in the result.
    """
    epsilon = Fraction(epsilon)
    labels = act.active_labels()
    seen = {x}
    queue = [x]
    layers = []
    head = 0
    layer_end = 1
    while head < len(queue) and len(queue) <= budget:
        nxt = []
        for p in queue[head:layer_end]:
            for lab in labels:
                q = act.apply_letter(lab, p)
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        head = layer_end
        queue.extend(nxt)
        layers.append(layer_end)
        layer_end = len(queue)
        if not nxt:
            break
    explored = queue[: min(len(queue), budget)]
    explored_set = set(explored)
    for s in seed:
        if s not in explored_set:
            return Refusal("seed escapes the explored window", {"point": s})
    fwd_maps = [{p: act.apply(g, p) for p in explored} for g in window]

    def validated(points):
        cert = folner_check(act, points, window, epsilon)
        if isinstance(cert, FolnerCertificate) and len(cert.points) >= min_size:
            return cert
        return None

    # phase 1: BFS-ball prefixes, seed included; geometrically spaced so
    # long thin orbits do not cost a check per layer
    last_checked = 0
    for end in layers:
        if end < min_size or end < last_checked + max(1, last_checked // 4):
            continue
        last_checked = end
        candidate = set(explored[:end]) | set(seed)
        cert = validated(candidate)
        if cert:
            return cert

    # phase 2: greedy accretion from the seed, lazy-heap frontier
    ledger = _BoundaryLedger(fwd_maps)
    for p in sorted(set(seed) | {x}):
        ledger.add(p)
    version = {}
    heap = []

    def push_frontier(p):
        version[p] = version.get(p, 0) + 1
        heapq.heappush(heap, (ledger.add_marginal(p), p, version[p]))

    def touch(p):
        if p in explored_set and p not in ledger.F:
            push_frontier(p)

    for p in sorted(ledger.F):
        for q in ledger.neighbors(p):
            touch(q)
    steps = 0
    while heap and steps < budget:
        if len(ledger.F) >= min_size and ledger.ok(epsilon):
            cert = validated(ledger.F)
            if cert:
                return cert
        d, p, v = heapq.heappop(heap)
        if p in ledger.F or version.get(p) != v:
            continue
        cur = ledger.add_marginal(p)
        if cur > d:
            heapq.heappush(heap, (cur, p, v))
            continue
        ledger.add(p)
        steps += 1
        for q in ledger.neighbors(p):
            touch(q)
    if len(ledger.F) >= min_size and ledger.ok(epsilon):
        cert = validated(ledger.F)
        if cert:
            return cert

    # phase 3: greedy shrink of an explored ball
    start_size = len(explored)
    for end in reversed(layers):
        if end <= max(4000, min_size):
            start_size = end
            break
    ledger = _BoundaryLedger(fwd_maps)
    for p in explored[:start_size]:
        ledger.add(p)
    for p in seed:
        if p not in ledger.F:
            ledger.add(p)
    protected = set(seed) | {x}
    version = {}
    heap = []
    for p in sorted(ledger.F - protected):
        version[p] = 0
        heapq.heappush(heap, (ledger.remove_marginal(p), p, 0))
    while len(ledger.F) > max(min_size, 1) and heap:
        if ledger.ok(epsilon):
            cert = validated(ledger.F)
            if cert:
                return cert
        d, p, v = heapq.heappop(heap)
        if p not in ledger.F or version.get(p) != v:
            continue
        cur = ledger.remove_marginal(p)
        if cur > d:
            heapq.heappush(heap, (cur, p, v))
            continue
        ledger.remove(p)
        for q in ledger.neighbors(p):
            if q in ledger.F and q not in protected:
                version[q] = version.get(q, 0) + 1
                heapq.heappush(heap, (ledger.remove_marginal(q), q, version[q]))
    if ledger.ok(epsilon):
        cert = validated(ledger.F)
        if cert:
            return cert

    report = folner_check(act, explored, window, epsilon)
    best = report.details["best"] if isinstance(report, Refusal) else Fraction(0)
    return Refusal(
        "no Folner set within budget", {"explored": len(explored), "best": best}
    )


def min_length_reaching(amalgam, x, targets, budget=20000):
    """A minimal-syllable product word moving x into the target set.

    Zero-one BFS over (point, last factor) states: a letter of the same
    factor extends the current syllable for free, switching factors (or
    starting) costs one syllable.  On success the trace meets the target
    set only at the landing point; candidates violating that (possible
    only under truncation) are skipped.
    """
    if not isinstance(amalgam, AmalgamAction):
        raise PreconditionError("min_length_reaching needs an amalgam action")
    group = amalgam.group
    targets = set(targets)
    if x in targets:
        return group.identity(), x
    factors = (amalgam.left, amalgam.right)
    factor_groups = (group.left, group.right)
    start = (x, -1)
    dist = {start: 0}
    parent = {}
    dq = deque([start])
    best_goal = None
    while dq:
        state = dq.popleft()
        p, last = state
        d = dist[state]
        if best_goal is not None and d > best_goal:
            break
        if len(dist) > budget:
            break
        for side in (0, 1):
            expr = factors[side]
            cost = 0 if side == last else 1
            for lab in expr.active_labels():
                q = expr.apply_letter(lab, p)
                if q == p:
                    continue
                nstate = (q, side)
                nd = d + cost
                if nstate in dist and dist[nstate] <= nd:
                    continue
                dist[nstate] = nd
                parent[nstate] = (state, side, lab)
                if q in targets and (best_goal is None or nd < best_goal):
                    best_goal = nd
                if cost == 0:
                    dq.appendleft(nstate)
                else:
                    dq.append(nstate)
    goals = sorted(
        (dist[st], st[0], st[1])
        for st in dist
        if st[0] in targets and st in parent
    )
    for _, point, side in goals:
        state = (point, side)
        letters = []
        while state in parent:
            state, sd, lab = parent[state]
            letters.append((sd, lab))
        letters.reverse()
        syll = []
        for sd, lab in letters:
            fg = factor_groups[sd]
            gen = fg.generator(abs(lab), 1 if lab > 0 else -1)
            if syll and syll[-1][0] == sd:
                syll[-1] = (sd, fg.multiply(gen, syll[-1][1]))
            else:
                syll.append((sd, gen))
        word = ProductWord(group, tuple(reversed(syll)))
        y = amalgam.apply(word, x)
        tr = syllable_trace(amalgam, word, x)
        if y in targets and set(tr.points) & targets == {y}:
            return word, y
    return Refusal("targets not reached within budget", {"explored": len(dist)})


@dataclass(frozen=True)
class CombineResult:
    """Output of the free-product surgery, with its audit trail."""

    phi: object
    psi: object
    cert: FolnerCertificate
    case: str
    swapped: bool = False
    window_closure: tuple = ()  # B: the window and its images
    fresh_fixed: tuple = ()  # C: planted fixed points
    swap_targets: tuple = ()  # D: the Folner bulk receiving them
    xi: object = None
    word: object = None  # z
    landing: object = None  # y
    trace_points: tuple = ()
    folner_set: tuple = ()


class _InfiniteOrbit(Exception):
    def __init__(self, side, point):
        self.side = side
        self.point = point


def _closed_orbit(expr, p, budget, side):
    ob = orbit(expr, p, budget=budget)
    if not ob.complete:
        raise _InfiniteOrbit(side, p)
    return ob.points


def free_product_combine(
    sigma,
    tau,
    x,
    epsilon,
    s_window,
    t_window,
    points,
    budget=20000,
    search_budget=20000,
):
    """Push two amenable-on-orbits factor actions into a free-product
    action whose orbit of x carries a verified Folner certificate, while
    agreeing with the inputs on the requested windows.

    Case selection is by orbit probes.  If every factor orbit the
    construction touches closes within budget, the left action is frozen
    outside a finite invariant core and the whole finite orbit is the
    certificate.  The first non-closing probe flips to the surgery: the
    factor owning the infinite orbit donates a Folner set F of size
    beyond 2(|B|+1)/epsilon, the other factor gets fresh fixed points
    planted beside it, and an order-two swap pulls them onto F.  Every
    structural fact is asserted, never trusted.
    """
    epsilon = Fraction(epsilon)
    product = FreeProduct(sigma.group, tau.group)
    amalgam = AmalgamAction(product, sigma, tau)
    pts = sorted(set(points) | {x})
    # probing an orbit to completion only needs a modest budget: a probe
    # that runs out flips to the surgery, which handles large finite
    # orbits just as well as infinite ones
    probe_budget = min(budget, 4096)
    try:
        result = _combine_finite(
            product, amalgam, sigma, tau, x, epsilon, s_window, t_window,
            pts, probe_budget
        )
    except _InfiniteOrbit as hit:
        result = _combine_surgery(
            product,
            amalgam,
            sigma,
            tau,
            x,
            epsilon,
            s_window,
            t_window,
            pts,
            (hit.side, hit.point),
            budget,
            search_budget,
        )
    if isinstance(result, Refusal):
        return result
    for s in s_window:
        for a in pts:
            if result.phi.apply(s, a) != sigma.apply(s, a):
                return Refusal(
                    "left window agreement failed; enlarge the orbit budget",
                    {"element": s, "point": a},
                )
    for t in t_window:
        for a in pts:
            if result.psi.apply(t, a) != tau.apply(t, a):
                return Refusal(
                    "right window agreement failed; enlarge the orbit budget",
                    {"element": t, "point": a},
                )
    return result


def _cert_window(product, s_window, t_window):
    out = [product.embed(0, s) for s in s_window]
    out += [product.embed(1, t) for t in t_window]
    return out


def _combine_finite(
    product, amalgam, sigma, tau, x, epsilon, s_window, t_window, pts, budget
):
    explored = orbit(amalgam, x, budget=budget)
    explored_set = set(explored.points)
    seeds = sorted({a for a in pts if a in explored_set} | {x})
    core = set()
    for a in seeds:
        core.update(_closed_orbit(sigma, a, budget, 0))
    closure = set(core)
    for b in sorted(core):
        closure.update(_closed_orbit(tau, b, budget, 1))
    frozen = set()
    for c in sorted(closure - core):
        frozen.update(_closed_orbit(sigma, c, budget, 0))
    assert not (frozen & core)
    phi = FreezeAction(sigma, frozen)
    assert phi.validate()
    patched = AmalgamAction(product, phi, tau)
    final = orbit(patched, x, budget=max(budget, len(closure) + 1))
    if not final.complete:
        return Refusal("patched orbit did not close", {"explored": final.size()})
    cert = folner_check(
        patched, final.points, _cert_window(product, s_window, t_window), epsilon
    )
    assert isinstance(cert, FolnerCertificate)
    assert all(r == 0 for _, r in cert.ratios)
    return CombineResult(
        phi=phi,
        psi=tau,
        cert=cert,
        case="finite",
        folner_set=tuple(final.points),
    )


def _combine_surgery(
    product,
    amalgam,
    sigma,
    tau,
    x,
    epsilon,
    s_window,
    t_window,
    pts,
    infinite,
    budget,
    search_budget,
):
    side, start = infinite
    swapped = side == 0
    inf_expr = tau if side == 1 else sigma
    inf_window = t_window if side == 1 else s_window
    other_expr = sigma if side == 1 else tau
    other_window = s_window if side == 1 else t_window

    base = set(pts)
    for s in other_window:
        for a in pts:
            base.add(other_expr.apply(s, a))
    need_over = Fraction(2 * (len(base) + 1), 1) / epsilon
    min_size = int(need_over) + 1
    cert_f = folner_search(
        inf_expr,
        start,
        tuple(inf_window),
        epsilon,
        budget=search_budget,
        min_size=min_size,
    )
    if isinstance(cert_f, Refusal):
        return cert_f
    fset = set(cert_f.points)
    assert Fraction(len(fset)) > need_over

    reach = min_length_reaching(amalgam, x, fset, budget=budget)
    if isinstance(reach, Refusal):
        return reach
    word, landing = reach
    tr = syllable_trace(amalgam, word, x)

    other_side = 0 if side == 1 else 1
    syllables = [el for sd, el in word.syllables if sd == other_side]
    window_pts = sorted(set(pts) | set(tr.points) | fset)
    surgered = augment_fixed_points(
        other_expr, list(other_window) + syllables, window_pts
    )
    amalgam2 = (
        AmalgamAction(product, surgered, tau)
        if side == 1
        else AmalgamAction(product, sigma, surgered)
    )
    assert syllable_trace(amalgam2, word, x).points == tr.points

    targets = sorted(fset - base - {landing})
    avoid = base | fset | set(tr.points)
    fresh = surgered.fresh_fixed_points(len(targets), exclude=avoid)
    pairing = {}
    for c, d in zip(fresh, targets):
        pairing[c] = d
        pairing[d] = c
    xi = FinBijection(Perm(pairing))
    conjugated = ConjugateAction(surgered, xi)
    phi, psi = (conjugated, tau) if side == 1 else (sigma, conjugated)
    patched = AmalgamAction(product, phi, psi)

    # the structural invariants of the surgery, each asserted separately
    assert not (set(fresh) & (base | fset | set(tr.points)))
    assert xi.perm.is_involution()
    assert all(xi.fwd(b) == b for b in base)
    assert all(xi.fwd(p) == p for p in tr.points)
    assert set(targets) == fset - base - {landing}
    assert patched.apply(word, x) == landing and landing in fset
    bound = Fraction(2 * (len(base) + 1), len(fset))
    for s in other_window:
        r = _ratio(conjugated, s, sorted(fset))
        assert r <= bound < epsilon

    cert = folner_check(
        patched, sorted(fset), _cert_window(product, s_window, t_window), epsilon
    )
    assert isinstance(cert, FolnerCertificate)
    return CombineResult(
        phi=phi,
        psi=psi,
        cert=cert,
        case="surgery",
        swapped=swapped,
        window_closure=tuple(sorted(base)),
        fresh_fixed=tuple(fresh),
        swap_targets=tuple(targets),
        xi=xi,
        word=word,
        landing=landing,
        trace_points=tr.points,
        folner_set=tuple(sorted(fset)),
    )


# ---------------------------------------------------------------------------
# exhaustive non-separability witness for BS(1,n)


def _perm_mul(a, b):
    # read words left to right: (ab)[i] = b[a[i]]
    return tuple(b[a[i]] for i in range(len(a)))


def _perm_inv(a):
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v] = i
    return tuple(out)


def _perm_pow(a, k):
    out = tuple(range(len(a)))
    base = a
    while k:
        if k & 1:
            out = _perm_mul(out, base)
        base = _perm_mul(base, base)
        k >>= 1
    return out


def _perm_order(a):
    k = 1
    cur = a
    ident = tuple(range(len(a)))
    while cur != ident:
        cur = _perm_mul(cur, a)
        k += 1
    return k


@dataclass(frozen=True)
class BSWitnessReport:
    n: int
    max_degree: int
    homomorphisms: int
    counterexamples: tuple
    per_degree: tuple  # (degree, homomorphism count) pairs
    s_orders: tuple  # sorted distinct orders of the s-image

    def to_json(self):
        return {
            "n": self.n,
            "max_degree": self.max_degree,
            "homomorphisms": self.homomorphisms,
            "counterexamples": list(self.counterexamples),
            "per_degree": [list(t) for t in self.per_degree],
            "s_orders": list(self.s_orders),
        }


def bs_witness_degree(n, d):
    """All relation-respecting pairs in one symmetric group degree."""
    count = 0
    orders = set()
    bad = []
    for ps in permutations(range(d)):
        psn = _perm_pow(ps, n)
        cyc = {psn}
        cur = psn
        ident = tuple(range(d))
        while cur != ident:
            cur = _perm_mul(cur, psn)
            cyc.add(cur)
        s_in_power_cyclic = ps in cyc
        for pt in permutations(range(d)):
            if _perm_mul(_perm_mul(_perm_inv(pt), ps), pt) != psn:
                continue
            count += 1
            orders.add(_perm_order(ps))
            if not s_in_power_cyclic:
                bad.append({"degree": d, "s": list(ps), "t": list(pt)})
    return count, orders, bad


def bs_nonseparability_witness(n, max_degree):
    """Exhaust all homomorphisms BS(1,n) -> S_d for d up to max_degree.

    For every pair of permutations satisfying the defining relation the
    s-image lies in the cyclic group generated by its own n-th power
    (conjugate powers force the order of s to be prime to n), so no
    finite quotient separates s from the conjugated copy of <s>.  The
    report carries the exhaustive count and any counterexample found.
    """
    if n < 2:
        raise PreconditionError("the BS parameter must be >= 2")
    total = 0
    per_degree = []
    orders = set()
    bad = []
    for d in range(1, max_degree + 1):
        count, degree_orders, degree_bad = bs_witness_degree(n, d)
        per_degree.append((d, count))
        total += count
        orders |= degree_orders
        bad.extend(degree_bad)
    return BSWitnessReport(
        n=n,
        max_degree=max_degree,
        homomorphisms=total,
        counterexamples=tuple(bad),
        per_degree=tuple(per_degree),
        s_orders=tuple(sorted(orders)),
    )
