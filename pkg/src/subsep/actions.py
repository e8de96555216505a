"""Computable permutation representations on the natural numbers.

An action is a closed-form expression tree; evaluation is exact and
total, and every variant acts on the left: apply(gh, x) = apply(g,
apply(h, x)).  Encodings into the naturals (dyadic-like rationals for
the affine Baumslag-Solitar action, interleavings for unions and
augmentations) are explicit and invertible, so orbit exploration,
stabilizer windows and traces are all finite, certified computations.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from .groups import (
    BSWord,
    FreeWord,
    GroupError,
    ProductWord,
    group_from_descriptor,
)
from .stallings import CosetTable, PreconditionError


class EncodingError(ValueError):
    """A value cannot be encoded into the point set."""


# ---------------------------------------------------------------------------
# integer encodings

def zigzag(k):
    return 2 * k if k >= 0 else -2 * k - 1


def unzigzag(u):
    return u // 2 if u % 2 == 0 else -(u + 1) // 2


def cantor_pair(a, b):
    return (a + b) * (a + b + 1) // 2 + b


def cantor_unpair(p):
    w = (isqrt(8 * p + 1) - 1) // 2
    b = p - w * (w + 1) // 2
    return w - b, b


# ---------------------------------------------------------------------------
# finitely supported permutations and bijections of the point set


class Perm:
    """A finitely supported permutation of the naturals."""

    __slots__ = ("map", "inv")

    def __init__(self, mapping):
        self.map = {k: v for k, v in mapping.items() if k != v}
        if sorted(self.map) != sorted(self.map.values()):
            raise GroupError("support and image differ: not a permutation")
        self.inv = {v: k for k, v in self.map.items()}

    def __call__(self, x):
        return self.map.get(x, x)

    def apply_inv(self, x):
        return self.inv.get(x, x)

    def support(self):
        return sorted(self.map)

    def is_involution(self):
        return all(self.map[v] == k for k, v in self.map.items())

    def __eq__(self, other):
        return isinstance(other, Perm) and self.map == other.map

    def __hash__(self):
        return hash(frozenset(self.map.items()))

    def to_json(self):
        return {str(k): v for k, v in sorted(self.map.items())}

    def __repr__(self):
        cyc = []
        seen = set()
        for k in sorted(self.map):
            if k in seen:
                continue
            cur, cycle = k, [k]
            seen.add(k)
            while self.map[cur] != k:
                cur = self.map[cur]
                seen.add(cur)
                cycle.append(cur)
            cyc.append("(" + " ".join(map(str, cycle)) + ")")
        return "".join(cyc) or "()"


def transposition(x, y):
    return Perm({}) if x == y else Perm({x: y, y: x})


def _nth_excluding(i, excluded_sorted):
    """The i-th natural (0-based) not in the sorted excluded list."""
    t = i
    while True:
        t2 = i + bisect_right(excluded_sorted, t)
        if t2 == t:
            idx = bisect_left(excluded_sorted, t)
            if idx >= len(excluded_sorted) or excluded_sorted[idx] != t:
                return t
            t2 = t + 1
        t = t2


def _rank_excluding(x, excluded_sorted):
    return x - bisect_left(excluded_sorted, x)


class FinBijection:
    """A finitely supported bijection, e.g. the involutions of surgeries."""

    def __init__(self, perm):
        self.perm = perm

    def fwd(self, x):
        return self.perm(x)

    def inv(self, x):
        return self.perm.apply_inv(x)


class AugmentBijection:
    """A computable bijection onto 'old points doubled, fresh odds'.

    Maps each protected point w to 2w and matches everything else, in
    increasing order, to the complement of the doubled protected set.
    Conjugating a doubled action by it plants fresh fixed points while
    leaving the protected window untouched.
    """

    def __init__(self, protected):
        self.protected = sorted(set(protected))
        self._pset = set(self.protected)
        self._doubled = [2 * w for w in self.protected]

    def fwd(self, x):
        if x in self._pset:
            return 2 * x
        return _nth_excluding(_rank_excluding(x, self.protected), self._doubled)

    def inv(self, y):
        if y % 2 == 0 and y // 2 in self._pset:
            return y // 2
        return _nth_excluding(_rank_excluding(y, self._doubled), self.protected)


# ---------------------------------------------------------------------------
# action expressions


class ActionExpr:
    """Base class: a computable homomorphism into the permutations of N."""

    group = None

    def apply(self, elem, x):
        self.group.check_same(elem)
        return self._apply(elem, x)

    def _apply(self, elem, x):
        if isinstance(elem, ProductWord):
            for side, el in reversed(elem.syllables):
                x = self._apply(el, x)
            return x
        letters = self.group.letters_of(elem)
        for lab in reversed(letters):
            x = self.apply_letter(lab, x)
        return x

    def apply_letter(self, lab, x):
        raise NotImplementedError

    def active_labels(self):
        """Signed labels generating the action, canonical order."""
        out = []
        for i in range(1, self.group.nlabels + 1):
            out.extend((i, -i))
        return out

    def to_json(self):
        raise NotImplementedError


class FinSuppAction(ActionExpr):
    """Generator images are finitely supported permutations.

    Only free ambient groups are allowed: arbitrary images satisfy no
    relations.  Unlisted generators act trivially, which is what makes
    this the natural carrier for actions of the infinite-rank free
    group.
    """

    def __init__(self, group, images):
        if group.kind not in ("free", "free_inf"):
            raise GroupError("finitely supported images need a free ambient group")
        self.group = group
        self.images = {int(k): v for k, v in images.items()}
        for k in self.images:
            if k < 1:
                raise GroupError("generator indices start at 1")

    def apply_letter(self, lab, x):
        perm = self.images.get(abs(lab))
        if perm is None:
            return x
        return perm(x) if lab > 0 else perm.apply_inv(x)

    def active_labels(self):
        if self.group.kind == "free_inf":
            out = []
            for i in sorted(self.images):
                out.extend((i, -i))
            return out
        return super().active_labels()

    def to_json(self):
        return {
            "type": "finsupp",
            "group": self.group.descriptor(),
            "images": {str(k): self.images[k].to_json() for k in sorted(self.images)},
        }


class TranslationAction(ActionExpr):
    """Each generator translates the zigzag-encoded integers."""

    def __init__(self, group, steps):
        if group.kind != "free":
            raise GroupError("translation actions need a finite-rank free group")
        if len(steps) != group.rank:
            raise GroupError("one step per generator")
        self.group = group
        self.steps = tuple(int(s) for s in steps)

    def apply_letter(self, lab, x):
        step = self.steps[abs(lab) - 1]
        return zigzag(unzigzag(x) + (step if lab > 0 else -step))

    def to_json(self):
        return {
            "type": "translation",
            "group": self.group.descriptor(),
            "steps": list(self.steps),
        }


class CosetActionExpr(ActionExpr):
    """The left action on cosets read off a finite table.

    ``embedding`` injects the table states into the point set; points
    outside the image are fixed.  The stabilizer of the embedded state 0
    is exactly the table's stabilizer subgroup.
    """

    def __init__(self, table, embedding=None):
        self.table = table
        self.group = table.group
        if embedding is None:
            embedding = {s: s for s in range(table.degree)}
        self.embedding = dict(embedding)
        if len(set(self.embedding.values())) != table.degree:
            raise GroupError("embedding must be injective and total on states")
        self._point_to_state = {v: k for k, v in self.embedding.items()}

    def _apply(self, elem, x):
        state = self._point_to_state.get(x)
        if state is None:
            return x
        return self.embedding[self.table.left_act(elem, state)]

    def apply_letter(self, lab, x):
        state = self._point_to_state.get(x)
        if state is None:
            return x
        col = self.table.invs[lab - 1] if lab > 0 else self.table.perms[-lab - 1]
        # left action by a letter is the inverse table walk
        return self.embedding[col[state]]

    def image_points(self):
        return sorted(self.embedding.values())

    def to_json(self):
        return {
            "type": "coset",
            "group": self.group.descriptor(),
            "table": self.table.to_json(),
            "embedding": {str(k): v for k, v in sorted(self.embedding.items())},
        }


class AffineBSAction(ActionExpr):
    """The faithful affine action of BS(1,n): s adds one, t divides by n.

    Points encode rationals a / n^k in lowest n-terms via a pairing
    function; non-canonical codes are fixed by everything.
    """

    def __init__(self, group):
        if group.kind != "bs":
            raise GroupError("the affine action needs a BS(1,n) group")
        self.group = group

    def encode(self, value):
        n = self.group.n
        v = Fraction(value)
        k = 0
        while v.denominator != 1:
            v *= n
            k += 1
            if k > 64 and v.denominator != 1:
                raise EncodingError(f"{value} is not an n-adic rational")
        # k is minimal, so n never divides the numerator when k > 0
        return cantor_pair(zigzag(int(v)), k)

    def decode(self, point):
        u, k = cantor_unpair(point)
        a = unzigzag(u)
        if k > 0 and a % self.group.n == 0:
            return None
        return Fraction(a, self.group.n**k)

    def _apply(self, elem, x):
        v = self.decode(x)
        if v is None:
            return x
        k, b = elem.affine()
        n = self.group.n
        image = (Fraction(n) ** k) * v + b
        return self.encode(image)

    def apply_letter(self, lab, x):
        v = self.decode(x)
        if v is None:
            return x
        n = self.group.n
        if abs(lab) == 1:
            image = v + (1 if lab > 0 else -1)
        else:
            image = v / n if lab > 0 else v * n
        return self.encode(image)

    def to_json(self):
        return {"type": "affine_bs", "group": self.group.descriptor()}


class ConjugateAction(ActionExpr):
    """The inner action intertwined by a computable bijection."""

    def __init__(self, inner, bijection):
        self.inner = inner
        self.group = inner.group
        self.bijection = bijection

    def _apply(self, elem, x):
        return self.bijection.inv(self.inner._apply(elem, self.bijection.fwd(x)))

    def apply_letter(self, lab, x):
        return self.bijection.inv(self.inner.apply_letter(lab, self.bijection.fwd(x)))

    def active_labels(self):
        return self.inner.active_labels()

    def to_json(self):
        if not isinstance(self.bijection, FinBijection):
            raise GroupError("only finitely supported conjugators serialize")
        return {
            "type": "conjugate",
            "inner": self.inner.to_json(),
            "swap": self.bijection.perm.to_json(),
        }


class TrivialAugmentAction(ActionExpr):
    """The inner action on doubled points, fresh fixed points on odds."""

    def __init__(self, inner):
        self.inner = inner
        self.group = inner.group

    def _apply(self, elem, x):
        if x % 2:
            return x
        return 2 * self.inner._apply(elem, x // 2)

    def apply_letter(self, lab, x):
        if x % 2:
            return x
        return 2 * self.inner.apply_letter(lab, x // 2)

    def active_labels(self):
        return self.inner.active_labels()

    def to_json(self):
        return {"type": "trivial_augment", "inner": self.inner.to_json()}


class DisjointUnionAction(ActionExpr):
    """Several actions of one group on interleaved copies of the points."""

    def __init__(self, parts):
        if not parts:
            raise GroupError("a union needs at least one part")
        self.parts = list(parts)
        self.group = parts[0].group
        for p in parts:
            if p.group != self.group:
                raise GroupError("union parts must share the acting group")

    def inject(self, part_index, y):
        return len(self.parts) * y + part_index

    def _apply(self, elem, x):
        m = len(self.parts)
        y, i = divmod(x, m)
        return m * self.parts[i]._apply(elem, y) + i

    def apply_letter(self, lab, x):
        m = len(self.parts)
        y, i = divmod(x, m)
        return m * self.parts[i].apply_letter(lab, y) + i

    def active_labels(self):
        seen = []
        for p in self.parts:
            for lab in p.active_labels():
                if lab not in seen:
                    seen.append(lab)
        return sorted(seen, key=lambda v: (abs(v), v < 0))

    def to_json(self):
        return {"type": "disjoint_union", "parts": [p.to_json() for p in self.parts]}


class AmalgamAction(ActionExpr):
    """An action of a free product, assembled syllable by syllable."""

    def __init__(self, group, left, right):
        if group.kind != "free_product":
            raise GroupError("amalgams act for free products")
        if left.group != group.left or right.group != group.right:
            raise GroupError("factor actions do not match the product factors")
        self.group = group
        self.left = left
        self.right = right

    def factor(self, side):
        return self.right if side else self.left

    def _apply(self, elem, x):
        for side, el in reversed(elem.syllables):
            x = self.factor(side)._apply(el, x)
        return x

    def apply_letter(self, lab, x):
        split = self.group._split
        a = abs(lab)
        if a <= split:
            return self.left.apply_letter(lab, x)
        sub = a - split
        return self.right.apply_letter(sub if lab > 0 else -sub, x)

    def to_json(self):
        return {
            "type": "amalgam",
            "group": self.group.descriptor(),
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        }


class FreezeAction(ActionExpr):
    """The inner action with a finite invariant set forced pointwise fixed.

    Valid only when the frozen set is closed under the inner action; the
    caller certifies that (orbit closures), and ``validate`` rechecks.
    """

    def __init__(self, inner, frozen):
        self.inner = inner
        self.group = inner.group
        self.frozen = frozenset(frozen)

    def validate(self):
        for x in self.frozen:
            for lab in self.inner.active_labels():
                if self.inner.apply_letter(lab, x) not in self.frozen:
                    return False
        return True

    def _apply(self, elem, x):
        if x in self.frozen:
            return x
        return self.inner._apply(elem, x)

    def apply_letter(self, lab, x):
        if x in self.frozen:
            return x
        return self.inner.apply_letter(lab, x)

    def active_labels(self):
        return self.inner.active_labels()

    def to_json(self):
        return {
            "type": "freeze",
            "inner": self.inner.to_json(),
            "frozen": sorted(self.frozen),
        }


class PatchAction(ActionExpr):
    """Finitely many coset pieces with disjoint images; all else fixed."""

    def __init__(self, group, pieces):
        self.group = group
        self.pieces = list(pieces)
        owned = {}
        for i, piece in enumerate(self.pieces):
            if piece.group != group:
                raise GroupError("patch pieces must share the acting group")
            for p in piece.image_points():
                if p in owned:
                    raise GroupError("patch pieces must have disjoint images")
                owned[p] = i
        self._owner = owned

    def _apply(self, elem, x):
        i = self._owner.get(x)
        if i is None:
            return x
        return self.pieces[i]._apply(elem, x)

    def apply_letter(self, lab, x):
        i = self._owner.get(x)
        if i is None:
            return x
        return self.pieces[i].apply_letter(lab, x)

    def to_json(self):
        return {
            "type": "patch",
            "group": self.group.descriptor(),
            "pieces": [p.to_json() for p in self.pieces],
        }


class RegularAction(ActionExpr):
    """The left regular action of a finite-rank free group.

    Points index the reduced words in shortlex order; the action left
    multiplies and re-ranks, so the point 0 is the identity and its
    stabilizer is trivial.
    """

    def __init__(self, group):
        if group.kind != "free":
            raise GroupError("the lazy regular action needs finite rank")
        self.group = group

    def _layer_sizes(self, upto):
        n2 = 2 * self.group.rank
        sizes = [1]
        while len(sizes) <= upto:
            sizes.append(sizes[-1] * (n2 - 1) if len(sizes) > 1 else n2)
        return sizes

    def rank_word(self, word):
        letters = word.letters
        if not letters:
            return 0
        n2 = 2 * self.group.rank
        sizes = self._layer_sizes(len(letters))
        base = sum(sizes[:len(letters)])
        idx = 0
        prev = 0
        for i, x in enumerate(letters):
            r = 2 * (abs(x) - 1) + (0 if x > 0 else 1)
            if i == 0:
                idx = r
            else:
                banned = 2 * (abs(prev) - 1) + (0 if prev < 0 else 1)
                idx = idx * (n2 - 1) + (r if r < banned else r - 1)
            prev = x
        return base + idx

    def unrank_word(self, point):
        n2 = 2 * self.group.rank
        length = 0
        layer = 1
        rem = point
        while rem >= layer:
            rem -= layer
            length += 1
            layer = n2 if length == 1 else layer * (n2 - 1)
        letters = []
        prev = 0
        for i in range(length):
            d, rem = divmod(rem, (n2 - 1) ** (length - 1 - i))
            if i > 0:
                banned = 2 * (abs(prev) - 1) + (0 if prev < 0 else 1)
                if d >= banned:
                    d += 1
            sign = 1 if d % 2 == 0 else -1
            prev = sign * (d // 2 + 1)
            letters.append(prev)
        return FreeWord(self.group, letters)

    def _apply(self, elem, x):
        w = self.unrank_word(x)
        return self.rank_word(elem * w)

    def apply_letter(self, lab, x):
        return self._apply(self.group.generator(abs(lab), 1 if lab > 0 else -1), x)

    def to_json(self):
        return {"type": "regular", "group": self.group.descriptor()}


class CosetSpaceAction(ActionExpr):
    """The quasiregular action on the cosets of a f.g. subgroup.

    Cosets carry canonical representatives read off the subgroup graph's
    shortlex transversal; points are assigned by BFS discovery from the
    subgroup itself, lazily, so infinite-index subgroups work.
    """

    def __init__(self, graph):
        self.graph = graph
        self.group = graph.group
        self._transversal = self._build_transversal()
        first = self.group.identity()
        self._reps = [first]
        self._index = {first: 0}
        self._bfs_head = 0

    def _build_transversal(self):
        words = {0: ()}
        queue = [0]
        head = 0
        g = self.graph
        while head < len(queue):
            v = queue[head]
            head += 1
            for lab in range(1, g.nlabels + 1):
                for signed, arr in ((lab, g.out[lab - 1]), (-lab, g.inv[lab - 1])):
                    t = arr[v]
                    if t != -1 and t not in words:
                        words[t] = words[v] + (signed,)
                        queue.append(t)
        return words

    def _canon_left(self, word):
        """Canonical representative of word * H."""
        # follow the inverse word through the graph; the left coset of w
        # matches the right coset of w^-1
        g = self.graph
        letters = tuple(-x for x in reversed(word.letters))
        state = 0
        stuck = len(letters)
        for i, x in enumerate(letters):
            arr = g.out[x - 1] if x > 0 else g.inv[-x - 1]
            nxt = arr[state]
            if nxt == -1:
                stuck = i
                break
            state = nxt
        right = self._transversal[state] + letters[stuck:]
        return FreeWord(self.group, [-x for x in reversed(right)])

    def _point_of(self, rep, max_grow=1_000_000):
        idx = self._index.get(rep)
        grown = 0
        while idx is None:
            if self._bfs_head >= len(self._reps) or grown > max_grow:
                raise EncodingError("coset enumeration budget exhausted")
            v = self._reps[self._bfs_head]
            self._bfs_head += 1
            for lab in self.active_labels():
                gen = self.group.generator(abs(lab), 1 if lab > 0 else -1)
                nxt = self._canon_left(gen * v)
                if nxt not in self._index:
                    self._index[nxt] = len(self._reps)
                    self._reps.append(nxt)
            grown += 1
            idx = self._index.get(rep)
        return idx

    def rep_of_point(self, x):
        while x >= len(self._reps):
            if self._bfs_head >= len(self._reps):
                raise EncodingError("coset space is smaller than requested point")
            v = self._reps[self._bfs_head]
            self._bfs_head += 1
            for lab in self.active_labels():
                gen = self.group.generator(abs(lab), 1 if lab > 0 else -1)
                nxt = self._canon_left(gen * v)
                if nxt not in self._index:
                    self._index[nxt] = len(self._reps)
                    self._reps.append(nxt)
        return self._reps[x]

    def _apply(self, elem, x):
        rep = self.rep_of_point(x)
        return self._point_of(self._canon_left(elem * rep))

    def apply_letter(self, lab, x):
        return self._apply(self.group.generator(abs(lab), 1 if lab > 0 else -1), x)

    def to_json(self):
        return {
            "type": "coset_space",
            "group": self.group.descriptor(),
            "subgroup": self.graph.to_json(),
        }


def evaluate(act, elem, x):
    """Apply a group element to a point under the action."""
    return act.apply(elem, x)


# ---------------------------------------------------------------------------
# orbits, stabilizer windows, traces


@dataclass(frozen=True)
class Orbit:
    points: tuple
    complete: bool
    frontier: tuple = ()

    def __contains__(self, x):
        return x in set(self.points)

    def size(self):
        return len(self.points)


def orbit(act, x, budget=10000):
    """BFS closure of a point under the generator images.

    Stops after discovering ``budget`` points; an incomplete orbit keeps
    the unexpanded frontier so callers can refuse rather than guess.
    """
    if budget < 1:
        raise PreconditionError("orbit budget must be >= 1")
    labels = act.active_labels()
    seen = {x}
    queue = [x]
    head = 0
    while head < len(queue):
        if len(queue) > budget:
            return Orbit(tuple(sorted(seen)), False, tuple(sorted(queue[head:])))
        p = queue[head]
        head += 1
        for lab in labels:
            q = act.apply_letter(lab, p)
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return Orbit(tuple(sorted(seen)), True)


def orbit_with_words(act, x, budget=10000, targets=None):
    """BFS with shortest (length, then lex) witness words per point.

    Stops early once all target points are reached.  Returns (witnesses,
    complete) where witnesses maps each discovered point to a group
    element moving x onto it.
    """
    group = act.group
    labels = act.active_labels()
    gens = {
        lab: group.generator(abs(lab), 1 if lab > 0 else -1) for lab in labels
    }
    words = {x: group.identity()}
    layer = [x]
    missing = set(targets) - set(words) if targets is not None else None
    complete = True
    total = 1
    while layer:
        if missing is not None and not missing:
            return words, True
        nxt = []
        for lab in labels:
            gen = gens[lab]
            for p in layer:
                q = act.apply_letter(lab, p)
                if q not in words:
                    words[q] = gen * words[p]
                    nxt.append(q)
                    if missing is not None:
                        missing.discard(q)
        total += len(nxt)
        if total > budget:
            complete = False
            break
        layer = nxt
    return words, complete and (missing is None or not missing)


def stabilizer_window(act, x, window):
    """The window elements fixing the point: the stabilizer's trace."""
    return tuple(g for g in window if act.apply(g, x) == x)


@dataclass(frozen=True)
class Trace:
    points: tuple

    def __len__(self):
        return len(self.points)


def trace(steps, x):
    """Intermediate points of a composite of permutations.

    ``steps`` are point maps listed in application order (first applied
    first); duplicates in the resulting sequence are retained.
    """
    if not steps:
        raise PreconditionError("trace needs at least one step")
    pts = [x]
    for f in steps:
        pts.append(f(pts[-1]))
    return Trace(tuple(pts))


def word_trace(act, elem, x):
    """Trace of a point under an element, one step per letter."""
    letters = list(act.group.letters_of(elem))
    steps = [
        (lambda lab: (lambda p: act.apply_letter(lab, p)))(lab)
        for lab in reversed(letters)
    ]
    return trace(steps, x)


def syllable_trace(amalgam, pword, x):
    """Trace of a point under a product word, one step per syllable."""
    steps = [
        (lambda s, e: (lambda p: amalgam.factor(s)._apply(e, p)))(side, el)
        for side, el in reversed(pword.syllables)
    ]
    if not steps:
        return Trace((x,))
    return trace(steps, x)


# ---------------------------------------------------------------------------
# the three approximation constructions


class PermWindow:
    """A permutation known only on a finite window."""

    def __init__(self, mapping, inverse_mapping=None):
        self.mapping = dict(mapping)
        if len(set(self.mapping.values())) != len(self.mapping):
            raise GroupError("window values must be injective")
        self.inverse_mapping = dict(inverse_mapping or {})
        for a, b in self.inverse_mapping.items():
            if b in self.mapping and self.mapping[b] != a:
                raise GroupError("inconsistent window: sigma(sigma^-1(a)) != a")

    def domain(self):
        return sorted(self.mapping)


def finite_support_approx(windows):
    """Finitely supported permutations matching windows on their domains.

    Implements the matching rule: send the image points that left the
    window back onto the uncovered window points, in increasing order,
    and fix everything else.  The group generated by the results has
    only finite orbits.
    """
    perms = []
    for win in windows:
        mapping = dict(win.mapping)
        domain = set(mapping)
        image = set(mapping.values())
        escaped = sorted(image - domain)
        holes = sorted(domain - image)
        for a, b in zip(escaped, holes):
            mapping[a] = b
        perms.append(Perm(mapping))
    return perms


class AugmentedAction(ConjugateAction):
    """Result of planting fresh fixed points near an action."""

    def __init__(self, inner, bijection, protected):
        super().__init__(inner, bijection)
        self.protected = tuple(sorted(protected))

    def fresh_fixed_points(self, count, exclude=()):
        """Fixed points of every group element, avoiding the window."""
        out = []
        banned = set(self.protected) | set(exclude)
        x = 0
        while len(out) < count:
            if x not in banned and self.bijection.fwd(x) % 2 == 1:
                out.append(x)
            x += 1
        return out

    def to_json(self):
        return {
            "type": "augmented",
            "inner": self.inner.inner.to_json(),
            "protected": list(self.protected),
        }


def augment_fixed_points(act, elems, points, count=0):
    """An action agreeing with ``act`` on elems x points, with fresh
    fixed points available on demand.

    Doubles the point set (old points on evens), then conjugates by a
    bijection that is the identity on the window and on its images, so
    the odd half becomes a pool of global fixed points.
    """
    protected = set(points)
    for s in elems:
        for y in points:
            protected.add(act.apply(s, y))
    bij = AugmentBijection(protected)
    return AugmentedAction(TrivialAugmentAction(act), bij, protected)


class WindowConditionError(PreconditionError):
    """The finite-index subgroup disagrees with a stabilizer on the
    product window; carries the violating element."""


def finite_orbit_approximation(
    tau, x, elems, points, table, budget=10000, occupied=()
):
    """Rebuild the orbit of x through a finite coset table.

    The data: an action tau, the constraint window (elems, points), and
    a finite-index subgroup agreeing with the stabilizer of x on the
    product window of the reaching words.  The output agrees with tau on
    the window, the rebuilt orbit of x is exactly the embedded coset
    space, and everything outside it is fixed.
    """
    group = tau.group
    pts = sorted(set(points) | {x})
    words, complete = orbit_with_words(tau, x, budget=budget, targets=set(pts))
    outside = [a for a in pts if a not in words]
    if not complete and outside:
        raise PreconditionError(
            f"orbit exploration budget too small to place {outside}"
        )
    for a in outside:
        for s in elems:
            if tau.apply(s, a) != a:
                raise PreconditionError(
                    "window point outside the orbit is moved by the window",
                    witness=(s, a),
                )
    reaching = sorted(
        {words[a] for a in pts if a in words}, key=lambda w: w.sort_key()
    )
    tilde = set(reaching)
    tilde.add(group.identity())
    for s in elems:
        for w in reaching:
            tilde.add(s * w)
    tilde.update([w.inverse() for w in tilde])
    tilde = sorted(tilde, key=lambda w: w.sort_key())
    stab_window = sorted(
        {u * v for u in tilde for v in tilde}, key=lambda w: w.sort_key()
    )
    for w in stab_window:
        if table.member(w) != (tau.apply(w, x) == x):
            raise WindowConditionError(
                "finite-index subgroup disagrees with the stabilizer "
                f"on {group.format(w)}",
                witness=w,
            )
    # the coset map: state of omega K  ->  tau(omega) x
    embedding = {}
    for w in tilde:
        state = table.walk_element(0, w.inverse())
        target = tau.apply(w, x)
        if state in embedding and embedding[state] != target:
            raise WindowConditionError(
                "coset map is not well defined", witness=w
            )
        embedding[state] = target
    if len(set(embedding.values())) != len(embedding):
        raise WindowConditionError("coset map is not injective")
    used = set(embedding.values()) | set(pts) | set(occupied)
    fresh = 0
    for state in range(table.degree):
        if state not in embedding:
            while fresh in used:
                fresh += 1
            embedding[state] = fresh
            used.add(fresh)
    sigma = CosetActionExpr(table, embedding)
    for s in elems:
        for a in pts:
            assert sigma.apply(s, a) == tau.apply(s, a)
    return sigma


def transitive_extension(act, rank, x, y):
    """Extend a free action by one generator that carries x to y.

    The images of the first ``rank`` generators are untouched; the new
    one is the transposition (x y), or trivial when the points agree.
    """
    if not isinstance(act, FinSuppAction):
        raise GroupError("transitive extension works on finitely supported actions")
    for k in act.images:
        if k > rank:
            raise GroupError(f"generator {k} already in use beyond rank {rank}")
    images = dict(act.images)
    images[rank + 1] = transposition(x, y)
    if act.group.kind == "free":
        from .groups import FreeGroup

        new_group = FreeGroup(max(act.group.rank, rank + 1))
    else:
        new_group = act.group
    return FinSuppAction(new_group, images)


# ---------------------------------------------------------------------------
# constraints (the basic open sets of the action space)


@dataclass(frozen=True)
class ActionConstraint:
    """The basic open set of actions matching ``base`` on a window."""

    base: ActionExpr
    elements: tuple
    points: tuple

    def violations(self, act):
        out = []
        for s in self.elements:
            for a in self.points:
                if act.apply(s, a) != self.base.apply(s, a):
                    out.append((s, a))
        return out

    def satisfied_by(self, act):
        return not self.violations(act)

    def strengthened(self, new_base, extra_elements=(), extra_points=()):
        """A sub-constraint: the new base must satisfy this one."""
        if not self.satisfied_by(new_base):
            raise PreconditionError("refined action escapes the constraint")
        elements = list(self.elements)
        for e in extra_elements:
            if e not in elements:
                elements.append(e)
        points = sorted(set(self.points) | set(extra_points))
        return ActionConstraint(new_base, tuple(elements), tuple(points))


# ---------------------------------------------------------------------------
# serialization


def action_from_json(data):
    kind = data["type"]
    if kind == "finsupp":
        group = group_from_descriptor(data["group"])
        images = {
            int(k): Perm({int(a): int(b) for a, b in v.items()})
            for k, v in data.get("images", {}).items()
        }
        return FinSuppAction(group, images)
    if kind == "translation":
        return TranslationAction(
            group_from_descriptor(data["group"]), data["steps"]
        )
    if kind == "affine_bs":
        return AffineBSAction(group_from_descriptor(data["group"]))
    if kind == "coset":
        group = group_from_descriptor(data["group"])
        table_data = data["table"]
        names = group.generator_names()
        perms = []
        for name in names:
            pairs = table_data["edges"][name]
            col = [0] * table_data["vertices"]
            for s, t in pairs:
                col[s] = t
            perms.append(col)
        table = CosetTable(group, perms)
        embedding = {int(k): int(v) for k, v in data["embedding"].items()}
        return CosetActionExpr(table, embedding)
    if kind == "conjugate":
        inner = action_from_json(data["inner"])
        perm = Perm({int(a): int(b) for a, b in data["swap"].items()})
        return ConjugateAction(inner, FinBijection(perm))
    if kind == "trivial_augment":
        return TrivialAugmentAction(action_from_json(data["inner"]))
    if kind == "augmented":
        inner = action_from_json(data["inner"])
        protected = data["protected"]
        return AugmentedAction(
            TrivialAugmentAction(inner), AugmentBijection(protected), protected
        )
    if kind == "disjoint_union":
        return DisjointUnionAction([action_from_json(p) for p in data["parts"]])
    if kind == "amalgam":
        group = group_from_descriptor(data["group"])
        return AmalgamAction(
            group, action_from_json(data["left"]), action_from_json(data["right"])
        )
    if kind == "freeze":
        return FreezeAction(action_from_json(data["inner"]), data["frozen"])
    if kind == "regular":
        return RegularAction(group_from_descriptor(data["group"]))
    if kind == "patch":
        group = group_from_descriptor(data["group"])
        return PatchAction(group, [action_from_json(p) for p in data["pieces"]])
    raise GroupError(f"unknown action type {kind!r}")
