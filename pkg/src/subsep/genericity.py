"""Finite-stage fusion of dense-set providers.

A provider refines a basic open constraint into a strictly smaller one
whose base action exhibits a target behavior on a declared finite
witness window (a finite orbit, a transitivity word, a Folner
certificate).  Running a finite schedule threads these refinements so
every witness survives to the final stage: the honest desk-scale
surrogate for an intersection of countably many dense open sets.  The
engine never claims more than the transcript shows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .actions import (
    ActionConstraint,
    AmalgamAction,
    FinSuppAction,
    PatchAction,
    finite_orbit_approximation,
    orbit,
    orbit_with_words,
    transitive_extension,
)
from .amenability import FolnerCertificate, Refusal, folner_check, free_product_combine
from .chabauty import approx_by_finite_index
from .groups import GroupError
from .stallings import graph_from_generators


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class FiniteOrbitWitness:
    point: int
    orbit_points: tuple
    generators: tuple

    def verify(self, act, budget=100000):
        ob = orbit(act, self.point, budget=max(budget, 2 * len(self.orbit_points) + 2))
        return ob.complete and ob.points == self.orbit_points

    def to_json(self):
        return {
            "kind": "finite_orbit",
            "point": self.point,
            "orbit": list(self.orbit_points),
            "generators": [g.group.format(g) for g in self.generators],
        }


@dataclass(frozen=True)
class TransitivityWitness:
    source: int
    target: int
    word: object

    def verify(self, act, budget=0):
        return act.apply(self.word, self.source) == self.target

    def to_json(self):
        return {
            "kind": "transitivity",
            "source": self.source,
            "target": self.target,
            "word": self.word.group.format(self.word),
        }


@dataclass(frozen=True)
class AmenableOrbitWitness:
    point: int
    cert: FolnerCertificate
    reach_words: tuple  # (target point, product word) pairs

    def verify(self, act, budget=0):
        redone = folner_check(act, self.cert.points, self.cert.window, self.cert.epsilon)
        if not isinstance(redone, FolnerCertificate):
            return False
        if redone.ratios != self.cert.ratios:
            return False
        return all(act.apply(w, self.point) == f for f, w in self.reach_words)

    def to_json(self):
        return {
            "kind": "amenable_orbit",
            "point": self.point,
            "certificate": self.cert.to_json(),
            "reach_words": [
                [f, w.group.format(w)] for f, w in self.reach_words
            ],
        }


# ---------------------------------------------------------------------------
# providers


@dataclass(frozen=True)
class DensityProvider:
    """A named refinement step with a verifiable witness."""

    name: str
    refine: object  # (ActionConstraint, budget) -> (act, constraint, witness) | Refusal

    def to_json(self):
        return {"name": self.name}


class _OrbitPiece:
    """A patch piece that replays the inner action on one finite orbit."""

    def __init__(self, inner, points):
        self.inner = inner
        self.group = inner.group
        self.points = frozenset(points)

    def image_points(self):
        return sorted(self.points)

    def _apply(self, elem, x):
        return self.inner._apply(elem, x)

    def apply_letter(self, lab, x):
        return self.inner.apply_letter(lab, x)


def _orbit_classes(act, pts, budget):
    """Group points into orbit classes of the action, budget-bounded.

    Returns (classes, witness maps): each class is a sorted tuple; the
    witness map of a class sends reachable points to reaching words from
    the class base point.
    """
    remaining = list(pts)
    classes = []
    while remaining:
        base = remaining[0]
        words, _complete = orbit_with_words(
            act, base, budget=budget, targets=set(remaining)
        )
        cls = tuple(sorted(p for p in remaining if p in words))
        classes.append((base, cls, words))
        remaining = [p for p in remaining if p not in words]
    return classes


def provider_finite_orbit(generators, point):
    """Refine a free-group constraint so the orbit of a point is finite.

    The construction follows the coset-table rebuild: approximate the
    stabilizer by a finite-index subgroup that agrees with it on the
    product window of the reaching words, then replay the orbit through
    the cosets.  Orbits already finite are kept verbatim; each orbit
    meeting the constraint window is processed independently.
    """

    def refine(constr, budget=20000):
        tau = constr.base
        group = tau.group
        if group.kind != "free":
            raise GroupError("finite-orbit refinement needs a finite-rank free group")
        elems = list(constr.elements)
        for g in generators:
            if g not in elems:
                elems.append(g)
        pts = sorted(set(constr.points) | {point})
        classes = _orbit_classes(tau, pts, budget)
        pieces = []
        occupied = set(pts)
        for base, cls, words in classes:
            probe = orbit(tau, base, budget=budget)
            if probe.complete:
                pieces.append(_OrbitPiece(tau, probe.points))
                occupied.update(probe.points)
                continue
            reach = sorted({words[p] for p in cls}, key=lambda w: w.sort_key())
            tilde = set(reach) | {group.identity()}
            for s in elems:
                for w in reach:
                    tilde.add(s * w)
            tilde |= {w.inverse() for w in tilde}
            window = sorted(
                {u * v for u in tilde for v in tilde}, key=lambda w: w.sort_key()
            )
            stab_gens = [w for w in window if tau.apply(w, base) == base]
            stab_graph = graph_from_generators(group, stab_gens)
            table = approx_by_finite_index(stab_graph, window)
            piece = finite_orbit_approximation(
                tau, base, elems, cls, table, budget=budget, occupied=sorted(occupied)
            )
            occupied.update(piece.image_points())
            pieces.append(piece)
        act = PatchAction(group, pieces)
        pinned = set()
        for piece in pieces:
            pinned.update(piece.image_points())
        extra_elems = list(generators) + [
            group.generator(i) for i in range(1, group.nlabels + 1)
        ]
        new_constr = constr.strengthened(act, extra_elems, sorted(pinned))
        ob = orbit(act, point, budget=max(budget, 2 * len(pinned) + 2))
        assert ob.complete
        witness = FiniteOrbitWitness(point, ob.points, tuple(generators))
        return act, new_constr, witness

    label = ",".join(g.group.format(g) for g in generators)
    return DensityProvider(name=f"finite_orbit[{label};{point}]", refine=refine)


def provider_transitivity(source, target):
    """Refine so the target point joins the source's orbit, with a word.

    Works over the free group on countably many generators: whenever the
    constraint window lives inside a finite-rank subgroup, one spare
    generator can be redefined to carry source to target without
    touching the window.
    """

    def refine(constr, budget=20000):
        act = constr.base
        if not isinstance(act, FinSuppAction):
            raise GroupError("transitivity refinement needs finitely supported images")
        group = act.group
        words, _ = orbit_with_words(act, source, budget=budget, targets={target})
        if target in words:
            word = words[target]
            new_constr = constr.strengthened(act, [word], [source, target])
            return act, new_constr, TransitivityWitness(source, target, word)
        rank = 0
        for e in constr.elements:
            for x in group.letters_of(e):
                rank = max(rank, abs(x))
        for k in act.images:
            rank = max(rank, k)
        new_act = transitive_extension(act, rank, source, target)
        word = new_act.group.generator(rank + 1)
        new_constr = ActionConstraint(
            constr.base, constr.elements, constr.points
        ).strengthened(new_act, [word], [source, target])
        return new_act, new_constr, TransitivityWitness(source, target, word)

    return DensityProvider(name=f"transitivity[{source}->{target}]", refine=refine)


def provider_amenable_orbit(point, epsilon, left_window, right_window):
    """Refine a free-product constraint so the orbit of the point holds
    a Folner certificate that later stages cannot disturb."""

    epsilon = Fraction(epsilon)

    def refine(constr, budget=20000):
        base = constr.base
        if not isinstance(base, AmalgamAction):
            raise GroupError("amenable-orbit refinement needs an amalgam action")
        product = base.group
        # Prior pins are product words; they survive the surgery as soon
        # as every point of their syllable traces is protected, because
        # factor agreement propagates along consecutive trace points.
        # Keeping the factor windows small keeps the Folner bound
        # 2(|B|+1)/epsilon from compounding.
        trace_pts = set()
        from .actions import syllable_trace

        for w in constr.elements:
            for a in constr.points:
                tr = syllable_trace(base, w, a)
                trace_pts.update(tr.points)
        pts = sorted(set(constr.points) | trace_pts | {point})
        res = free_product_combine(
            base.left,
            base.right,
            point,
            epsilon,
            list(left_window),
            list(right_window),
            pts,
            budget=budget,
            search_budget=budget,
        )
        if isinstance(res, Refusal):
            return res
        act = AmalgamAction(product, res.phi, res.psi)
        fpoints = set(res.cert.points)
        words, complete = orbit_with_words(
            act, point, budget=budget, targets=fpoints
        )
        missing = [f for f in sorted(fpoints) if f not in words]
        if missing:
            return Refusal("certificate points unreachable", {"missing": missing})
        reach = tuple((f, words[f]) for f in sorted(fpoints))
        extra_elems = (
            [product.embed(0, s) for s in left_window]
            + [product.embed(1, t) for t in right_window]
            + [w for _, w in reach]
        )
        new_constr = constr.strengthened(
            act, extra_elems, sorted(fpoints | {point})
        )
        witness = AmenableOrbitWitness(point, res.cert, reach)
        return act, new_constr, witness

    return DensityProvider(
        name=f"amenable_orbit[{point};{epsilon}]", refine=refine
    )


# ---------------------------------------------------------------------------
# the fusion engine


@dataclass(frozen=True)
class FusionStage:
    provider: str
    constraint: ActionConstraint
    witness: object


@dataclass(frozen=True)
class FusionRun:
    initial: ActionConstraint
    stages: tuple
    final: object

    def verify(self, budget=100000):
        """Re-check nesting and every witness against the final action."""
        checks = []
        for i, stage in enumerate(self.stages):
            nested = stage.constraint.satisfied_by(self.final)
            witness_ok = stage.witness.verify(self.final, budget)
            checks.append(
                {"stage": i, "provider": stage.provider, "nested": nested,
                 "witness": witness_ok}
            )
        return checks

    def transcript(self):
        checks = self.verify()
        return {
            "stages": [
                {
                    "provider": st.provider,
                    "elements": [
                        e.group.format(e) for e in st.constraint.elements
                    ],
                    "points": list(st.constraint.points),
                    "witness": st.witness.to_json(),
                    "verified": checks[i],
                }
                for i, st in enumerate(self.stages)
            ],
            "all_verified": all(
                c["nested"] and c["witness"] for c in checks
            ),
        }


@dataclass(frozen=True)
class FusionRefusal:
    stage: int
    provider: str
    refusal: Refusal

    def __bool__(self):
        return False


def run_fusion(schedule, initial, stage_budget=20000):
    """Thread a schedule of providers through nested constraints.

    Every stage's action is checked against the previous constraint on
    the spot; any provider refusal aborts with the stage index.  The
    returned run re-verifies all witnesses against the final action.
    """
    from .stallings import PreconditionError

    constr = initial
    stages = []
    for i, provider in enumerate(schedule):
        try:
            out = provider.refine(constr, stage_budget)
        except PreconditionError as err:
            out = Refusal(str(err))
        if isinstance(out, Refusal):
            return FusionRefusal(stage=i, provider=provider.name, refusal=out)
        act, new_constr, witness = out
        if not constr.satisfied_by(act):
            return FusionRefusal(
                stage=i,
                provider=provider.name,
                refusal=Refusal("refined action escaped the constraint"),
            )
        stages.append(FusionStage(provider.name, new_constr, witness))
        constr = new_constr
    return FusionRun(initial=initial, stages=tuple(stages), final=constr.base)


def diagonal_pairs(first, second):
    """Cantor-style enumeration of the product of two finite lists."""
    out = []
    for total in range(len(first) + len(second) - 1):
        for i in range(min(total, len(first) - 1), -1, -1):
            j = total - i
            if j < len(second):
                out.append((first[i], second[j]))
    return out


def schedule_from_json(group, data):
    """Build a provider schedule from its JSON description."""
    schedule = []
    for item in data:
        kind = item["provider"]
        if kind == "finite_orbit":
            gens = [group.parse(w) for w in item["generators"]]
            schedule.append(provider_finite_orbit(gens, int(item["point"])))
        elif kind == "transitivity":
            schedule.append(
                provider_transitivity(int(item["source"]), int(item["target"]))
            )
        elif kind == "amenable_orbit":
            left = [group.left.parse(w) for w in item["left"]]
            right = [group.right.parse(w) for w in item["right"]]
            schedule.append(
                provider_amenable_orbit(
                    int(item["point"]), Fraction(item["epsilon"]), left, right
                )
            )
        else:
            raise GroupError(f"unknown provider kind {kind!r}")
    return schedule
