"""Chabauty balls made finite.

A point of the subgroup space is carried as a handle with a decidable
membership predicate; the basic open ball around a handle is determined
by a finite window of group elements, and two handles land in the same
ball exactly when their membership agrees on the window.
"""

from __future__ import annotations

from . import _kernels
from .groups import GroupError
from .stallings import CosetTable, SubgroupGraph, graph_from_generators, hall_complete, separate


class UnsupportedHandleError(GroupError):
    """Membership is not decidable for this handle combination."""


class SubgroupHandle:
    """Base handle: a subgroup known through a membership predicate."""

    ambient = None

    def contains(self, elem):
        raise NotImplementedError

    def label(self):
        return type(self).__name__


class GraphHandle(SubgroupHandle):
    def __init__(self, graph):
        self.graph = graph
        self.ambient = graph.group

    def contains(self, elem):
        return self.graph.member(elem)

    def label(self):
        return f"graph[{self.graph.n}]"


class TableHandle(SubgroupHandle):
    """A finite-index subgroup: the stabilizer of state 0 of a table."""

    def __init__(self, table):
        self.table = table
        self.ambient = table.group

    def contains(self, elem):
        return self.table.member(elem)

    def label(self):
        return f"table[{self.table.degree}]"


class WordListHandle(SubgroupHandle):
    """The subgroup generated by an explicit finite list of words."""

    def __init__(self, ambient, words):
        self.ambient = ambient
        self.words = tuple(sorted(words, key=lambda w: w.sort_key()))
        self._graph = None

    def graph(self):
        if self.ambient.kind != "free":
            raise UnsupportedHandleError(
                f"generated-subgroup membership unsupported in {self.ambient.tag}"
            )
        if self._graph is None:
            self._graph = graph_from_generators(self.ambient, self.words)
        return self._graph

    def contains(self, elem):
        return self.graph().member(elem)

    def label(self):
        return f"<{len(self.words)} words>"


class BSCyclicHandle(SubgroupHandle):
    """The subgroup of BS(1,n) generated by s^k (k = 0 gives the trivial one).

    These express the conjugation chain t^-1 <s> t = <s^n> that defeats
    finite separation.
    """

    def __init__(self, ambient, k):
        if ambient.kind != "bs":
            raise GroupError("BSCyclic handles need a BS(1,n) ambient group")
        self.ambient = ambient
        self.k = abs(k)

    def contains(self, elem):
        self.ambient.check_same(elem)
        if elem.p or elem.q:
            return False
        if self.k == 0:
            return elem.m == 0
        return elem.m % self.k == 0

    def label(self):
        return f"<s^{self.k}>"


class PredicateHandle(SubgroupHandle):
    """A subgroup given only by a membership predicate.

    This is how infinite-rank subgroups enter: constructions only ever
    query membership on finite windows.
    """

    def __init__(self, ambient, fn, name="predicate"):
        self.ambient = ambient
        self.fn = fn
        self.name = name

    def contains(self, elem):
        return bool(self.fn(elem))

    def label(self):
        return self.name


def as_handle(obj):
    if isinstance(obj, SubgroupHandle):
        return obj
    if isinstance(obj, SubgroupGraph):
        return GraphHandle(obj)
    if isinstance(obj, CosetTable):
        return TableHandle(obj)
    raise GroupError(f"cannot interpret {type(obj).__name__} as a subgroup handle")


class ChabautyBall:
    """The basic open set of subgroups agreeing with a center on a window."""

    def __init__(self, center, window):
        self.center = as_handle(center)
        self.window = tuple(sorted(set(window), key=lambda w: w.sort_key()))

    def __repr__(self):
        return f"<ChabautyBall center={self.center.label()} window={len(self.window)}>"


def in_ball(handle, ball):
    """Membership agreement with the ball's center on the whole window."""
    handle = as_handle(handle)
    center = ball.center
    for g in ball.window:
        if handle.contains(g) != center.contains(g):
            return False
    return True


def window_product(window_a, window_b):
    """The set of pairwise products, deduplicated and sorted.

    Callers needing agreement on a product window request it explicitly;
    nothing smaller is assumed to suffice.
    """
    out = set()
    for u in window_a:
        for v in window_b:
            out.add(u * v)
    return tuple(sorted(out, key=lambda w: w.sort_key()))


def symmetrized_window(group, words, with_identity=True):
    """Close a window under inversion, optionally adjoining the identity."""
    out = set(words)
    out.update(w.inverse() for w in words)
    if with_identity:
        out.add(group.identity())
    return tuple(sorted(out, key=lambda w: w.sort_key()))


def fg_approximation(handle, window):
    """The finitely generated subgroup <L & window> of a handle L.

    The result lies in the ball around L with that window: a window
    element is a product of window generators iff it was in L already.
    """
    handle = as_handle(handle)
    gens = [g for g in window if handle.contains(g)]
    return WordListHandle(handle.ambient, gens)


def approx_by_finite_index(graph, window, *, start_table=None):
    """A finite-index subgroup agreeing with a f.g. subgroup on a window.

    Walks the window in canonical order and intersects in a separating
    table for every element that is outside the subgroup but not yet
    excluded.  The result contains the subgroup and matches its trace on
    the window exactly.
    """
    group = graph.group
    table = start_table
    for g in sorted(set(window), key=lambda w: w.sort_key()):
        if graph.member(g):
            continue
        if table is not None and not table.member(g):
            continue
        table = (
            separate(graph, g)
            if table is None
            else intersect_tables(table, separate(graph, g))
        )
    if table is None:
        table = hall_complete(graph)
    return table


def intersect_tables(t1, t2):
    """Diagonal action on reachable state pairs: intersects stabilizers."""
    if t1.group != t2.group:
        raise GroupError("cannot intersect tables over different groups")
    perms, _pairs = _kernels.intersect_perms(t1.perms, t2.perms)
    return CosetTable(t1.group, perms)
