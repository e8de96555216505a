"""Finitely generated subgroups of free groups as folded core automata.

A subgroup is a based, labeled graph that is folded (at most one in- and
one out-edge per label at each vertex); the loops at the base vertex
spell exactly the subgroup elements.  Completing the partial edge maps
to permutations yields a finite-index overgroup, and attaching a word as
a hair before completing excludes that word from the overgroup: the
constructive content of separability for free groups.
"""

from __future__ import annotations

from . import _kernels
from .groups import BSWord, FreeWord, GroupError, ProductWord


class PreconditionError(ValueError):
    """An operation was called outside its contract."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SubgroupGraph:
    """Folded core automaton of a finitely generated subgroup of F_n."""

    def __init__(self, group, n, out, inv):
        self.group = group
        self.n = n
        self.out = out
        self.inv = inv
        self.base = 0

    @classmethod
    def from_generators(cls, group, words, trim=True):
        """Fold the wedge of generator loops into a core graph."""
        if group.kind != "free":
            raise GroupError("subgroup graphs live in finite-rank free groups")
        nl = group.nlabels
        edges = []
        nv = 1
        for w in words:
            group.check_same(w)
            cur = 0
            letters = w.letters
            for i, x in enumerate(letters):
                nxt = 0 if i == len(letters) - 1 else nv
                if nxt:
                    nv += 1
                if x > 0:
                    edges.append((cur, x, nxt))
                else:
                    edges.append((nxt, -x, cur))
                cur = nxt
        n, out, inv = _kernels.fold_edges(nv, edges, nl)
        if trim:
            n, out, inv = _kernels.core_trim(n, out, inv, nl)
        return cls(group, n, out, inv)

    @property
    def nlabels(self):
        return self.group.nlabels

    def edges(self):
        for lab in range(self.nlabels):
            for s in range(self.n):
                t = self.out[lab][s]
                if t != -1:
                    yield (s, lab + 1, t)

    def walk(self, state, letters):
        return _kernels.walk_graph(self.out, self.inv, state, letters)

    def member(self, word):
        """True iff the word spells a loop at the base vertex."""
        self.group.check_same(word)
        return self.walk(self.base, word.letters) == self.base

    def with_hair(self, word):
        """The graph with ``word`` attached as a path at the base, folded.

        No core trim: the hair must survive so its endpoint witnesses
        non-membership after completion.
        """
        self.group.check_same(word)
        edges = list(self.edges())
        nv = self.n
        cur = 0
        for x in word.letters:
            nxt = nv
            nv += 1
            if x > 0:
                edges.append((cur, x, nxt))
            else:
                edges.append((nxt, -x, cur))
            cur = nxt
        n, out, inv = _kernels.fold_edges(nv, edges, self.nlabels)
        return SubgroupGraph(self.group, n, out, inv)

    def to_json(self):
        names = self.group.generator_names()
        edges = {}
        for s, lab, t in self.edges():
            edges.setdefault(names[lab - 1], []).append([s, t])
        return {"vertices": self.n, "base": self.base, "edges": edges}

    def to_dot(self):
        return _dot("subgroup_graph", self.group, self.n, self.edges(), self.base)

    def __repr__(self):
        return f"<SubgroupGraph {self.group.tag} vertices={self.n}>"


class CosetTable:
    """Total permutation action of the marked generators on 0..d-1.

    State 0 is the subgroup itself: the stabilizer of 0 is a subgroup of
    index equal to the degree when the table is transitive.
    """

    def __init__(self, group, perms):
        self.group = group
        self.perms = [list(p) for p in perms]
        for p in self.perms:
            if sorted(p) != list(range(len(p))):
                raise GroupError("coset table columns must be permutations")
        self.invs = _kernels.invert_perms(self.perms)

    @property
    def degree(self):
        return len(self.perms[0]) if self.perms else 1

    def walk(self, state, letters):
        return _kernels.walk_table(self.perms, self.invs, state, letters)

    def walk_element(self, state, elem):
        """Read an element along the table, written order, any group kind."""
        return _walk_element(self, state, elem, self.group, 0)

    def member(self, elem):
        """Stabilizer-of-0 membership."""
        self.group.check_same(elem)
        return self.walk_element(0, elem) == 0

    def left_act(self, elem, state):
        """The left action on states: reading the inverse element."""
        return self.walk_element(state, elem.inverse())

    def is_transitive(self):
        seen = {0}
        stack = [0]
        while stack:
            s = stack.pop()
            for p in self.perms:
                if p[s] not in seen:
                    seen.add(p[s])
                    stack.append(p[s])
            for p in self.invs:
                if p[s] not in seen:
                    seen.add(p[s])
                    stack.append(p[s])
        return len(seen) == self.degree

    def check_relations(self):
        """Verify the marked group's defining relations state by state."""
        g = self.group
        if g.kind == "bs":
            ps, pt = self.perms[0], self.perms[1]
            its = self.invs[1]
            for s in range(self.degree):
                lhs = pt[_pow_state(ps, its[s], 1)]
                rhs = _pow_state(ps, s, g.n)
                if lhs != rhs:
                    return False
        if g.kind == "free_product":
            # factors carry their own relations; free products add none
            split = g.left.nlabels
            left = CosetTable(g.left, self.perms[:split])
            right = CosetTable(g.right, self.perms[split:])
            return left.check_relations() and right.check_relations()
        return True

    def to_json(self):
        names = self.group.generator_names()
        edges = {}
        for lab, p in enumerate(self.perms):
            edges[names[lab]] = [[s, p[s]] for s in range(self.degree)]
        return {"vertices": self.degree, "base": 0, "edges": edges}

    def to_dot(self):
        def gen():
            for lab, p in enumerate(self.perms):
                for s in range(self.degree):
                    yield (s, lab + 1, p[s])

        return _dot("coset_table", self.group, self.degree, gen(), 0)

    def __repr__(self):
        return f"<CosetTable {self.group.tag} degree={self.degree}>"


def _pow_state(perm, state, m):
    """Apply the m-th power of a permutation to one state via its cycle."""
    cycle = [state]
    s = perm[state]
    while s != state:
        cycle.append(s)
        s = perm[s]
    return cycle[m % len(cycle)]


def _walk_element(table, state, elem, group, offset):
    if isinstance(elem, FreeWord):
        letters = [x + offset if x > 0 else x - offset for x in elem.letters]
        return table.walk(state, letters)
    if isinstance(elem, BSWord):
        for _ in range(elem.p):
            state = table.perms[offset + 1][state]
        state = _pow_state(table.perms[offset], state, elem.m)
        for _ in range(elem.q):
            state = table.invs[offset + 1][state]
        return state
    if isinstance(elem, ProductWord):
        for side, el in elem.syllables:
            off = offset + (group._split if side else 0)
            state = _walk_element(table, state, el, group.factor(side), off)
        return state
    raise GroupError(f"cannot walk {type(elem).__name__} on a table")


def _dot(name, group, n, edges, base):
    names = group.generator_names()
    lines = [f"digraph {name} {{"]
    for v in range(n):
        shape = "doublecircle" if v == base else "circle"
        lines.append(f'  {v} [shape={shape}];')
    for s, lab, t in edges:
        lines.append(f'  {s} -> {t} [label="{names[lab - 1]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_from_generators(group, words):
    """Folded core graph whose base loops are exactly <words>."""
    return SubgroupGraph.from_generators(group, words)


def member(word, graph):
    return graph.member(word)


def hall_complete(graph):
    """Complete the partial edge maps to permutations, index order.

    The stabilizer of state 0 in the result is a finite-index subgroup
    containing the graph's subgroup; every loop of the graph stays a
    loop in the table.
    """
    perms = _kernels.complete_partial(
        graph.n, graph.out, graph.inv, graph.nlabels
    )
    return CosetTable(graph.group, perms)


def separate(graph, word):
    """A finite-index overgroup of the subgroup that excludes ``word``.

    Attaches the word as a hair at the base, folds, completes.  The
    hair's endpoint cannot fold onto the base precisely because the word
    is not in the subgroup, so the completed table moves state 0.
    """
    if graph.member(word):
        raise PreconditionError(
            "cannot separate a member from its own subgroup", witness=word
        )
    haired = graph.with_hair(word)
    table = hall_complete(haired)
    assert table.walk(0, word.letters) != 0
    return table


def table_stabilizer_membership(word, table):
    """True iff the word fixes state 0 under the table action."""
    return table.member(word)
