"""Pure-Python kernels: word reduction, graph folding, table walks.

These are the hot inner loops of the toolkit.  A compiled twin lives in
``_native.pyx``; both implementations must produce bit-identical output
(the canonical renumbering below is part of the contract, not a detail).
"""

BACKEND = "pure"


def reduce_letters(letters):
    """Freely reduce a sequence of signed generator indices.

    Letters are nonzero ints, ``+i`` for the i-th generator and ``-i``
    for its inverse.  Returns a new list with all adjacent inverse pairs
    cancelled.
    """
    out = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return out


def fold_edges(nv, edges, nlabels):
    """Fold a labeled graph into a deterministic, co-deterministic one.

    ``edges`` is a list of ``(u, lab, v)`` triples with ``1 <= lab <=
    nlabels`` meaning an edge ``u --lab--> v``.  Vertices are ``0..nv-1``
    and vertex 0 is the base; it is never removed.  Returns ``(n, out,
    inv)`` where ``out[lab-1][s]`` / ``inv[lab-1][s]`` give the target of
    the outgoing / incoming lab-edge at state ``s`` (``-1`` if absent),
    renumbered canonically by BFS from the base with labels visited in
    the order ``+1, -1, +2, -2, ...``.  Unreachable vertices are dropped.
    """
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj = [dict() for _ in range(nv)]  # key: +lab out-edge, -lab in-edge
    pend = [(u, lab, v) for (u, lab, v) in edges]

    def union(a, b):
        a, b = find(a), find(b)
        if a == b:
            return a
        if len(adj[a]) < len(adj[b]):
            a, b = b, a
        parent[b] = a
        moved = adj[b]
        adj[b] = {}
        for k, t in moved.items():
            if k > 0:
                pend.append((a, k, t))
            else:
                pend.append((t, -k, a))
        return a

    while pend:
        u, lab, v = pend.pop()
        u, v = find(u), find(v)
        w = adj[u].get(lab)
        if w is not None and find(w) != v:
            union(find(w), v)
            pend.append((u, lab, v))
            continue
        w = adj[v].get(-lab)
        if w is not None and find(w) != u:
            union(find(w), u)
            pend.append((u, lab, v))
            continue
        adj[find(u)][lab] = find(v)
        adj[find(v)][-lab] = find(u)

    # canonical BFS renumbering from the base
    base = find(0)
    number = {base: 0}
    order = [base]
    head = 0
    while head < len(order):
        x = order[head]
        head += 1
        for lab in range(1, nlabels + 1):
            for key in (lab, -lab):
                t = adj[x].get(key)
                if t is None:
                    continue
                t = find(t)
                if t not in number:
                    number[t] = len(order)
                    order.append(t)
    n = len(order)
    out = [[-1] * n for _ in range(nlabels)]
    inv = [[-1] * n for _ in range(nlabels)]
    for x in order:
        i = number[x]
        for lab in range(1, nlabels + 1):
            t = adj[x].get(lab)
            if t is not None:
                out[lab - 1][i] = number[find(t)]
            t = adj[x].get(-lab)
            if t is not None:
                inv[lab - 1][i] = number[find(t)]
    return n, out, inv


def core_trim(n, out, inv, nlabels):
    """Drop non-base vertices of degree <= 1, cascading, then renumber.

    The base vertex 0 is kept no matter its degree.
    """
    alive = [True] * n
    deg = [0] * n
    for lab in range(nlabels):
        for s in range(n):
            if out[lab][s] != -1:
                deg[s] += 1
                deg[out[lab][s]] += 1
    queue = [s for s in range(1, n) if deg[s] <= 1]
    while queue:
        s = queue.pop()
        if not alive[s] or deg[s] > 1:
            continue
        alive[s] = False
        for lab in range(nlabels):
            t = out[lab][s]
            if t != -1 and alive[t]:
                deg[t] -= 1
                out[lab][s] = -1
                inv[lab][t] = -1
                if t != 0 and deg[t] <= 1:
                    queue.append(t)
            t = inv[lab][s]
            if t != -1 and alive[t]:
                deg[t] -= 1
                inv[lab][s] = -1
                out[lab][t] = -1
                if t != 0 and deg[t] <= 1:
                    queue.append(t)
    edges = []
    for lab in range(nlabels):
        for s in range(n):
            if alive[s] and out[lab][s] != -1 and alive[out[lab][s]]:
                edges.append((s, lab + 1, out[lab][s]))
    return fold_edges(n, edges, nlabels)


def walk_graph(out, inv, state, letters):
    """Follow a signed-letter word through a partial graph; -1 if stuck."""
    for x in letters:
        arr = out[x - 1] if x > 0 else inv[-x - 1]
        state = arr[state]
        if state == -1:
            return -1
    return state


def complete_partial(n, out, inv, nlabels):
    """Complete each label's partial injection to a permutation.

    Unsaturated sources are matched to unsaturated targets in vertex
    index order, which makes the completion deterministic.
    """
    perms = []
    for lab in range(nlabels):
        col = list(out[lab])
        sources = [s for s in range(n) if col[s] == -1]
        targets = [s for s in range(n) if inv[lab][s] == -1]
        if len(sources) != len(targets):
            raise ValueError("partial map is not an injection")
        for s, t in zip(sources, targets):
            col[s] = t
        perms.append(col)
    return perms


def invert_perms(perms):
    invs = []
    for p in perms:
        q = [0] * len(p)
        for i, v in enumerate(p):
            q[v] = i
        invs.append(q)
    return invs


def walk_table(perms, invs, state, letters):
    """Follow a signed-letter word through total permutation columns."""
    for x in letters:
        if x > 0:
            state = perms[x - 1][state]
        else:
            state = invs[-x - 1][state]
    return state


def walk_table_many(perms, invs, state, words):
    """Walk many words from one state; returns the list of end states."""
    res = []
    for letters in words:
        s = state
        for x in letters:
            if x > 0:
                s = perms[x - 1][s]
            else:
                s = invs[-x - 1][s]
        res.append(s)
    return res


def intersect_perms(perms1, perms2):
    """Diagonal action on reachable state pairs from (0, 0).

    Returns ``(perms, pairs)`` where state i of the result corresponds
    to ``pairs[i]`` and states are numbered in BFS discovery order with
    labels visited in the order ``+1, -1, +2, -2, ...``.
    """
    nlabels = len(perms1)
    d2 = len(perms2[0]) if nlabels else 1
    invs1 = invert_perms(perms1)
    invs2 = invert_perms(perms2)
    number = {0: 0}
    pairs = [(0, 0)]
    head = 0
    while head < len(pairs):
        a, b = pairs[head]
        head += 1
        for lab in range(nlabels):
            for p1, p2 in ((perms1[lab], perms2[lab]), (invs1[lab], invs2[lab])):
                key = p1[a] * d2 + p2[b]
                if key not in number:
                    number[key] = len(pairs)
                    pairs.append((p1[a], p2[b]))
    n = len(pairs)
    perms = [[0] * n for _ in range(nlabels)]
    for i, (a, b) in enumerate(pairs):
        for lab in range(nlabels):
            perms[lab][i] = number[perms1[lab][a] * d2 + perms2[lab][b]]
    return perms, pairs


def symmdiff_size(sorted_a, sorted_b):
    """|A delta B| for two sorted lists of distinct ints."""
    i = j = common = 0
    na, nb = len(sorted_a), len(sorted_b)
    while i < na and j < nb:
        x, y = sorted_a[i], sorted_b[j]
        if x == y:
            common += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return na + nb - 2 * common
