# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must match _kernels.pure output bit for bit."""

from libc.stdlib cimport free, malloc

BACKEND = "native"


def reduce_letters(letters):
    cdef int n = len(letters)
    cdef int *buf = <int *> malloc(n * sizeof(int)) if n else NULL
    cdef int top = 0
    cdef int x
    try:
        for obj in letters:
            x = obj
            if top > 0 and buf[top - 1] == -x:
                top -= 1
            else:
                buf[top] = x
                top += 1
        return [buf[i] for i in range(top)]
    finally:
        if buf != NULL:
            free(buf)


cdef int _find(int *parent, int x):
    cdef int root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def fold_edges(nv, edges, nlabels):
    cdef int n = nv
    cdef int nl = nlabels
    cdef int width = 2 * nl
    cdef int i, u, v, lab, w, a, b, k, t, root
    cdef int *parent = <int *> malloc(n * sizeof(int))
    # slot layout per vertex: [out_1, in_1, out_2, in_2, ...]
    cdef int *adj = <int *> malloc(<size_t> n * width * sizeof(int))
    for i in range(n):
        parent[i] = i
    for i in range(n * width):
        adj[i] = -1
    pend = [(int(e[0]), int(e[1]), int(e[2])) for e in edges]
    try:
        while pend:
            u, lab, v = pend.pop()
            u = _find(parent, u)
            v = _find(parent, v)
            w = adj[u * width + 2 * (lab - 1)]
            if w != -1 and _find(parent, w) != v:
                a = _find(parent, w)
                b = v
                # merge b into a, re-queueing b's edges
                parent[b] = a
                for k in range(nl):
                    t = adj[b * width + 2 * k]
                    if t != -1:
                        pend.append((a, k + 1, t))
                    t = adj[b * width + 2 * k + 1]
                    if t != -1:
                        pend.append((t, k + 1, a))
                for k in range(width):
                    adj[b * width + k] = -1
                pend.append((u, lab, v))
                continue
            w = adj[v * width + 2 * (lab - 1) + 1]
            if w != -1 and _find(parent, w) != u:
                a = _find(parent, w)
                b = u
                parent[b] = a
                for k in range(nl):
                    t = adj[b * width + 2 * k]
                    if t != -1:
                        pend.append((a, k + 1, t))
                    t = adj[b * width + 2 * k + 1]
                    if t != -1:
                        pend.append((t, k + 1, a))
                for k in range(width):
                    adj[b * width + k] = -1
                pend.append((u, lab, v))
                continue
            adj[u * width + 2 * (lab - 1)] = v
            adj[v * width + 2 * (lab - 1) + 1] = u

        number = <int *> malloc(n * sizeof(int))
        order = <int *> malloc(n * sizeof(int))
        try:
            for i in range(n):
                number[i] = -1
            root = _find(parent, 0)
            number[root] = 0
            order[0] = root
            cnt = 1
            head = 0
            while head < cnt:
                u = order[head]
                head += 1
                for k in range(nl):
                    for i in range(2):
                        t = adj[u * width + 2 * k + i]
                        if t != -1:
                            t = _find(parent, t)
                            if number[t] == -1:
                                number[t] = cnt
                                order[cnt] = t
                                cnt += 1
            out = [[-1] * cnt for _ in range(nl)]
            inv = [[-1] * cnt for _ in range(nl)]
            for i in range(cnt):
                u = order[i]
                for k in range(nl):
                    t = adj[u * width + 2 * k]
                    if t != -1:
                        out[k][i] = number[_find(parent, t)]
                    t = adj[u * width + 2 * k + 1]
                    if t != -1:
                        inv[k][i] = number[_find(parent, t)]
            return cnt, out, inv
        finally:
            free(number)
            free(order)
    finally:
        free(parent)
        free(adj)


def core_trim(n, out, inv, nlabels):
    cdef int nv = n
    cdef int nl = nlabels
    cdef int s, t, lab
    deg = [0] * nv
    alive = [True] * nv
    cout = [list(col) for col in out]
    cinv = [list(col) for col in inv]
    for lab in range(nl):
        for s in range(nv):
            if cout[lab][s] != -1:
                deg[s] += 1
                deg[cout[lab][s]] += 1
    queue = [s for s in range(1, nv) if deg[s] <= 1]
    while queue:
        s = queue.pop()
        if not alive[s] or deg[s] > 1:
            continue
        alive[s] = False
        for lab in range(nl):
            t = cout[lab][s]
            if t != -1 and alive[t]:
                deg[t] -= 1
                cout[lab][s] = -1
                cinv[lab][t] = -1
                if t != 0 and deg[t] <= 1:
                    queue.append(t)
            t = cinv[lab][s]
            if t != -1 and alive[t]:
                deg[t] -= 1
                cinv[lab][s] = -1
                cout[lab][t] = -1
                if t != 0 and deg[t] <= 1:
                    queue.append(t)
    edges = []
    for lab in range(nl):
        for s in range(nv):
            if alive[s] and cout[lab][s] != -1 and alive[cout[lab][s]]:
                edges.append((s, lab + 1, cout[lab][s]))
    return fold_edges(nv, edges, nl)


def walk_graph(out, inv, state, letters):
    cdef int s = state
    cdef int x
    for obj in letters:
        x = obj
        if x > 0:
            s = out[x - 1][s]
        else:
            s = inv[-x - 1][s]
        if s == -1:
            return -1
    return s


def complete_partial(n, out, inv, nlabels):
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


cdef int *_flatten(perms, int nl, int d) except NULL:
    cdef int *flat = <int *> malloc(<size_t> nl * d * sizeof(int))
    cdef int lab, s
    for lab in range(nl):
        col = perms[lab]
        for s in range(d):
            flat[lab * d + s] = col[s]
    return flat


def walk_table(perms, invs, state, letters):
    # single-word walks are too short to amortize a flatten
    cdef int s = state
    cdef int x
    for obj in letters:
        x = obj
        if x > 0:
            s = perms[x - 1][s]
        else:
            s = invs[-x - 1][s]
    return s


def walk_table_many(perms, invs, state, words):
    cdef int nl = len(perms)
    cdef int d = len(perms[0]) if nl else 1
    cdef int *fwd = _flatten(perms, nl, d)
    cdef int *bwd = _flatten(invs, nl, d)
    cdef int s, x
    res = []
    try:
        for letters in words:
            s = state
            for obj in letters:
                x = obj
                if x > 0:
                    s = fwd[(x - 1) * d + s]
                else:
                    s = bwd[(-x - 1) * d + s]
            res.append(s)
        return res
    finally:
        free(fwd)
        free(bwd)


def intersect_perms(perms1, perms2):
    cdef int nl = len(perms1)
    cdef int d1 = len(perms1[0]) if nl else 1
    cdef int d2 = len(perms2[0]) if nl else 1
    invs1 = invert_perms(perms1)
    invs2 = invert_perms(perms2)
    cdef int *f1 = _flatten(perms1, nl, d1)
    cdef int *b1 = _flatten(invs1, nl, d1)
    cdef int *f2 = _flatten(perms2, nl, d2)
    cdef int *b2 = _flatten(invs2, nl, d2)
    cdef int *number = <int *> malloc(<size_t> d1 * d2 * sizeof(int))
    cdef int i, a, b, na, nb, key, head, cnt, lab
    try:
        for i in range(d1 * d2):
            number[i] = -1
        pairs = [(0, 0)]
        number[0] = 0
        head = 0
        cnt = 1
        while head < cnt:
            a, b = pairs[head]
            head += 1
            for lab in range(nl):
                na = f1[lab * d1 + a]
                nb = f2[lab * d2 + b]
                key = na * d2 + nb
                if number[key] == -1:
                    number[key] = cnt
                    pairs.append((na, nb))
                    cnt += 1
                na = b1[lab * d1 + a]
                nb = b2[lab * d2 + b]
                key = na * d2 + nb
                if number[key] == -1:
                    number[key] = cnt
                    pairs.append((na, nb))
                    cnt += 1
        perms = [[0] * cnt for _ in range(nl)]
        for i in range(cnt):
            a, b = pairs[i]
            for lab in range(nl):
                perms[lab][i] = number[f1[lab * d1 + a] * d2 + f2[lab * d2 + b]]
        return perms, pairs
    finally:
        free(f1)
        free(b1)
        free(f2)
        free(b2)
        free(number)


def symmdiff_size(sorted_a, sorted_b):
    cdef int na = len(sorted_a)
    cdef int nb = len(sorted_b)
    cdef int i = 0, j = 0, common = 0
    cdef long long x, y
    while i < na and j < nb:
        x = sorted_a[i]
        y = sorted_b[j]
        if x == y:
            common += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return na + nb - 2 * common
