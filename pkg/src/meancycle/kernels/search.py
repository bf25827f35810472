"""
Depth-first searches over simple paths of a dense weight matrix.

All three searches keep an explicit stack (path, prefix weight, next
neighbour) so they compile under numba and also run as plain Python.
"""
import numpy as np

from .._accel import njit


@njit(cache=True)
def enumerate_min_mean(W, directed):
    """Exhaustive minimum mean over simple cycles.

    Cycles are visited once each in canonical form: the start is the
    smallest vertex, and undirected cycles are taken in the direction whose
    second vertex is smaller than the last. Returns (best mean, witness
    array, counts by length).
    """
    n = W.shape[0]
    kmin = 2 if directed else 3
    counts = np.zeros(n + 1, np.int64)
    best = np.inf
    best_cyc = np.empty(0, np.int64)
    path = np.empty(n, np.int64)
    ptr = np.empty(n, np.int64)
    acc = np.empty(n)
    onpath = np.zeros(n, np.bool_)
    for s in range(n):
        path[0] = s
        acc[0] = 0.0
        ptr[0] = s + 1
        onpath[s] = True
        depth = 0
        while depth >= 0:
            v = path[depth]
            t = ptr[depth]
            if t < n:
                ptr[depth] = t + 1
                if onpath[t]:
                    continue
                S = acc[depth] + W[v, t]
                k = depth + 2
                if k >= kmin and (directed or path[1] < t):
                    counts[k] += 1
                    mean = (S + W[t, s]) / k
                    if mean < best:
                        best = mean
                        best_cyc = np.empty(k, np.int64)
                        best_cyc[:depth + 1] = path[:depth + 1]
                        best_cyc[depth + 1] = t
                if depth + 2 < n:
                    depth += 1
                    path[depth] = t
                    acc[depth] = S
                    ptr[depth] = s + 1
                    onpath[t] = True
            else:
                if depth > 0:
                    onpath[v] = False
                depth -= 1
        onpath[s] = False
    return best, best_cyc, counts


@njit(cache=True)
def light_census(W, directed, c, k_max):
    """Counts of c-light simple cycles by length up to ``k_max``.

    Paths are abandoned once their weight exceeds ``c * k_max / n``: every
    completing cycle of length k <= k_max weighs at most ``c * k / n``.
    """
    n = W.shape[0]
    kmin = 2 if directed else 3
    counts = np.zeros(k_max + 1, np.int64)
    if k_max < kmin:
        return counts
    unit = c / n
    budget = unit * k_max
    path = np.empty(k_max + 1, np.int64)
    ptr = np.empty(k_max + 1, np.int64)
    acc = np.empty(k_max + 1)
    onpath = np.zeros(n, np.bool_)
    for s in range(n):
        path[0] = s
        acc[0] = 0.0
        ptr[0] = s + 1
        onpath[s] = True
        depth = 0
        while depth >= 0:
            v = path[depth]
            t = ptr[depth]
            if t < n:
                ptr[depth] = t + 1
                if onpath[t]:
                    continue
                S = acc[depth] + W[v, t]
                if S > budget:
                    continue
                k = depth + 2
                if k >= kmin and (directed or path[1] < t):
                    if S + W[t, s] <= unit * k:
                        counts[k] += 1
                if k < k_max:
                    depth += 1
                    path[depth] = t
                    acc[depth] = S
                    ptr[depth] = s + 1
                    onpath[t] = True
            else:
                if depth > 0:
                    onpath[v] = False
                depth -= 1
        onpath[s] = False
    return counts


@njit(cache=True)
def sorted_light_rows(W, tau):
    """CSR of entries with weight <= tau, each row sorted ascending."""
    n = W.shape[0]
    indptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        cnt = 0
        for j in range(n):
            if W[i, j] <= tau:
                cnt += 1
        indptr[i + 1] = indptr[i] + cnt
    m = indptr[n]
    indices = np.empty(m, np.int64)
    costs = np.empty(m)
    row_idx = np.empty(n, np.int64)
    row_w = np.empty(n)
    for i in range(n):
        cnt = 0
        for j in range(n):
            if W[i, j] <= tau:
                row_idx[cnt] = j
                row_w[cnt] = W[i, j]
                cnt += 1
        order = np.argsort(row_w[:cnt], kind="mergesort")
        base = indptr[i]
        for r in range(cnt):
            indices[base + r] = row_idx[order[r]]
            costs[base + r] = row_w[order[r]]
    return indptr, indices, costs


@njit(cache=True)
def prefix_light_search(indptr, indices, costs, directed, bound, node_limit,
                        row_cut=np.inf):
    """Minimum mean cycle among cycles with mean <= ``bound``.

    Any cycle of mean mu has a rotation whose every prefix of l edges weighs
    at most l * mu, so it suffices to grow paths from every start while all
    prefixes stay light against the best mean known so far. Rows must be
    sorted by weight so a failing neighbour ends the row.

    Rows may have been cut at weight ``row_cut``. Reaching the end of a row
    while an edge heavier than the cut would still be admissible sets
    ``truncated``; the answer is then only an upper bound.

    Returns (mean, witness, nodes expanded, completed, truncated). mean is
    +inf when no cycle has mean <= bound; ``completed`` is False when
    ``node_limit`` (> 0) cut the search short.
    """
    n = indptr.shape[0] - 1
    kmin = 2 if directed else 3
    best = bound
    found = False
    best_cyc = np.empty(0, np.int64)
    path = np.empty(n + 1, np.int64)
    ptr = np.empty(n + 1, np.int64)
    acc = np.empty(n + 1)
    onpath = np.zeros(n, np.bool_)
    nodes = 0
    truncated = False
    for s in range(n):
        path[0] = s
        acc[0] = 0.0
        ptr[0] = indptr[s]
        onpath[s] = True
        depth = 0
        while depth >= 0:
            v = path[depth]
            e = ptr[depth]
            if e < indptr[v + 1]:
                ptr[depth] = e + 1
                S = acc[depth] + costs[e]
                k = depth + 1
                if S > k * best:
                    ptr[depth] = indptr[v + 1]
                    continue
                t = indices[e]
                if t == s:
                    if k >= kmin:
                        mean = S / k
                        if mean < best or not found:
                            best = mean
                            found = True
                            best_cyc = path[:k].copy()
                    continue
                if onpath[t]:
                    continue
                depth += 1
                path[depth] = t
                acc[depth] = S
                ptr[depth] = indptr[t]
                onpath[t] = True
                nodes += 1
                if node_limit > 0 and nodes >= node_limit:
                    for d in range(depth + 1):
                        onpath[path[d]] = False
                    return (best if found else np.inf), best_cyc, nodes, False, truncated
            else:
                if (depth + 1) * best - acc[depth] > row_cut:
                    truncated = True
                onpath[v] = False
                depth -= 1
    return (best if found else np.inf), best_cyc, nodes, True, truncated
