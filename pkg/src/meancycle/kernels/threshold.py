"""
First cycle of the edge-insertion process (edges added in increasing
weight order). The closing edge's weight is the min max-weight.
"""
import numpy as np

from .._accel import njit


@njit(cache=True)
def _find(parent, a):
    root = a
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


@njit(cache=True)
def first_cycle_undirected(n, us, vs):
    """Union-find over edges in the given order.

    Returns (index of the closing edge, forest path from us[e] to vs[e]) or
    (-1, empty) when the edges form a forest.
    """
    m = us.shape[0]
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    head = np.full(n, -1, np.int64)
    nxt = np.empty(2 * m, np.int64)
    to = np.empty(2 * m, np.int64)
    n_adj = 0
    for e in range(m):
        u = us[e]
        v = vs[e]
        a = _find(parent, u)
        b = _find(parent, v)
        if a == b:
            # BFS in the forest from u to v
            prev = np.full(n, -1, np.int64)
            queue = np.empty(n, np.int64)
            prev[u] = u
            queue[0] = u
            lo = 0
            hi = 1
            while lo < hi:
                x = queue[lo]
                lo += 1
                if x == v:
                    break
                j = head[x]
                while j >= 0:
                    y = to[j]
                    if prev[y] < 0:
                        prev[y] = x
                        queue[hi] = y
                        hi += 1
                    j = nxt[j]
            length = 1
            x = v
            while x != u:
                x = prev[x]
                length += 1
            path = np.empty(length, np.int64)
            x = v
            for i in range(length - 1, -1, -1):
                path[i] = x
                x = prev[x]
            return e, path
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        to[n_adj] = v
        nxt[n_adj] = head[u]
        head[u] = n_adj
        n_adj += 1
        to[n_adj] = u
        nxt[n_adj] = head[v]
        head[v] = n_adj
        n_adj += 1
    return -1, np.empty(0, np.int64)


@njit(cache=True)
def first_cycle_directed(n, us, vs):
    """Insert arcs in order; before adding u -> v, BFS from v over the
    arcs present. Returns (index of closing arc, path v ... u) or (-1, empty).
    """
    m = us.shape[0]
    head = np.full(n, -1, np.int64)
    nxt = np.empty(m, np.int64)
    to = np.empty(m, np.int64)
    stamp = np.full(n, -1, np.int64)
    prev = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    for e in range(m):
        u = us[e]
        v = vs[e]
        stamp[v] = e
        prev[v] = v
        queue[0] = v
        lo = 0
        hi = 1
        hit = v == u
        while lo < hi and not hit:
            x = queue[lo]
            lo += 1
            j = head[x]
            while j >= 0:
                y = to[j]
                if stamp[y] != e:
                    stamp[y] = e
                    prev[y] = x
                    if y == u:
                        hit = True
                        break
                    queue[hi] = y
                    hi += 1
                j = nxt[j]
        if hit:
            length = 1
            x = u
            while x != v:
                x = prev[x]
                length += 1
            path = np.empty(length, np.int64)
            x = u
            for i in range(length - 1, -1, -1):
                path[i] = x
                x = prev[x]
            return e, path
        to[e] = v
        nxt[e] = head[u]
        head[u] = e
    return -1, np.empty(0, np.int64)
