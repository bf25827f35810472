"""
Minimum mean cycle on a generic state graph in CSR form
(``indptr``, ``indices``, ``costs``): Karp's dynamic program and Howard's
policy iteration, plus the state-graph builders.

Directed instances use vertices as states. Undirected instances use arcs
``(u, v)`` as states with transitions ``(u, v) -> (v, w)`` for ``w != u``
(no immediate backtracking), so every simple cycle of length >= 3 is a
state cycle whose cost is the cycle weight.
"""
import numpy as np

from .._accel import njit


# -- builders -----------------------------------------------------------------

@njit(cache=True)
def vertex_csr(W, tau):
    """Arcs (i, j), i != j, with W[i, j] <= tau."""
    n = W.shape[0]
    indptr = np.zeros(n + 1, np.int64)
    for i in range(n):
        cnt = 0
        for j in range(n):
            if j != i and W[i, j] <= tau:
                cnt += 1
        indptr[i + 1] = indptr[i] + cnt
    indices = np.empty(indptr[n], np.int64)
    costs = np.empty(indptr[n])
    for i in range(n):
        e = indptr[i]
        for j in range(n):
            if j != i and W[i, j] <= tau:
                indices[e] = j
                costs[e] = W[i, j]
                e += 1
    return indptr, indices, costs


@njit(cache=True)
def arc_csr(W, tau):
    """Non-backtracking arc graph of the undirected edges with weight <= tau.

    Returns (indptr, indices, costs, tail, head); state s is the arc
    tail[s] -> head[s], numbered in (tail, head) lexicographic order.
    """
    n = W.shape[0]
    arc_id = np.full((n, n), -1, np.int64)
    m = 0
    for u in range(n):
        for v in range(n):
            if v != u and W[u, v] <= tau:
                arc_id[u, v] = m
                m += 1
    tail = np.empty(m, np.int64)
    head = np.empty(m, np.int64)
    outdeg = np.zeros(n, np.int64)
    for u in range(n):
        for v in range(n):
            a = arc_id[u, v]
            if a >= 0:
                tail[a] = u
                head[a] = v
                outdeg[u] += 1
    indptr = np.zeros(m + 1, np.int64)
    for a in range(m):
        v = head[a]
        # every arc out of v except the reversal of a
        indptr[a + 1] = indptr[a] + outdeg[v] - 1
    indices = np.empty(indptr[m], np.int64)
    costs = np.empty(indptr[m])
    for a in range(m):
        u = tail[a]
        v = head[a]
        e = indptr[a]
        for w in range(n):
            b = arc_id[v, w]
            if b >= 0 and w != u:
                indices[e] = b
                costs[e] = W[v, w]
                e += 1
    return indptr, indices, costs, tail, head


# -- Karp ---------------------------------------------------------------------

@njit(cache=True)
def _karp_value(D):
    """min_v max_k (D[N, v] - D[k, v]) / (N - k) and its argmin v."""
    N = D.shape[1]
    best = np.inf
    best_v = -1
    for v in range(N):
        dn = D[N, v]
        if dn == np.inf:
            continue
        worst = -np.inf
        for k in range(N):
            dk = D[k, v]
            if dk == np.inf:
                continue
            val = (dn - dk) / (N - k)
            if val > worst:
                worst = val
        if worst < best:
            best = worst
            best_v = v
    return best, best_v

@njit(cache=True)
def karp(indptr, indices, costs):
    """Karp's table D[k, v] (min k-step walk into v from anywhere) and
    predecessor table; returns (mu, argmin state, D, P)."""
    N = indptr.shape[0] - 1
    D = np.full((N + 1, N), np.inf)
    P = np.full((N + 1, N), -1, np.int32)
    D[0, :] = 0.0
    for k in range(1, N + 1):
        for u in range(N):
            du = D[k - 1, u]
            if du == np.inf:
                continue
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                cand = du + costs[e]
                if cand < D[k, v]:
                    D[k, v] = cand
                    P[k, v] = u
    best, best_v = _karp_value(D)
    return best, best_v, D, P


def karp_numpy(indptr, indices, costs):
    """Vectorised Karp: one ``minimum.reduceat`` per level over in-arcs."""
    N = len(indptr) - 1
    src = np.repeat(np.arange(N), np.diff(indptr))
    order = np.lexsort((src, indices))
    s_src = src[order]
    s_dst = indices[order]
    s_cost = costs[order]
    dsts, starts = np.unique(s_dst, return_index=True)
    seg = np.repeat(np.arange(len(dsts)), np.diff(np.append(starts, len(s_dst))))
    D = np.full((N + 1, N), np.inf)
    P = np.full((N + 1, N), -1, np.int32)
    D[0, :] = 0.0
    if len(dsts):
        for k in range(1, N + 1):
            cand = D[k - 1][s_src] + s_cost
            mins = np.minimum.reduceat(cand, starts)
            D[k, dsts] = mins
            hit = np.flatnonzero((cand == mins[seg]) & np.isfinite(cand))
            first_seg, first = np.unique(seg[hit], return_index=True)
            P[k, dsts[first_seg]] = s_src[hit[first]]
    dn = D[N]
    with np.errstate(invalid="ignore"):
        vals = (dn[None, :] - D[:N]) / (N - np.arange(N))[:, None]
    vals[np.isinf(D[:N])] = -np.inf
    worst = vals.max(axis=0)
    worst[np.isinf(dn)] = np.inf
    best_v = int(np.argmin(worst))
    if not np.isfinite(worst[best_v]):
        return np.inf, -1, D, P
    return float(worst[best_v]), best_v, D, P



def arc_list(W, tau):
    """Arcs (tail, head, cost) with W <= tau, numbered as in ``arc_csr``."""
    mask = W <= tau
    np.fill_diagonal(mask, False)
    tail, head = np.nonzero(mask)
    return tail.astype(np.int64), head.astype(np.int64), W[tail, head]


@njit(cache=True)
def karp_nonbacktracking(tail, head, cost, n):
    """Karp on the non-backtracking arc graph without building it.

    The best walk into arc (v, w) extends the best walk into v whose last
    arc does not start at w, so keeping the two best in-arcs per vertex
    makes each level O(arcs). Same return values as ``karp``.
    """
    m = tail.shape[0]
    D = np.full((m + 1, m), np.inf)
    P = np.full((m + 1, m), -1, np.int32)
    D[0, :] = 0.0
    b1 = np.empty(n)
    b2 = np.empty(n)
    a1 = np.empty(n, np.int64)
    a2 = np.empty(n, np.int64)
    for k in range(1, m + 1):
        b1[:] = np.inf
        b2[:] = np.inf
        a1[:] = -1
        a2[:] = -1
        for a in range(m):
            d = D[k - 1, a]
            if d == np.inf:
                continue
            v = head[a]
            if d < b1[v]:
                b2[v] = b1[v]
                a2[v] = a1[v]
                b1[v] = d
                a1[v] = a
            elif d < b2[v]:
                b2[v] = d
                a2[v] = a
        for b in range(m):
            v = tail[b]
            a = a1[v]
            if a >= 0 and tail[a] == head[b]:
                a = a2[v]
            if a >= 0:
                D[k, b] = D[k - 1, a] + cost[b]
                P[k, b] = a
    best, best_v = _karp_value(D)
    return best, best_v, D, P


def karp_nonbacktracking_numpy(tail, head, cost, n):
    m = len(tail)
    D = np.full((m + 1, m), np.inf)
    P = np.full((m + 1, m), -1, np.int32)
    D[0, :] = 0.0

    if m == 0:
        return np.inf, -1, D, P

    def first_min(d):
        best = np.full(n, np.inf)
        np.minimum.at(best, head, d)
        hit = np.flatnonzero((d == best[head]) & np.isfinite(d))
        arg = np.full(n, -1, np.int64)
        vs, first = np.unique(head[hit], return_index=True)
        arg[vs] = hit[first]
        return best, arg

    for k in range(1, m + 1):
        prev = D[k - 1]
        b1, a1 = first_min(prev)
        masked = prev.copy()
        masked[a1[a1 >= 0]] = np.inf
        _b2, a2 = first_min(masked)
        a = a1[tail]
        clash = (a >= 0) & (tail[np.maximum(a, 0)] == head)
        a = np.where(clash, a2[tail], a)
        ok = a >= 0
        D[k, ok] = prev[a[ok]] + cost[ok]
        P[k, ok] = a[ok]
    dn = D[m]
    with np.errstate(invalid="ignore"):
        vals = (dn[None, :] - D[:m]) / (m - np.arange(m))[:, None]
    vals[np.isinf(D[:m])] = -np.inf
    worst = vals.max(axis=0)
    worst[np.isinf(dn)] = np.inf
    best_v = int(np.argmin(worst))
    if not np.isfinite(worst[best_v]):
        return np.inf, -1, D, P
    return float(worst[best_v]), best_v, D, P


def karp_walk(P, v):
    """States of the N-step walk recorded by ``P`` ending at ``v``."""
    N = P.shape[0] - 1
    seq = np.empty(N + 1, np.int64)
    seq[N] = v
    for k in range(N, 0, -1):
        seq[k - 1] = P[k, seq[k]]
    return seq


def walk_cycles(seq):
    """Loop-erase a walk, returning every cycle removed (as state lists)."""
    stack = []
    where = {}
    found = []
    for s in seq.tolist():
        if s in where:
            pos = where[s]
            cyc = stack[pos:]
            found.append(cyc)
            for x in cyc[1:]:
                del where[x]
            del stack[pos + 1:]
        else:
            where[s] = len(stack)
            stack.append(s)
    return found


# -- Howard -------------------------------------------------------------------

@njit(cache=True)
def _evaluate(indptr, indices, costs, pol, eta, x):
    """Values of a policy; returns (best cycle mean, a state on that cycle)."""
    N = pol.shape[0]
    mark = np.zeros(N, np.int8)
    stack = np.empty(N, np.int64)
    pos = np.empty(N, np.int64)
    best = np.inf
    best_root = -1
    for s0 in range(N):
        if mark[s0] == 2:
            continue
        top = 0
        s = s0
        while mark[s] == 0:
            mark[s] = 1
            pos[s] = top
            stack[top] = s
            top += 1
            s = indices[pol[s]]
        if mark[s] == 1:
            p0 = pos[s]
            total = 0.0
            for i in range(p0, top):
                total += costs[pol[stack[i]]]
            length = top - p0
            mean = total / length
            if mean < best:
                best = mean
                best_root = s
            eta[s] = mean
            x[s] = 0.0
            mark[s] = 2
            for i in range(top - 1, p0, -1):
                u = stack[i]
                t = indices[pol[u]]
                eta[u] = mean
                x[u] = costs[pol[u]] - mean + x[t]
                mark[u] = 2
            top = p0
        for i in range(top - 1, -1, -1):
            u = stack[i]
            t = indices[pol[u]]
            eta[u] = eta[t]
            x[u] = costs[pol[u]] - eta[t] + x[t]
            mark[u] = 2
    return best, best_root


@njit(cache=True)
def _improve(indptr, indices, costs, pol, eta, x, tol):
    N = pol.shape[0]
    changed = False
    for s in range(N):
        target = eta[s]
        choice = -1
        for e in range(indptr[s], indptr[s + 1]):
            t = indices[e]
            if eta[t] < target - tol * (1.0 + abs(target)):
                target = eta[t]
                choice = e
        if choice >= 0:
            pol[s] = choice
            changed = True
    if changed:
        return True
    for s in range(N):
        cur = x[s]
        choice = -1
        for e in range(indptr[s], indptr[s + 1]):
            t = indices[e]
            if abs(eta[t] - eta[s]) <= tol * (1.0 + abs(eta[s])):
                val = costs[e] - eta[s] + x[t]
                if val < cur - tol * (1.0 + abs(cur)):
                    cur = val
                    choice = e
        if choice >= 0:
            pol[s] = choice
            changed = True
    return changed


@njit(cache=True)
def howard(indptr, indices, costs, tol, max_iter):
    """Policy iteration. Every state needs an out-arc.

    Runs with tolerance ``tol`` to convergence, then keeps iterating with
    exact comparisons (bounded) so the final policy admits no strict
    improvement. Returns (mean, state on best cycle, policy, iterations).
    """
    N = indptr.shape[0] - 1
    pol = np.empty(N, np.int64)
    for s in range(N):
        best_e = indptr[s]
        for e in range(indptr[s] + 1, indptr[s + 1]):
            if costs[e] < costs[best_e]:
                best_e = e
        pol[s] = best_e
    eta = np.empty(N)
    x = np.empty(N)
    best = np.inf
    root = -1
    it = 0
    exact_rounds = 0
    while it < max_iter:
        it += 1
        best, root = _evaluate(indptr, indices, costs, pol, eta, x)
        if _improve(indptr, indices, costs, pol, eta, x, tol):
            continue
        # exactness sweep
        if exact_rounds >= 16:
            break
        if not _improve(indptr, indices, costs, pol, eta, x, 0.0):
            break
        exact_rounds += 1
    return best, root, pol, it
