"""
Exact minimum mean-weight cycle solvers, the min max-weight cycle, and
light-cycle counting.

Five exact routes to the minimum mean are provided so that each can be
checked against the others:

``karp``         Karp's dynamic program on the state graph.
``howard``       policy iteration on the state graph.
``brute_force``  enumeration of every simple cycle (n <= 9).
``pruned_karp``  Karp restricted to arcs lighter than ``n`` times a cheap
                 upper bound, with a certificate that nothing was lost.
``prefix_search``  branch and bound over paths whose every prefix is light.

For undirected graphs the state graph is the non-backtracking arc graph.
Its minimum mean closed walk bounds the simple-cycle optimum from below;
when the walk it returns is not a simple cycle, the solver finishes with a
prefix search started at that lower bound.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _accel
from .instances import Cycle, GraphInstance, Orientation
from .kernels import cycles as kc
from .kernels import search as ks
from .kernels import threshold as kt

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 9
# Karp keeps an (N+1) x N table over states; undirected states are arcs.
KARP_MAX_STATES = 5000


class Solver(str, Enum):
    KARP = "karp"
    HOWARD = "howard"
    BRUTE_FORCE = "brute_force"
    PRUNED_KARP = "pruned_karp"
    PREFIX_SEARCH = "prefix_search"
    THRESHOLD = "threshold"


@dataclass
class SolveResult:
    min_mean: float
    witness: Cycle
    solver: Solver
    certified_exact: bool
    n: int
    orientation: Orientation
    seed: int | None = None
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def length(self):
        return self.witness.length

    def to_dict(self):
        return {
            "min_mean": self.min_mean,
            "length": self.witness.length,
            "vertices": list(self.witness.vertices),
            "solver": self.solver.value,
            "certified_exact": self.certified_exact,
            "seed": self.seed,
            "n": self.n,
            "orientation": self.orientation.value,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


@dataclass
class LightCycleCensus:
    counts: dict
    c: float
    k_max: int
    orientation: Orientation

    @property
    def total(self):
        return sum(self.counts.values())


def _result(g, witness_vertices, solver, certified=True, stats=None, value=None):
    cyc = Cycle.from_vertices(g, witness_vertices)
    mean = cyc.mean_weight if value is None else value
    return SolveResult(mean, cyc, Solver(solver), certified, g.n, g.orientation,
                       g.seed, stats or {})


# -- state graphs -------------------------------------------------------------

def _state_graph(g: GraphInstance, tau=np.inf):
    """(indptr, indices, costs, vertex_of_state)."""
    if g.directed:
        indptr, indices, costs = kc.vertex_csr(g.weights, tau)
        return indptr, indices, costs, np.arange(g.n)
    indptr, indices, costs, _tail, head = kc.arc_csr(g.weights, tau)
    return indptr, indices, costs, head


def _closed_walk_mean(W, verts):
    k = len(verts)
    return sum(W[verts[i], verts[(i + 1) % k]] for i in range(k)) / k


def _best_state_cycle(g, state_cycles, vertex_of_state):
    """Lowest-mean closed walk among state cycles, as a vertex list."""
    best = None
    for sc in state_cycles:
        verts = [int(vertex_of_state[s]) for s in sc]
        m = _closed_walk_mean(g.weights, verts)
        if best is None or m < best[0]:
            best = (m, verts)
    return best


def _is_simple(verts, orientation):
    return len(set(verts)) == len(verts) and len(verts) >= orientation.min_cycle_length


def _karp_states(indptr, indices, costs):
    if _accel.USE_NUMBA:
        return kc.karp(indptr, indices, costs)
    return kc.karp_numpy(indptr, indices, costs)


def _karp_on(g, tau, label):
    if g.directed:
        indptr, indices, costs, vmap = _state_graph(g, tau)
        N = len(indptr) - 1
        transitions = int(len(indices))
    else:
        # arc states, transitions implicit in the non-backtracking kernel
        tail, head, cost = kc.arc_list(g.weights, tau)
        vmap = head
        N = len(tail)
        transitions = None
    if N > KARP_MAX_STATES:
        raise ValueError(
            f"Karp table would have {N} states (limit {KARP_MAX_STATES}); "
            "use howard or prefix_search for this instance")
    if g.directed:
        mu, v, _D, P = _karp_states(indptr, indices, costs)
    elif _accel.USE_NUMBA:
        mu, v, _D, P = kc.karp_nonbacktracking(tail, head, cost, g.n)
    else:
        mu, v, _D, P = kc.karp_nonbacktracking_numpy(tail, head, cost, g.n)
    if v < 0:
        return None
    seq = kc.karp_walk(P, v)
    m, verts = _best_state_cycle(g, kc.walk_cycles(seq), vmap)
    stats = {"states": N, "karp_value": float(mu)}
    if transitions is not None:
        stats["arcs"] = transitions
    if _is_simple(verts, g.orientation):
        return _result(g, verts, label, stats=stats)
    # undirected only: the walk revisits a vertex, so mu is a strict lower bound
    log.debug("karp witness %s not simple; finishing with prefix search", verts)
    res = _prefix_search(g, start=mu)
    res.solver = Solver(label)
    res.stats.update(stats, fallback="prefix_search")
    return res


# -- public solvers -----------------------------------------------------------

def karp_min_mean_cycle(g: GraphInstance) -> SolveResult:
    """Karp: mu = min_v max_k (D_N(v) - D_k(v)) / (N - k)."""
    return _karp_on(g, np.inf, Solver.KARP)


def howard_min_mean_cycle(g: GraphInstance, tol=1e-12, max_iter=10_000) -> SolveResult:
    indptr, indices, costs, vmap = _state_graph(g)
    mu, root, pol, iters = kc.howard(indptr, indices, costs, tol, max_iter)
    states = [root]
    s = int(indices[pol[root]])
    while s != root:
        states.append(s)
        s = int(indices[pol[s]])
    verts = [int(vmap[x]) for x in states]
    stats = {"iterations": int(iters), "states": len(indptr) - 1}
    if _is_simple(verts, g.orientation):
        return _result(g, verts, Solver.HOWARD, stats=stats)
    res = _prefix_search(g, start=mu)
    res.solver = Solver.HOWARD
    res.stats.update(stats, fallback="prefix_search")
    return res


def brute_force_min_mean(g: GraphInstance) -> SolveResult:
    if g.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got n={g.n}")
    best, cyc, counts = ks.enumerate_min_mean(g.weights, g.directed)
    stats = {"cycles_by_length": {k: int(c) for k, c in enumerate(counts) if c}}
    return _result(g, cyc, Solver.BRUTE_FORCE, stats=stats)


def enumerate_cycle_counts(g: GraphInstance) -> dict:
    """Number of simple cycles by length (n <= 9)."""
    return brute_force_min_mean(g).stats["cycles_by_length"]


# scaled bounds n * mu tried in turn; fine steps where the optimum usually sits
_SEARCH_LEVELS = (0.3, 0.34, 0.36, 0.37, 0.38, 0.39, 0.40, 0.41, 0.42, 0.43,
                  0.44, 0.45, 0.47, 0.5, 0.55, 0.6, 0.7, 0.85, 1.0, 1.25, 1.6,
                  2.0, 2.6, 3.3, 4.2, 5.5, 7.0)


def _search_levels(n, start=None):
    if start is not None and np.isfinite(start) and start > 0:
        lv = start * (1.0 + np.array([0.0, 0.005, 0.01, 0.02, 0.035, 0.05, 0.08,
                                      0.12, 0.18, 0.25, 0.35, 0.5, 0.7, 1.0]))
        yield from lv
        b = lv[-1]
    else:
        for c in _SEARCH_LEVELS:
            yield c / n
        b = _SEARCH_LEVELS[-1] / n
    while True:
        b *= 1.5
        yield b


# rows are cut at this many expected entries, then widened on demand
_ROW_CUT_ENTRIES = 48.0


def _prefix_search(g: GraphInstance, start=None, node_limit=0):
    """Exact branch and bound with increasing bounds until a cycle fits.

    The sorted rows are built once, cut at a small weight, and reused by
    every round; a round that reports a cut-off admissible edge is repeated
    on wider rows.
    """
    n = g.n
    total_nodes = 0
    rounds = 0
    cut = _ROW_CUT_ENTRIES / n
    rows = ks.sorted_light_rows(g.weights, cut)
    for bound in _search_levels(n, start):
        while True:
            rounds += 1
            mean, cyc, nodes, done, truncated = ks.prefix_light_search(
                *rows, g.directed, bound, node_limit, cut)
            total_nodes += nodes
            if not truncated or not done:
                break
            cut *= 4.0
            rows = ks.sorted_light_rows(g.weights, cut)
        if np.isfinite(mean):
            stats = {"bound": float(bound), "rounds": rounds,
                     "nodes": int(total_nodes), "row_cut": float(cut)}
            certified = bool(done) and not truncated
            return _result(g, cyc, Solver.PREFIX_SEARCH, certified=certified, stats=stats)
        if not done:
            return None


def prefix_search_min_mean(g: GraphInstance) -> SolveResult:
    """Branch and bound over prefix-light paths (exact, fast on random inputs)."""
    return _prefix_search(g)


def _cheap_upper_bound(g: GraphInstance):
    """Mean and vertices of some short cycle: 2-cycles, triangles through each
    vertex's lightest neighbours, then a node-limited prefix search."""
    W = g.weights
    n = g.n
    best = (np.inf, None)
    if g.directed:
        pair = (W + W.T) / 2.0
        i, j = np.unravel_index(np.argmin(pair), pair.shape)
        best = (float(pair[i, j]), [int(i), int(j)])
    r = min(n - 1, 6)
    near = np.argsort(W, axis=1, kind="stable")[:, :r]
    for u in range(n):
        for a in near[u]:
            for b in near[u]:
                if a == b:
                    continue
                # u -> a -> b -> u
                m = (W[u, a] + W[a, b] + W[b, u]) / 3.0
                if m < best[0]:
                    best = (float(m), [u, int(a), int(b)])
    for c in (0.37, 0.40, 0.45):
        if c / n >= best[0]:
            break
        res = _prefix_search_limited(g, c / n, 20_000)
        if res is not None and res[0] < best[0]:
            best = res
    return best


def _prefix_search_limited(g, bound, node_limit):
    indptr, indices, costs = ks.sorted_light_rows(g.weights, bound * g.n)
    mean, cyc, _nodes, _done, _cut = ks.prefix_light_search(
        indptr, indices, costs, g.directed, bound, node_limit)
    if np.isfinite(mean):
        return float(mean), [int(v) for v in cyc]
    return None


def pruned_solve(g: GraphInstance) -> SolveResult:
    """Karp on the arcs no heavier than ``n * ub`` for a cheap upper bound ub.

    A cycle beating mean mu has all of its (at most n) edges below ``n * mu``,
    so if the pruned optimum mu_sub satisfies ``n * mu_sub <= n * ub`` nothing
    lighter was pruned away and the answer is exact.
    """
    ub, _verts = _cheap_upper_bound(g)
    if not np.isfinite(ub):
        res = karp_min_mean_cycle(g)
        res.solver = Solver.PRUNED_KARP
        res.stats["fallback"] = "unpruned"
        return res
    tau = g.n * ub
    W = g.weights
    off = ~np.eye(g.n, dtype=bool)
    kept = int(np.count_nonzero(W[off] <= tau))
    res = _karp_on(g, tau, Solver.PRUNED_KARP)
    if res is None or res.min_mean * g.n > tau:
        res = karp_min_mean_cycle(g)
        res.solver = Solver.PRUNED_KARP
        res.stats["fallback"] = "unpruned"
        return res
    res.stats.update(upper_bound=ub, threshold=tau,
                     surviving_fraction=kept / off.sum())
    return res


def min_max_cycle(g: GraphInstance) -> SolveResult:
    """First cycle of the increasing-weight insertion process.

    ``min_mean`` of the result holds the min max-weight.
    """
    n = g.n
    W = g.weights
    top = W[np.isfinite(W)].max()
    t = 2.0 / n
    while True:
        mask = W <= t
        if not g.directed:
            mask = np.triu(mask, 1)
        ii, jj = np.nonzero(mask)
        ww = W[ii, jj]
        order = np.argsort(ww, kind="stable")
        us = ii[order].astype(np.int64)
        vs = jj[order].astype(np.int64)
        if g.directed:
            e, path = kt.first_cycle_directed(n, us, vs)
        else:
            e, path = kt.first_cycle_undirected(n, us, vs)
        if e >= 0:
            break
        if t >= top:
            raise RuntimeError("no cycle in a complete graph")  # unreachable
        t *= 2.0
    value = float(ww[order[e]])
    res = _result(g, path, Solver.THRESHOLD, value=value,
                  stats={"inserted": int(e) + 1})
    return res


def count_light_cycles(g: GraphInstance, c: float, k_max: int) -> LightCycleCensus:
    """Exact counts of cycles with mean <= c/n, per length up to ``k_max``."""
    kmin = g.orientation.min_cycle_length
    if k_max < kmin:
        raise ValueError(f"k_max must be >= {kmin}")
    counts = ks.light_census(g.weights, g.directed, float(c), int(k_max))
    return LightCycleCensus({k: int(counts[k]) for k in range(kmin, k_max + 1)},
                            float(c), int(k_max), g.orientation)


SOLVERS = {
    Solver.KARP: karp_min_mean_cycle,
    Solver.HOWARD: howard_min_mean_cycle,
    Solver.BRUTE_FORCE: brute_force_min_mean,
    Solver.PRUNED_KARP: pruned_solve,
    Solver.PREFIX_SEARCH: prefix_search_min_mean,
}


def solve(g: GraphInstance, solver="prefix_search") -> SolveResult:
    return SOLVERS[Solver(solver)](g)
