"""
Random complete graphs with i.i.d. Exp(1) edge weights, cycles, and the
lightness predicates used throughout the package.

Weights are stored densely as an ``n x n`` float64 array with ``+inf`` on the
diagonal; undirected instances store both triangles.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import _accel
from .kernels import rng
from .kernels.walks import uniform_light_check


class Orientation(str, Enum):
    DIRECTED = "directed"
    UNDIRECTED = "undirected"

    @property
    def min_cycle_length(self):
        return 2 if self is Orientation.DIRECTED else 3


def as_orientation(value) -> Orientation:
    if isinstance(value, Orientation):
        return value
    if isinstance(value, bool):
        return Orientation.DIRECTED if value else Orientation.UNDIRECTED
    try:
        return Orientation(str(value).lower())
    except ValueError:
        raise ValueError(f"unknown orientation {value!r}") from None


@dataclass(frozen=True, eq=False)
class GraphInstance:
    n: int
    orientation: Orientation
    weights: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        w = self.weights
        if w.shape != (self.n, self.n):
            raise ValueError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        w.setflags(write=False)

    @property
    def directed(self) -> bool:
        return self.orientation is Orientation.DIRECTED

    def weight(self, i, j) -> float:
        return float(self.weights[i, j])

    def edges(self):
        """(i, j, w) arrays: all arcs if directed, i < j pairs if undirected."""
        n = self.n
        if self.directed:
            i, j = np.nonzero(~np.eye(n, dtype=bool))
        else:
            i, j = np.triu_indices(n, 1)
        return i, j, self.weights[i, j]

    def __eq__(self, other):
        if not isinstance(other, GraphInstance):
            return NotImplemented
        return (self.n == other.n and self.orientation is other.orientation
                and self.seed == other.seed
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.n, self.orientation, self.seed))


def sample_complete(n: int, orientation="directed", seed: int = 0) -> GraphInstance:
    """Complete graph on ``n`` vertices with Exp(1) weights keyed by (seed, i, j)."""
    orientation = as_orientation(orientation)
    n = int(n)
    if n < orientation.min_cycle_length:
        raise ValueError(
            f"n={n} too small for a {orientation.value} instance "
            f"(need n >= {orientation.min_cycle_length})")
    seed = rng.as_seed(seed)
    symmetric = orientation is Orientation.UNDIRECTED
    if _accel.USE_NUMBA:
        w = rng.sample_dense(n, np.uint64(seed), symmetric)
    else:
        w = rng.sample_dense_numpy(n, seed, symmetric)
    return GraphInstance(n, orientation, w, seed)


def from_weights(weights, orientation="directed", seed=None) -> GraphInstance:
    """Wrap a user-supplied weight matrix (diagonal is ignored)."""
    orientation = as_orientation(orientation)
    w = np.array(weights, dtype=np.float64)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise ValueError("weights must be a square matrix")
    if n < orientation.min_cycle_length:
        raise ValueError(f"n={n} too small for a {orientation.value} instance")
    np.fill_diagonal(w, np.inf)
    off = w[~np.eye(n, dtype=bool)]
    if not (np.all(np.isfinite(off)) and np.all(off > 0)):
        raise ValueError("off-diagonal weights must be finite and positive")
    if orientation is Orientation.UNDIRECTED and not np.array_equal(w, w.T):
        raise ValueError("undirected weights must be symmetric")
    return GraphInstance(n, orientation, w, seed)


# -- cycles -------------------------------------------------------------------

@dataclass(frozen=True)
class Cycle:
    """A simple cycle, stored in canonical rotation with its edge weights.

    ``edge_weights[i]`` is the weight of the edge leaving ``vertices[i]``.
    """
    vertices: tuple
    edge_weights: tuple = field(compare=False)
    orientation: Orientation = Orientation.DIRECTED

    def __post_init__(self):
        k = len(self.vertices)
        if len(set(self.vertices)) != k:
            raise ValueError(f"cycle vertices not distinct: {self.vertices}")
        if k < self.orientation.min_cycle_length:
            raise ValueError(f"{self.orientation.value} cycle needs length >= "
                             f"{self.orientation.min_cycle_length}, got {k}")
        if len(self.edge_weights) != k:
            raise ValueError("one edge weight per vertex required")

    @classmethod
    def from_vertices(cls, g: GraphInstance, vertices) -> "Cycle":
        vs = [int(v) for v in vertices]
        k = len(vs)
        ws = [g.weight(vs[i], vs[(i + 1) % k]) for i in range(k)]
        return cls.canonical(vs, ws, g.orientation)

    @classmethod
    def canonical(cls, vertices, edge_weights, orientation="directed") -> "Cycle":
        orientation = as_orientation(orientation)
        vs = list(vertices)
        ws = list(edge_weights)
        r = vs.index(min(vs))
        vs = vs[r:] + vs[:r]
        ws = ws[r:] + ws[:r]
        if orientation is Orientation.UNDIRECTED and len(vs) > 2 and vs[-1] < vs[1]:
            vs = [vs[0]] + vs[:0:-1]
            # edge leaving vs[i] in the reversed cycle is the old edge into it
            ws = ws[::-1]
        return cls(tuple(vs), tuple(float(w) for w in ws), orientation)

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.edge_weights))

    @property
    def mean_weight(self) -> float:
        return self.total_weight / self.length

    @property
    def max_weight(self) -> float:
        return max(self.edge_weights)


def is_light(cycle: Cycle, c: float, n: int) -> bool:
    """True iff the mean weight is at most ``c / n``."""
    return cycle.mean_weight <= c / n


def is_uniformly_light(cycle: Cycle, A: float, c: float, n: int) -> bool:
    """A-uniform c-lightness: light, and every cyclic subpath P satisfies
    ``weight(P) <= (len(P) + A) * c / n``.

    Runs in O(L) via running extrema of the centred prefix sums.
    """
    if not is_light(cycle, c, n):
        return False
    w = np.asarray(cycle.edge_weights, dtype=np.float64)
    return bool(uniform_light_check(w, float(A), c / n))


def is_uniformly_light_quadratic(edge_weights, A, c, n) -> bool:
    """Reference O(L^2) check over every (start, length) pair."""
    w = np.asarray(edge_weights, dtype=np.float64)
    L = len(w)
    unit = c / n
    if w.sum() > L * unit:
        return False
    prefix = np.concatenate(([0.0], np.cumsum(np.concatenate((w, w)))))
    for a in range(L):
        sums = prefix[a + 1:a + L + 1] - prefix[a]
        lengths = np.arange(1, L + 1)
        if np.any(sums > (lengths + A) * unit):
            return False
    return True


# -- dump / load --------------------------------------------------------------

def dump(g: GraphInstance, path, fmt="csv"):
    """Write an instance as a hex-float CSV edge list or a binary ``.npz``."""
    path = Path(path)
    if fmt == "npz":
        with open(path, "wb") as fh:
            np.savez(fh, n=g.n, orientation=g.orientation.value,
                     seed=-1 if g.seed is None else g.seed,
                     weights=g.weights)
        return
    if fmt != "csv":
        raise ValueError(f"unknown instance format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(dumps_csv(g))


def dumps_csv(g: GraphInstance) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["n", "orientation", "seed"])
    out.writerow([g.n, g.orientation.value, "" if g.seed is None else g.seed])
    out.writerow(["i", "j", "weight"])
    i, j, w = g.edges()
    for a, b, x in zip(i.tolist(), j.tolist(), w.tolist()):
        out.writerow([a, b, float.hex(x)])
    return buf.getvalue()


def loads_csv(text: str) -> GraphInstance:
    rows = csv.reader(io.StringIO(text))
    header = next(rows)
    if [h.strip() for h in header] != ["n", "orientation", "seed"]:
        raise ValueError("missing 'n,orientation,seed' header")
    n_s, orient_s, seed_s = next(rows)
    n = int(n_s)
    orientation = as_orientation(orient_s)
    next(rows)  # i,j,weight
    w = np.full((n, n), np.inf)
    for a, b, x in rows:
        i, j = int(a), int(b)
        w[i, j] = float.fromhex(x)
        if orientation is Orientation.UNDIRECTED:
            w[j, i] = w[i, j]
    seed = int(seed_s) if seed_s.strip() else None
    return from_weights(w, orientation, seed)


def load(path) -> GraphInstance:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"PK":
        with np.load(path) as z:
            seed = int(z["seed"])
            return from_weights(z["weights"], str(z["orientation"]),
                                None if seed < 0 else seed)
    return loads_csv(path.read_text())
