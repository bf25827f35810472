"""
Counter-based random numbers.

Every edge weight is a pure function of ``(seed, i, j)``: two rounds of the
splitmix64 finaliser turn the triple into 64 random bits, the top 53 bits
give a uniform on the open interval (0, 1), and ``-log(u)`` gives Exp(1).
The same construction keyed by ``(seed, trial, step)`` drives the walk
simulations.
"""
import numpy as np

from .._accel import njit

MASK64 = (1 << 64) - 1

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
STRIDE = np.uint64(0xD6E8FEB86659FD93)
SH30 = np.uint64(30)
SH27 = np.uint64(27)
SH31 = np.uint64(31)
SH11 = np.uint64(11)
TWO_M53 = 2.0 ** -53


def as_seed(seed):
    """Reduce any Python int to an unsigned 64-bit seed."""
    return int(seed) & MASK64


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


@njit(cache=True)
def row_key(seed, i):
    return mix64(seed + GOLDEN * np.uint64(i + 1))


@njit(cache=True)
def cell_bits(rkey, j):
    return mix64(rkey ^ (STRIDE * np.uint64(j + 1)))


@njit(cache=True)
def bits_to_exp(z):
    u = (np.float64(z >> SH11) + 0.5) * TWO_M53
    return -np.log(u)


@njit(cache=True)
def sample_dense(n, seed, symmetric):
    """Dense weight matrix with +inf on the diagonal."""
    seed = np.uint64(seed)
    W = np.empty((n, n))
    for i in range(n):
        W[i, i] = np.inf
        rk = row_key(seed, i)
        start = i + 1 if symmetric else 0
        for j in range(start, n):
            if j == i:
                continue
            w = bits_to_exp(cell_bits(rk, j))
            W[i, j] = w
            if symmetric:
                W[j, i] = w
    return W


def derive_seed(base_seed, index):
    """Seed for trial ``index`` of a run with ``base_seed``."""
    with np.errstate(over="ignore"):
        z = _mix64_np(np.uint64(as_seed(base_seed)) ^ _mix64_np(
            GOLDEN * np.uint64(as_seed(index) + 1)))
    return int(z)


# numpy versions: uint64 arrays wrap silently, scalars warn, hence errstate

def _mix64_np(z):
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


def sample_dense_numpy(n, seed, symmetric):
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        rk = _mix64_np(np.uint64(seed) + GOLDEN * idx)
        z = _mix64_np(rk[:, None] ^ (STRIDE * idx[None, :]))
    W = -np.log(((z >> SH11).astype(np.float64) + 0.5) * TWO_M53)
    if symmetric:
        W = np.triu(W, 1)
        W = W + W.T
    np.fill_diagonal(W, np.inf)
    return W


def exp_block_numpy(seed, rows, cols):
    """Exp(1) draws keyed by (seed, row, col) for row/col index arrays."""
    with np.errstate(over="ignore"):
        rk = _mix64_np(np.uint64(seed) + GOLDEN * (rows.astype(np.uint64) + np.uint64(1)))
        z = _mix64_np(rk[:, None] ^ (STRIDE * (cols.astype(np.uint64) + np.uint64(1)))[None, :])
    return -np.log(((z >> SH11).astype(np.float64) + 0.5) * TWO_M53)
