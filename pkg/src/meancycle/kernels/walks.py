"""
Walk-type simulations: uniform lightness of synthetic cycles and random
walks confined to a band.
"""
import numpy as np

from .._accel import njit
from .rng import bits_to_exp, cell_bits, exp_block_numpy, row_key


@njit(cache=True)
def uniform_light_check(w, A, unit):
    """Every cyclic subpath of ``w`` weighs at most ``(len + A) * unit``.

    With ``Q`` the prefix sums of ``w - unit``, non-wrapping subpaths are
    ``Q[j] - Q[i]`` (i < j) and wrapping ones ``Q[L] + Q[j] - Q[i]`` (1 <= j <= i).
    """
    L = w.shape[0]
    slack = A * unit
    q = 0.0
    run_min = 0.0
    run_max = -np.inf
    worst_plain = -np.inf
    worst_wrap = -np.inf
    for j in range(1, L + 1):
        q += w[j - 1] - unit
        if q - run_min > worst_plain:
            worst_plain = q - run_min
        if q < run_min:
            run_min = q
        if j < L:
            if q > run_max:
                run_max = q
            if run_max - q > worst_wrap:
                worst_wrap = run_max - q
    if worst_plain > slack:
        return False
    if worst_wrap > -np.inf and q + worst_wrap > slack:
        return False
    return q <= slack


@njit(cache=True)
def walk_band_counts(L, A, seed, first, last):
    """Trials in [first, last) whose L Exp(1) weights are A-uniformly light
    at their own mean."""
    seed = np.uint64(seed)
    buf = np.empty(L)
    hits = 0
    for t in range(first, last):
        rk = row_key(seed, t)
        total = 0.0
        for i in range(L):
            x = bits_to_exp(cell_bits(rk, i))
            buf[i] = x
            total += x
        if uniform_light_check(buf, A, total / L):
            hits += 1
    return hits


@njit(cache=True)
def band_walk_counts(T, a, seed, first, last):
    """Trials whose walk with Exp(1) - 1 steps keeps |S_k| < a for k <= T."""
    seed = np.uint64(seed)
    hits = 0
    for t in range(first, last):
        rk = row_key(seed, t)
        s = 0.0
        ok = True
        for i in range(T):
            s += bits_to_exp(cell_bits(rk, i)) - 1.0
            if s >= a or s <= -a:
                ok = False
                break
        if ok:
            hits += 1
    return hits


def _chunks(first, last, size):
    for lo in range(first, last, size):
        yield lo, min(last, lo + size)


def walk_band_counts_numpy(L, A, seed, first, last, chunk=None):
    chunk = chunk or max(1, 2_000_000 // max(L, 1))
    cols = np.arange(L)
    hits = 0
    for lo, hi in _chunks(first, last, chunk):
        w = exp_block_numpy(seed, np.arange(lo, hi), cols)
        unit = w.sum(axis=1, keepdims=True) / L
        q = np.cumsum(w - unit, axis=1)
        qz = np.concatenate((np.zeros((hi - lo, 1)), q), axis=1)
        plain = np.max(q - np.minimum.accumulate(qz[:, :-1], axis=1), axis=1)
        ok = plain <= A * unit[:, 0]
        if L > 1:
            inner = q[:, :-1]
            wrap = np.max(np.maximum.accumulate(inner, axis=1) - inner, axis=1)
            ok &= q[:, -1] + wrap <= A * unit[:, 0]
        ok &= q[:, -1] <= A * unit[:, 0]
        hits += int(ok.sum())
    return hits


def band_walk_counts_numpy(T, a, seed, first, last, chunk=None):
    chunk = chunk or max(1, 2_000_000 // max(T, 1))
    cols = np.arange(T)
    hits = 0
    for lo, hi in _chunks(first, last, chunk):
        s = np.cumsum(exp_block_numpy(seed, np.arange(lo, hi), cols) - 1.0, axis=1)
        hits += int(np.sum(np.max(np.abs(s), axis=1) < a))
    return hits
