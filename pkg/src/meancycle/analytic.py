"""
Limiting quantities for the minimum mean (and max) weight cycle of a
complete graph with i.i.d. Exp(1) edge weights.

All ``c`` arguments use the scaled convention: a cycle is c-light when its
mean weight is at most ``c / n``. Logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, special

from .instances import Orientation, as_orientation

INV_E = math.exp(-1.0)
# relative slack when deciding that a float c is "at" 1/e
_EDGE_TOL = 4e-16


class LimitLaw(str, Enum):
    UNDIRECTED_MAX = "undirected_max"
    DIRECTED_MAX = "directed_max"
    UNDIRECTED_MEAN = "undirected_mean"
    DIRECTED_MEAN = "directed_mean"

    @property
    def directed(self):
        return self.value.startswith("directed")

    @property
    def objective(self):
        return self.value.split("_")[1]

    @property
    def orientation(self):
        return Orientation.DIRECTED if self.directed else Orientation.UNDIRECTED

    @property
    def k_min(self):
        return 2 if self.directed else 3

    @property
    def threshold(self):
        """Scaled weight where the limiting CDF reaches 1."""
        return INV_E if self.objective == "mean" else 1.0


def as_limit_law(v) -> LimitLaw:
    if isinstance(v, LimitLaw):
        return v
    return LimitLaw(str(v).strip().lower().replace("-", "_"))


def limit_law_for(orientation, objective) -> LimitLaw:
    o = as_orientation(orientation)
    return LimitLaw(f"{o.value}_{objective}")


# -- tree function ------------------------------------------------------------

def _excess(s):
    """-s - log(1 - s) = sum_{m>=2} s^m / m, accurate for small s."""
    if s < 1e-3:
        return sum(s ** m / m for m in range(2, 9))
    return -s - math.log1p(-s)


def _one_minus_tree(eps):
    """s = 1 - T where c = exp(-1 - eps), i.e. the root of
    -s - log(1 - s) = eps on [0, 1). Newton from the right is monotone."""
    if eps <= 0.0:
        return 0.0
    s = min(math.sqrt(2.0 * eps), 1.0 - 1e-16)
    for _ in range(100):
        step = (_excess(s) - eps) * (1.0 - s) / s
        s_new = s - step
        if not 0.0 < s_new < 1.0:
            break  # safeguard; only reachable through rounding
        if abs(step) <= 1e-17 + 4e-16 * s_new:
            return s_new
        s = s_new
    return s


def _tree_small(c):
    """Newton on t - c e^t from t = 0; f is concave so iterates rise to the root."""
    t = 0.0
    for _ in range(100):
        et = math.exp(t)
        step = (t - c * et) / (1.0 - c * et)
        t -= step
        if abs(step) <= 1e-17 + 2e-16 * t:
            break
    lo, hi = 0.0, 1.0
    if not lo <= t <= hi:  # bisection fallback
        for _ in range(200):
            t = 0.5 * (lo + hi)
            if t - c * math.exp(t) < 0:
                lo = t
            else:
                hi = t
    return t


def tree_function(c: float) -> float:
    """T(c): the root in [0, 1] of T = c e^T, for 0 <= c <= 1/e.

    T(c) = sum_{k>=1} k^(k-1) c^k / k! counts rooted labelled trees. The
    Lambert W relation is W(z) = -T(-z).
    """
    c = float(c)
    if not c >= 0.0 or c > INV_E * (1.0 + _EDGE_TOL):
        raise ValueError(f"tree_function needs 0 <= c <= 1/e, got {c!r}")
    if c == 0.0:
        return 0.0
    if c < 0.25:
        return _tree_small(c)
    eps = -(1.0 + math.log(c))
    return 1.0 - _one_minus_tree(max(eps, 0.0))


def _tree_at_u(u):
    """T((1 - u^2)/e) without forming c, so the square-root endpoint is exact."""
    return 1.0 - _one_minus_tree(-math.log1p(-u * u))


# -- first moments --------------------------------------------------------------

def expected_light_count_limit(c, orientation, allow_infinite=False):
    """Limit of the expected number of c-light cycles (all lengths).

    Beyond 1/e the limit is infinite; that is returned only when
    ``allow_infinite`` is set.
    """
    o = as_orientation(orientation)
    c = float(c)
    if c > INV_E * (1.0 + _EDGE_TOL):
        if allow_infinite:
            return math.inf
        raise ValueError(f"limit is infinite for c > 1/e (c={c!r})")
    T = tree_function(c)
    if o is Orientation.DIRECTED:
        return T - c
    return (T - c - c * c) / 2.0


def cycle_count(n: int, k: int, orientation) -> float:
    """Number of k-cycles in the complete graph on n vertices (as a float)."""
    return math.exp(_log_cycle_count(n, k, as_orientation(orientation)))


def _log_cycle_count(n, k, o):
    v = math.lgamma(n + 1) - math.lgamma(n - k + 1) - math.log(k)
    if o is Orientation.UNDIRECTED:
        v -= math.log(2.0)
    return v


def expected_light_count_exact(n: int, k: int, c: float, orientation) -> float:
    """N_k * P(Gamma(k, 1) <= c k / n): the expected number of c-light k-cycles."""
    o = as_orientation(orientation)
    if not o.min_cycle_length <= k <= n:
        raise ValueError(f"need {o.min_cycle_length} <= k <= n, got k={k}, n={n}")
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0:
        return 0.0
    return math.exp(_log_cycle_count(n, k, o)) * float(special.gammainc(k, c * k / n))


def expected_light_count_asymptotic(k: int, c: float, orientation) -> float:
    """(ck)^k / (k k!), halved for undirected: the n -> infinity limit at fixed k."""
    o = as_orientation(orientation)
    if c == 0:
        return 0.0
    v = math.exp(k * math.log(c * k) - math.log(k) - math.lgamma(k + 1))
    return v / 2.0 if o is Orientation.UNDIRECTED else v


# -- limit laws -------------------------------------------------------------------

def limit_cdf(c: float, variant) -> float:
    """Limiting Pr[n * (min mean or min max weight) <= c].

    Mean variants use the subcritical formula up to and including 1/e (so
    the value at 1/e is the left limit) and 1 beyond. Max variants are
    continuous with threshold 1.
    """
    v = as_limit_law(variant)
    c = float(c)
    if c < 0:
        raise ValueError("c must be >= 0")
    if c > v.threshold * (1.0 + _EDGE_TOL):
        return 1.0
    if v is LimitLaw.DIRECTED_MEAN:
        return -math.expm1(-(tree_function(c) - c))
    if v is LimitLaw.UNDIRECTED_MEAN:
        return -math.expm1(-(tree_function(c) - c - c * c) / 2.0)
    c = min(c, 1.0)
    if v is LimitLaw.UNDIRECTED_MAX:
        return 1.0 - math.sqrt(1.0 - c) * math.exp(c / 2.0 + c * c / 4.0)
    return 1.0 - (1.0 - c) * math.exp(c)


def _log_kk_over_kfact(k):
    return k * math.log(k) - math.lgamma(k + 1)


def length_pmf(k: int, variant, tol=1e-12) -> float:
    """Limiting probability that the optimal cycle has length k.

    Mean variants substitute c = (1 - u^2)/e, which removes the square-root
    behaviour of T at 1/e; the undirected max variant substitutes
    c = 1 - s^2 for the same reason at c = 1.
    """
    v = as_limit_law(variant)
    k = int(k)
    if k < v.k_min:
        raise ValueError(f"k must be >= {v.k_min} for {v.value}")
    opts = dict(epsabs=tol, epsrel=1e-11, limit=400)
    # the integrands peak near the upper endpoint at width ~ 1/sqrt(k)
    brk = [min(0.5, 4.0 / math.sqrt(k))]

    if v is LimitLaw.DIRECTED_MEAN:
        # (k^k/k!) e^-k is O(k^-1/2); c^k = e^-k (1-u^2)^k
        pre = _log_kk_over_kfact(k) - k

        def f(u):
            c = (1.0 - u * u) * INV_E
            return math.exp(pre + k * math.log1p(-u * u) + c) / _tree_at_u(u) * 2.0 * u * INV_E

        val, _err = integrate.quad(f, 0.0, 1.0, points=brk, **opts)
        return val

    if v is LimitLaw.UNDIRECTED_MEAN:
        pre = _log_kk_over_kfact(k) - math.log(2.0) - (k - 0.5)

        def f(u):
            if u >= 1.0:
                return 0.0
            c = (1.0 - u * u) * INV_E
            lg = pre + (k - 0.5) * math.log1p(-u * u) + c / 2.0 + c * c / 2.0
            return math.exp(lg) / math.sqrt(_tree_at_u(u)) * 2.0 * u * INV_E

        val, _err = integrate.quad(f, 0.0, 1.0, points=brk, **opts)
        return val

    if v is LimitLaw.UNDIRECTED_MAX:
        def f(s):
            c = 1.0 - s * s
            return math.exp((k - 1) * math.log1p(-s * s) + c / 2.0 + c * c / 4.0) * s * s

        val, _err = integrate.quad(f, 0.0, 1.0, points=brk, **opts)
        return val

    def f(c):
        return math.exp((k - 1) * math.log(c) + c) * (1.0 - c) if c > 0 else 0.0

    val, _err = integrate.quad(f, 0.0, 1.0, points=[1.0 - brk[0]], **opts)
    return val


def pmf_sum(variant) -> float:
    """Total mass of finite lengths; 1 minus the jump at the threshold."""
    v = as_limit_law(variant)
    if v is LimitLaw.DIRECTED_MEAN:
        return -math.expm1(-1.0 + INV_E)
    if v is LimitLaw.UNDIRECTED_MEAN:
        return -math.expm1(-0.5 + INV_E / 2.0 + INV_E ** 2 / 2.0)
    return 1.0


def jump(variant) -> float:
    """Mass carried by cycles whose length grows with n."""
    return 1.0 - pmf_sum(variant)


def tail_constant(variant) -> float:
    v = as_limit_law(variant)
    if v is LimitLaw.DIRECTED_MEAN:
        return math.exp(-1.0 + INV_E) / math.sqrt(2.0 * math.pi)
    if v is LimitLaw.UNDIRECTED_MEAN:
        return math.exp(-0.5 + INV_E / 2.0 + INV_E ** 2 / 2.0) / math.sqrt(8.0 * math.pi)
    if v is LimitLaw.UNDIRECTED_MAX:
        return math.sqrt(math.pi) / 4.0 * math.exp(0.75)
    return math.e


def tail_exponent(variant) -> float:
    return 2.0 if as_limit_law(variant) is LimitLaw.DIRECTED_MAX else 1.5


def tail_asymptote(k: int, variant) -> float:
    """Leading large-k behaviour of length_pmf."""
    v = as_limit_law(variant)
    if k < v.k_min:
        raise ValueError(f"k must be >= {v.k_min} for {v.value}")
    return tail_constant(v) * float(k) ** (-tail_exponent(v))


# -- supercritical regime -------------------------------------------------------

@dataclass(frozen=True)
class SupercriticalParams:
    """Window [L1+1, L2] of cycle lengths, uniformity slack A (units of c/n)
    and relative excess delta over 1/e.

    Z_{L,delta} (light cycles with length in [L - 1/delta, L]) has no
    evaluator here; only Y over the window is computed.
    """
    A: float
    delta: float
    L1: int
    L2: int

    def __post_init__(self):
        if self.A < 0 or self.delta < 0:
            raise ValueError("A and delta must be >= 0")
        if not self.L1 < self.L2:
            raise ValueError("need L1 < L2")


def proof_parameters(n: int, eps: float) -> SupercriticalParams:
    """A = (1-eps) ln n, delta = (pi^2/2 + 13 eps)/ln^2 n,
    L2 = ln^2 n lnln n / eps (rounded down), L1 = L2 - 1."""
    ln = math.log(n)
    L2 = int(ln * ln * math.log(ln) / eps)
    return SupercriticalParams(A=(1.0 - eps) * ln,
                               delta=(math.pi ** 2 / 2.0 + 13.0 * eps) / ln ** 2,
                               L1=L2 - 1, L2=L2)


def uniform_light_probability_estimate(L, A) -> float:
    """exp(-(pi^2/2) L / A^2), leading order for an L-cycle to be A-uniformly
    light at its own mean."""
    if L < 1 or A <= 0:
        raise ValueError("need L >= 1 and A > 0")
    return math.exp(-(math.pi ** 2 / 2.0) * L / (A * A))


def expected_uniform_light_count(p: SupercriticalParams, orientation="directed") -> float:
    """sum_{L=L1+1}^{L2} (1+delta)^L L^(-3/2) exp(-(pi^2/2) L / A^2), halved
    when undirected; summed in log space."""
    o = as_orientation(orientation)
    if p.A <= 0:
        raise ValueError("A must be > 0")
    L = np.arange(p.L1 + 1, p.L2 + 1, dtype=float)
    terms = L * math.log1p(p.delta) - 1.5 * np.log(L) - (math.pi ** 2 / 2.0) * L / p.A ** 2
    log_total = float(special.logsumexp(terms))
    total = math.exp(log_total) if log_total < 709.0 else math.inf
    return total / 2.0 if o is Orientation.UNDIRECTED else total


def variance_ratio_bound(p: SupercriticalParams, n: int):
    """(1 + 2 L2^3 e^A (1+delta)^L2 / n, whether L2^3 e^A / n <= 1/2)."""
    log_pre = 3.0 * math.log(p.L2) + p.A - math.log(n)
    bound = 1.0 + 2.0 * math.exp(log_pre + p.L2 * math.log1p(p.delta))
    return bound, math.exp(log_pre) <= 0.5


def supercritical_bounds(n: int):
    """Leading-order (weight_upper, length_lower) above the critical point.

    weight_upper = (1 + (pi^2/2)/ln^2 n) / (e n); length_lower =
    (2/pi^2) ln^2 n lnln n. The o(1) corrections are dropped, so both are
    envelopes rather than exact values at finite n.
    """
    if n < 16:
        raise ValueError(f"supercritical_bounds needs n >= 16, got {n}")
    ln = math.log(n)
    weight_upper = (1.0 + (math.pi ** 2 / 2.0) / ln ** 2) / (math.e * n)
    length_lower = (2.0 / math.pi ** 2) * ln ** 2 * math.log(ln)
    return weight_upper, length_lower


# -- Brownian band --------------------------------------------------------------

def brownian_band_probability(T, a, terms=1000) -> float:
    """P(max_{t <= T} |B_t| < a) for standard Brownian motion.

    Uses the Fourier series (4/pi) sum_j (-1)^j/(2j+1) exp(-(2j+1)^2 pi^2 T/(8a^2)),
    stopped once a term drops below 1e-15. For T/a^2 < 0.25 that series
    needs many terms, so the image-method sum over reflected Gaussians is
    used instead.
    """
    if T <= 0 or a <= 0 or terms < 1:
        raise ValueError("need T > 0, a > 0, terms >= 1")
    x = T / (a * a)
    if x < 0.25:
        r = 1.0 / math.sqrt(x)
        total = 0.0
        for k in range(-20, 21):
            hi = (1 - 4 * k) * r
            lo = (-1 - 4 * k) * r
            total += 0.5 * (math.erf(hi / math.sqrt(2)) - math.erf(lo / math.sqrt(2)))
            hi = (3 - 4 * k) * r
            lo = (1 - 4 * k) * r
            total -= 0.5 * (math.erf(hi / math.sqrt(2)) - math.erf(lo / math.sqrt(2)))
        return min(1.0, max(0.0, total))
    total = 0.0
    for j in range(terms):
        m = 2 * j + 1
        term = math.exp(-m * m * math.pi ** 2 * x / 8.0) / m
        total += term if j % 2 == 0 else -term
        if term < 1e-15:
            break
    return min(1.0, max(0.0, 4.0 / math.pi * total))
