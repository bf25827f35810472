import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from meancycle import analytic as an
from meancycle.analytic import LimitLaw

E1 = math.exp(-1)

PRINTED_PMF = {
    LimitLaw.UNDIRECTED_MAX: {3: 0.121608, 4: 0.084915, 5: 0.063827, 6: 0.050329,
                              7: 0.041047, 8: 0.034331, 9: 0.029280, 10: 0.025365,
                              100: 0.000921},
    LimitLaw.DIRECTED_MAX: {2: 0.281718, 3: 0.154845, 4: 0.098900, 5: 0.068937,
                            6: 0.050915, 7: 0.039195, 8: 0.031129, 9: 0.025334,
                            10: 0.021027, 100: 0.000264},
    LimitLaw.UNDIRECTED_MEAN: {3: 0.035248, 4: 0.022796, 5: 0.016229, 6: 0.012283,
                               7: 0.009701, 8: 0.007905, 9: 0.006598, 10: 0.005613,
                               100: 0.000165},
    LimitLaw.DIRECTED_MEAN: {2: 0.116616, 3: 0.061750, 4: 0.039132, 5: 0.027417,
                             6: 0.020485, 7: 0.016005, 8: 0.012923, 9: 0.010701,
                             10: 0.009039, 100: 0.000238},
}


def mp_tree(c):
    return -mp.lambertw(-mp.mpf(c))


def mp_pmf(k, v):
    """Independent high-precision quadrature of the same integrals."""
    mp.mp.dps = 30
    k = mp.mpf(k)
    e1 = mp.exp(-1)
    if v is LimitLaw.DIRECTED_MEAN:
        f = lambda c: c ** k * mp.exp(c) / mp_tree(c)
        return mp.power(k, k) / mp.factorial(k) * mp.quad(f, [0, e1 * 0.9, e1])
    if v is LimitLaw.UNDIRECTED_MEAN:
        f = lambda c: c ** (k - 0.5) * mp.exp(c / 2 + c ** 2 / 2) / mp.sqrt(mp_tree(c))
        return mp.power(k, k) / (2 * mp.factorial(k)) * mp.quad(f, [0, e1 * 0.9, e1])
    if v is LimitLaw.UNDIRECTED_MAX:
        f = lambda c: c ** (k - 1) * mp.sqrt(1 - c) * mp.exp(c / 2 + c ** 2 / 4)
        return mp.quad(f, [0, 0.9, 1]) / 2
    f = lambda c: c ** (k - 1) * (1 - c) * mp.exp(c)
    return mp.quad(f, [0, 0.9, 1])


# -- tree function --------------------------------------------------------------

def test_tree_endpoints():
    assert an.tree_function(0.0) == 0.0
    assert abs(an.tree_function(E1) - 1.0) <= 1e-12


@pytest.mark.parametrize("c", [-1e-3, 0.4, 1.0])
def test_tree_domain(c):
    with pytest.raises(ValueError):
        an.tree_function(c)


def test_tree_residual_grid():
    grid = np.linspace(0, E1, 10_000)
    worst = max(abs(an.tree_function(c) - c * math.exp(an.tree_function(c))) for c in grid)
    assert worst <= 1e-12


@pytest.mark.parametrize("c", [1e-9, 0.01, 0.1, 0.2, 0.25, 0.3, 0.36, 0.3678])
def test_tree_vs_lambert(c):
    assert math.isclose(an.tree_function(c), -lambertw(-c).real, rel_tol=1e-13)
    assert math.isclose(an.tree_function(c), float(mp_tree(c)), rel_tol=1e-13)


def test_tree_series():
    c = 0.1
    s = sum(k ** (k - 1) * c ** k / math.factorial(k) for k in range(1, 60))
    assert math.isclose(an.tree_function(c), s, rel_tol=1e-13)


@pytest.mark.parametrize("delta", [1e-6, 1e-5, 1e-4, 1e-3, 1e-2])
def test_tree_critical_expansion(delta):
    t = an.tree_function((1 - delta) / math.e)
    assert abs(t - (1 - math.sqrt(2 * delta))) <= 5 * delta
    exact = float(mp_tree((1 - mp.mpf(delta)) / mp.e))
    assert abs(t - exact) < 1e-9


def test_tree_delta_1e4_example():
    t = an.tree_function((1 - 1e-4) / math.e)
    assert abs(t - 0.98586) <= 2e-4


# -- first moments --------------------------------------------------------------

def test_limit_counts():
    assert an.expected_light_count_limit(0, "directed") == 0
    assert math.isclose(an.expected_light_count_limit(E1, "directed"), 1 - E1, rel_tol=1e-12)
    assert math.isclose(an.expected_light_count_limit(E1, "undirected"),
                        (1 - E1 - E1 ** 2) / 2, rel_tol=1e-12)
    assert abs(an.expected_light_count_limit(E1, "undirected") - 0.2483929) < 5e-7
    with pytest.raises(ValueError):
        an.expected_light_count_limit(0.5, "directed")
    assert an.expected_light_count_limit(0.5, "directed", allow_infinite=True) == math.inf


def test_limit_count_is_sum_of_asymptotic_terms():
    c = 0.3
    s = sum(an.expected_light_count_asymptotic(k, c, "directed") for k in range(2, 200))
    assert math.isclose(s, an.expected_light_count_limit(c, "directed"), rel_tol=1e-10)
    s = sum(an.expected_light_count_asymptotic(k, c, "undirected") for k in range(3, 200))
    assert math.isclose(s, an.expected_light_count_limit(c, "undirected"), rel_tol=1e-10)


def test_exact_count_oracle():
    mp.mp.dps = 30
    n, k, c = 200, 3, 0.5
    N = mp.mpf(200 * 199 * 198) / 3
    oracle = N * mp.gammainc(k, 0, mp.mpf(c) * k / n, regularized=True)
    got = an.expected_light_count_exact(n, k, c, "directed")
    assert math.isclose(got, float(oracle), rel_tol=1e-12)
    assert math.isclose(an.expected_light_count_asymptotic(3, 0.5, "directed"), 0.1875)
    assert an.expected_light_count_exact(50, 3, 0.0, "directed") == 0.0
    assert math.isclose(an.expected_light_count_exact(20, 4, 1.0, "undirected"),
                        an.expected_light_count_exact(20, 4, 1.0, "directed") / 2)


def test_exact_count_converges():
    ratios = [an.expected_light_count_exact(n, 4, 0.3, "directed")
              / an.expected_light_count_asymptotic(4, 0.3, "directed") for n in (50, 200, 800)]
    assert ratios[0] < ratios[1] < ratios[2] < 1
    assert abs(1 - ratios[2]) < 0.01


def test_exact_count_domain():
    with pytest.raises(ValueError):
        an.expected_light_count_exact(10, 2, 0.5, "undirected")
    with pytest.raises(ValueError):
        an.expected_light_count_exact(10, 11, 0.5, "directed")


# -- CDFs -------------------------------------------------------------------------

@pytest.mark.parametrize("v", list(LimitLaw))
def test_cdf_basic(v):
    assert an.limit_cdf(0.0, v) == 0.0
    grid = np.linspace(0, 1.3, 400)
    vals = [an.limit_cdf(c, v) for c in grid]
    assert all(0 <= x <= 1 for x in vals)
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert an.limit_cdf(v.threshold * 1.001, v) == 1.0


def test_cdf_left_limits():
    assert abs(an.limit_cdf(E1, "directed_mean") - 0.468536) < 1e-6
    for v in (LimitLaw.DIRECTED_MEAN, LimitLaw.UNDIRECTED_MEAN):
        left = an.limit_cdf(E1, v)
        assert abs(left - an.pmf_sum(v)) <= 1e-9
    assert an.limit_cdf(1.0, "directed_max") == 1.0
    assert an.limit_cdf(1.0, "undirected_max") == 1.0


def test_cdf_undirected_max_value():
    assert math.isclose(an.limit_cdf(0.5, "undirected_max"),
                        1 - math.sqrt(0.5) * math.exp(0.25 + 0.0625), rel_tol=1e-14)


def test_directed_max_cdf_from_pmf():
    # the derived CDF equals the sum of the printed length pmf over k
    for c in (0.2, 0.5, 0.8):
        mp.mp.dps = 25
        dens = lambda x: x * (1 - x) * mp.exp(x) / (1 - x) ** 1  # sum_k x^(k-1) = 1/(1-x)
        val = float(mp.quad(lambda x: x * mp.exp(x), [0, c]))
        assert math.isclose(an.limit_cdf(c, "directed_max"), val, rel_tol=1e-12)
        assert dens(0.1) > 0


@pytest.mark.parametrize("c", [0.05, 0.1, 0.2, 0.3, 0.35])
def test_derivative_identity(c):
    h = 1e-6
    g = lambda x: -math.log(1 - an.limit_cdf(x, "directed_mean"))
    fd = (g(c + h) - g(c - h)) / (2 * h)
    T = an.tree_function(c)
    closed = T / (c * (1 - T)) - 1
    series = sum(math.exp(k * math.log(k) - math.lgamma(k + 1) + (k - 1) * math.log(c))
                 for k in range(2, 4000))
    assert abs(fd - closed) < 1e-6
    assert abs(closed - series) < 1e-9


# -- pmf ------------------------------------------------------------------------

@pytest.mark.parametrize("v", list(LimitLaw))
def test_pmf_table2(v):
    for k, p in PRINTED_PMF[v].items():
        assert abs(an.length_pmf(k, v) - p) <= 1e-5, (v, k)


@pytest.mark.parametrize("v", list(LimitLaw))
@pytest.mark.parametrize("k", [3, 7, 30, 250])
def test_pmf_vs_mpmath(v, k):
    assert abs(an.length_pmf(k, v) - float(mp_pmf(k, v))) < 1e-9


def test_directed_max_p2_closed_form():
    assert math.isclose(an.length_pmf(2, "directed_max"), 3 - math.e, rel_tol=1e-12)


def test_pmf_domain():
    with pytest.raises(ValueError):
        an.length_pmf(2, "undirected_mean")
    with pytest.raises(ValueError):
        an.length_pmf(1, "directed_max")


def test_pmf_sum_constants():
    assert abs(an.pmf_sum("directed_mean") - 0.468536) < 1e-6
    assert abs(an.pmf_sum("undirected_mean") - 0.219946) < 1e-6
    assert an.pmf_sum("undirected_max") == 1.0
    assert an.pmf_sum("directed_max") == 1.0


@pytest.mark.parametrize("v", list(LimitLaw))
def test_pmf_partial_sums(v):
    K = 500
    s = sum(an.length_pmf(k, v) for k in range(v.k_min, K + 1))
    a = an.tail_exponent(v)
    tail = an.tail_constant(v) * K ** (1 - a) / (a - 1)
    assert abs(s + tail - an.pmf_sum(v)) < 1e-3


# -- tails ----------------------------------------------------------------------

def test_tail_constants():
    assert abs(an.tail_constant("undirected_max") - 0.938071) < 1e-6
    assert abs(an.tail_constant("directed_max") - 2.71828) < 1e-5
    assert abs(an.tail_constant("undirected_mean") - 0.155598) < 1e-6
    assert abs(an.tail_constant("directed_mean") - 0.212023) < 1e-6


@pytest.mark.parametrize("v", list(LimitLaw))
def test_tail_ratio_k200(v):
    r = an.length_pmf(200, v) / an.tail_asymptote(200, v)
    assert 0.9 <= r <= 1.1


def test_tail_ratio_tends_to_one():
    for v in LimitLaw:
        r1 = an.length_pmf(100, v) / an.tail_asymptote(100, v)
        r2 = an.length_pmf(800, v) / an.tail_asymptote(800, v)
        assert abs(r2 - 1) < abs(r1 - 1)


# -- supercritical --------------------------------------------------------------

def test_uniform_light_estimate():
    assert math.isclose(an.uniform_light_probability_estimate(1000, math.sqrt(1000)),
                        math.exp(-math.pi ** 2 / 2), rel_tol=1e-12)
    assert abs(an.uniform_light_probability_estimate(1000, math.sqrt(1000)) - 0.007192) < 1e-6
    assert an.uniform_light_probability_estimate(1, 1e6) > 0.999999
    assert an.uniform_light_probability_estimate(10, 3) > an.uniform_light_probability_estimate(20, 3)
    assert an.uniform_light_probability_estimate(10, 3) < an.uniform_light_probability_estimate(10, 4)


def test_expected_uniform_count_limits():
    p = an.SupercriticalParams(A=1e12, delta=0.0, L1=10, L2=50)
    direct = sum(L ** -1.5 for L in range(11, 51))
    assert math.isclose(an.expected_uniform_light_count(p), direct, rel_tol=1e-10)
    assert math.isclose(an.expected_uniform_light_count(p, "undirected"), direct / 2, rel_tol=1e-10)


def test_expected_uniform_count_large_L_no_overflow():
    # computed in log space, so large but finite totals survive
    p = an.SupercriticalParams(A=200.0, delta=0.01, L1=10_000, L2=60_000)
    v = an.expected_uniform_light_count(p)
    assert math.isfinite(v) and v > 1e200
    big = an.SupercriticalParams(A=5.0, delta=0.5, L1=10_000, L2=20_000)
    assert an.expected_uniform_light_count(big) == math.inf


def test_proof_parameters_n1e6():
    p = an.proof_parameters(10 ** 6, 0.1)
    assert p.L1 == p.L2 - 1
    v = an.expected_uniform_light_count(p)
    mp.mp.dps = 30
    L = p.L2
    oracle = (1 + mp.mpf(p.delta)) ** L * mp.power(L, -1.5) * mp.exp(-mp.pi ** 2 / 2 * L / mp.mpf(p.A) ** 2)
    assert math.isfinite(v) and v > 0
    assert math.isclose(v, float(oracle), rel_tol=1e-9)
    bound, ok = an.variance_ratio_bound(p, 10 ** 6)
    assert bound > 1
    assert ok is False  # L2^3 e^A / n is far above 1/2 at this n


def test_params_validation():
    with pytest.raises(ValueError):
        an.SupercriticalParams(A=1.0, delta=0.1, L1=5, L2=5)
    with pytest.raises(ValueError):
        an.SupercriticalParams(A=-1.0, delta=0.1, L1=1, L2=5)


def test_supercritical_bounds():
    wu, ll = an.supercritical_bounds(10 ** 6)
    assert abs(wu * math.e * 1e6 - 1.0259) < 1e-4
    ln = 6 * math.log(10)
    assert math.isclose(ll, 2 / math.pi ** 2 * ln ** 2 * math.log(ln), rel_tol=1e-12)
    wu, _ = an.supercritical_bounds(10 ** 300)
    assert abs(wu * math.e * 1e300 - 1) < 1e-4
    with pytest.raises(ValueError):
        an.supercritical_bounds(15)


# -- Brownian band --------------------------------------------------------------

def test_brownian_band_limits():
    assert an.brownian_band_probability(1e-6, 1.0) > 1 - 1e-12
    x = 8.0
    lead = 4 / math.pi * math.exp(-math.pi ** 2 * x / 8)
    assert math.isclose(an.brownian_band_probability(x, 1.0), lead, rel_tol=1e-6)
    assert 0 < an.brownian_band_probability(1.0, 1.0) < 1


@given(st.floats(0.01, 5.0), st.floats(0.2, 5.0))
@settings(max_examples=100, deadline=None)
def test_brownian_scale(T, a):
    # depends on T / a^2 only
    p = an.brownian_band_probability(T, a)
    q = an.brownian_band_probability(T / a ** 2, 1.0)
    assert abs(p - q) < 1e-12


@pytest.mark.parametrize("x", [0.05, 0.2, 0.26, 0.5, 1.0, 3.0])
def test_brownian_vs_mpmath(x):
    mp.mp.dps = 30
    s = mp.nsum(lambda j: (-1) ** j / (2 * j + 1) * mp.exp(-(2 * j + 1) ** 2 * mp.pi ** 2 * x / 8),
                [0, mp.inf])
    assert abs(an.brownian_band_probability(x, 1.0) - float(4 / mp.pi * s)) < 1e-12


def test_limit_law_parsing():
    assert an.as_limit_law("undirected-max") is LimitLaw.UNDIRECTED_MAX
    assert an.limit_law_for("directed", "mean") is LimitLaw.DIRECTED_MEAN
    assert LimitLaw.UNDIRECTED_MEAN.k_min == 3
