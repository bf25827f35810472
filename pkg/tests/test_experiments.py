import io
import json
import math

import numpy as np
import pytest

from meancycle import analytic as an
from meancycle import experiments as ex
from meancycle.instances import sample_complete
from meancycle.solvers import min_max_cycle, solve


def small_cfg(**kw):
    d = dict(n=12, trials=30, base_seed=7, orientation="directed", objective="mean",
             c_grid=(0.1, 0.2, 0.3, 0.5, 1.0))
    d.update(kw)
    return ex.ExperimentConfig(**d)


def test_config_validation():
    with pytest.raises(ValueError):
        small_cfg(trials=0)
    with pytest.raises(ValueError):
        small_cfg(n=2, orientation="undirected")
    with pytest.raises(ValueError):
        small_cfg(objective="median")
    with pytest.raises(ValueError):
        small_cfg(c_grid=(0.3, 0.1))
    with pytest.raises(ValueError):
        small_cfg(solver="magic")
    assert small_cfg().variant is an.LimitLaw.DIRECTED_MEAN
    assert small_cfg(orientation="undirected", objective="max").variant is an.LimitLaw.UNDIRECTED_MAX


def test_run_trials_deterministic():
    cfg = small_cfg()
    a = ex.run_trials(cfg)
    b = ex.run_trials(cfg)
    assert a == b
    assert [r.trial_index for r in a] == list(range(30))
    assert len({r.seed for r in a}) == 30


def test_records_match_direct_solve():
    cfg = small_cfg(trials=5)
    for r in ex.run_trials(cfg):
        g = sample_complete(cfg.n, cfg.orientation, cfg.seed_for(r.trial_index))
        res = solve(g, "karp")
        assert math.isclose(r.scaled_weight, cfg.n * res.min_mean, rel_tol=1e-12)
        assert r.length == res.length
    mcfg = small_cfg(trials=5, objective="max")
    for r in ex.run_trials(mcfg):
        g = sample_complete(mcfg.n, mcfg.orientation, mcfg.seed_for(r.trial_index))
        assert r.scaled_weight == mcfg.n * min_max_cycle(g).min_mean


def test_workers_do_not_change_results():
    one = ex.run_trials(small_cfg(trials=13, workers=1))
    two = ex.run_trials(small_cfg(trials=13, workers=2))
    assert one == two


def test_blocks_cover_range():
    for total, w in [(1, 1), (10, 3), (1000, 8), (5, 8)]:
        b = ex._blocks(total, w)
        assert b[0][0] == 0 and b[-1][1] == total
        assert all(x[1] == y[0] for x, y in zip(b, b[1:]))


def test_n2_trivial():
    cfg = ex.ExperimentConfig(n=2, trials=3, base_seed=1)
    for r in ex.run_trials(cfg):
        g = sample_complete(2, "directed", r.seed)
        assert r.length == 2
        assert math.isclose(r.scaled_weight, g.weight(0, 1) + g.weight(1, 0), rel_tol=1e-12)


def test_compare_to_limit_bookkeeping():
    cfg = small_cfg(trials=60)
    recs = ex.run_trials(cfg)
    rep = ex.compare_to_limit(recs, cfg)
    w = np.array([r.scaled_weight for r in recs])
    assert rep.cdf_empirical == [float(np.mean(w <= c)) for c in cfg.c_grid]
    assert math.isclose(sum(rep.pmf_empirical), 1.0)
    assert rep.cdf_analytic == [an.limit_cdf(c, "directed_mean") for c in cfg.c_grid]
    assert rep.sup_gap == max(abs(a - b) for a, b in zip(rep.cdf_empirical, rep.cdf_analytic))
    assert len(rep.cdf_rows()) == 5 and len(rep.cdf_rows()[0]) == 5
    assert rep.lengths[0] == 2


def test_compare_to_limit_empty_grid_and_mismatch():
    cfg = small_cfg(c_grid=())
    recs = ex.run_trials(cfg)
    rep = ex.compare_to_limit(recs, cfg)
    assert rep.cdf_empirical == [] and rep.sup_gap == 0.0
    with pytest.raises(ValueError):
        ex.compare_to_limit(recs, cfg, "undirected_mean")
    with pytest.raises(ValueError):
        ex.compare_to_limit([], cfg)


def test_stderr_shrinks():
    cfg1 = small_cfg(trials=40, c_grid=(0.3,))
    cfg2 = small_cfg(trials=160, c_grid=(0.3,))
    s1 = ex.compare_to_limit(ex.run_trials(cfg1), cfg1).cdf_stderr[0]
    s2 = ex.compare_to_limit(ex.run_trials(cfg2), cfg2).cdf_stderr[0]
    assert 0 < s2 < s1
    assert math.isclose(ex.binomial_stderr(0.5, 100), 0.05)


def test_chi_square_pools_tail():
    pmf = lambda k: 0.5 ** (k - 1)   # k >= 2, sums to 1
    lens = [2] * 50 + [3] * 25 + [4] * 12 + [5] * 13
    stat, df, tail = ex.chi_square_lengths(lens, 2, pmf, 100)
    # expected 50, 25, 12.5, 6.25 for k = 2..5; k = 6 (3.125) starts the tail bin
    assert df == 4
    assert math.isclose(tail, 6.25)
    by_hand = 0.5 ** 2 / 12.5 + 6.75 ** 2 / 6.25 + 6.25 ** 2 / 6.25
    assert math.isclose(stat, by_hand, rel_tol=1e-12)


def test_chi_square_perfect_fit_is_zero():
    pmf = lambda k: 0.5 ** (k - 1)
    lens = [2] * 512 + [3] * 256 + [4] * 128 + [5] * 64 + [6] * 32 + [7] * 16 + [8] * 8 + [20] * 8
    stat, df, tail = ex.chi_square_lengths(lens, 2, pmf, 1024)
    assert stat == 0.0
    assert df == 7


def test_cdf_curve():
    rep = ex.cdf_curve("undirected-max", [0.0, 0.5, 1.0])
    assert rep.cdf_empirical == [None] * 3
    assert rep.cdf_analytic[0] == 0.0 and rep.cdf_analytic[-1] == 1.0


def test_poisson_zero_level():
    rep = ex.poisson_check(10, 0.0, 5, 20, base_seed=3)
    assert rep.tv_distance == 0.0
    assert rep.mean_exact == 0.0 and rep.mean_empirical == 0.0


def test_poisson_small():
    rep = ex.poisson_check(12, 0.8, 5, 200, base_seed=3)
    assert 0 <= rep.tv_distance <= 1
    assert math.isclose(sum(rep.empirical_prob), 1.0)
    assert set(rep.per_k) == {"2", "3", "4", "5"}
    assert abs(rep.mean_empirical - rep.mean_exact) < 6 * math.sqrt(rep.mean_exact / 200) + 0.05


def test_tv_poisson_oracle():
    tv, emp, pois = ex.total_variation_poisson(np.array([0, 0, 1, 3]), 1.0)
    p = [math.exp(-1) / math.factorial(j) for j in range(4)]
    e = [0.5, 0.25, 0.0, 0.25]
    expect = 0.5 * (sum(abs(a - b) for a, b in zip(e, p)) + 1 - sum(p))
    assert math.isclose(tv, expect, rel_tol=1e-12)


def test_walkband_trivial_and_monotone():
    r = ex.walk_band_experiment(20, 25.0, 500, base_seed=1)
    assert r.p_hat == 1.0 and r.hits == 500
    ps = [ex.walk_band_experiment(L, 6.0, 4000, base_seed=1).p_hat for L in (10, 40, 160)]
    assert ps[0] > ps[1] > ps[2]
    assert ex.walk_band_experiment(40, 6.0, 500, base_seed=2) == \
        ex.walk_band_experiment(40, 6.0, 500, base_seed=2)


def test_walkband_workers():
    a = ex.walk_band_experiment(50, 5.0, 3001, base_seed=9, workers=1)
    b = ex.walk_band_experiment(50, 5.0, 3001, base_seed=9, workers=2)
    assert a.hits == b.hits
    c = ex.band_walk_experiment(50, 3.0, 3001, base_seed=9, workers=1)
    d = ex.band_walk_experiment(50, 3.0, 3001, base_seed=9, workers=2)
    assert c.hits == d.hits


def test_band_walk_vs_brownian_rough():
    r = ex.band_walk_experiment(400, 10.0, 20000, base_seed=4)
    assert abs(r.p_hat - r.brownian) < 0.05
    assert r.L == 400 and r.A == 20.0 and r.kind == "band"


def test_supercritical_summary():
    cfg = ex.ExperimentConfig(n=40, trials=40, base_seed=5)
    rep = ex.supercritical_summary(ex.run_trials(cfg), cfg)
    assert math.isclose(rep.jump_fraction + rep.sub_fraction, 1.0)
    assert math.isclose(rep.jump_analytic, 1 - an.pmf_sum("directed_mean"))
    assert sum(rep.conditional_lengths.values()) == rep.conditional_count


# -- emission -------------------------------------------------------------------

def test_emit_header_only_csv():
    buf = io.StringIO()
    ex.emit([], fmt="csv", stream=buf)
    assert buf.getvalue() == "trial,scaled_weight,length,solver,elapsed\n"


def test_emit_cdf_five_columns(tmp_path):
    rep = ex.cdf_curve("directed-mean", [0.1, 0.2])
    p = tmp_path / "c.csv"
    ex.emit(rep, p)
    rows = ex.read_csv(p)
    assert list(rows[0]) == ["variant", "c", "empirical", "stderr", "analytic"]
    assert rows[0]["empirical"] == ""
    assert float(rows[1]["analytic"]) == an.limit_cdf(0.2, "directed_mean")


def test_json_roundtrip(tmp_path):
    cfg = small_cfg(trials=20)
    recs = ex.run_trials(cfg)
    reps = [recs, ex.compare_to_limit(recs, cfg), ex.poisson_check(10, 0.6, 4, 30, 1),
            ex.walk_band_experiment(30, 5.0, 200, 1)]
    for i, r in enumerate(reps):
        p = tmp_path / f"r{i}.json"
        ex.emit(r, p, fmt="json")
        assert ex.load_report(p) == r
        json.loads(p.read_text())


def test_svg(tmp_path):
    cfg = small_cfg(trials=20)
    rep = ex.compare_to_limit(ex.run_trials(cfg), cfg)
    for table in ("cdf", "pmf"):
        p = tmp_path / f"{table}.svg"
        ex.emit(rep, p, fmt="svg", table=table)
        text = p.read_text()
        assert text.startswith("<svg") and "polyline" in text and "circle" in text
    with pytest.raises(ValueError):
        ex.emit(ex.walk_band_experiment(10, 5.0, 10), fmt="svg", stream=io.StringIO())


def test_emit_bad_path(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        ex.emit([], tmp_path / "missing" / "x.csv")
