"""
Monte Carlo harness: repeated solves over sampled instances, comparison
with the limit laws, light-cycle counts against a Poisson law, walk band
probabilities and the supercritical split.

Trial ``t`` of a run always uses ``derive_seed(base_seed, t)``; work is cut
into contiguous blocks of trial indices and merged by index, so results do
not depend on the number of workers.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, _accel
from . import analytic as an
from .instances import Orientation, as_orientation, sample_complete
from .kernels import rng
from .kernels import walks as kw
from .solvers import Solver, count_light_cycles, min_max_cycle, solve

log = logging.getLogger(__name__)

OBJECTIVES = ("mean", "max")
# default exact solver for the mean objective; see ExperimentConfig.solver
DEFAULT_MEAN_SOLVER = "prefix_search"


def version_string():
    """``git describe`` of the source tree when available, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=here, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# -- configuration and records --------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    trials: int
    base_seed: int = 0
    orientation: Orientation = Orientation.DIRECTED
    objective: str = "mean"
    c_grid: tuple = ()
    k_max: int = 10
    workers: int = 1
    # mean objective only: any exact solver name from solvers.Solver
    solver: str = DEFAULT_MEAN_SOLVER

    def __post_init__(self):
        object.__setattr__(self, "orientation", as_orientation(self.orientation))
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        object.__setattr__(self, "base_seed", rng.as_seed(self.base_seed))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < self.orientation.min_cycle_length:
            raise ValueError(f"n must be >= {self.orientation.min_cycle_length}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if list(self.c_grid) != sorted(self.c_grid):
            raise ValueError("c_grid must be sorted ascending")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        Solver(self.solver)

    @property
    def variant(self):
        return an.limit_law_for(self.orientation, self.objective)

    def seed_for(self, t):
        return rng.derive_seed(self.base_seed, t)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["orientation"] = self.orientation.value
        d["c_grid"] = list(self.c_grid)
        return d


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    scaled_weight: float
    length: int
    solver: str
    seed: int
    elapsed: float = field(default=0.0, compare=False)


def _solve_one(cfg: ExperimentConfig, t: int) -> TrialRecord:
    seed = cfg.seed_for(t)
    t0 = time.perf_counter()
    g = sample_complete(cfg.n, cfg.orientation, seed)
    if cfg.objective == "max":
        res = min_max_cycle(g)
    else:
        res = solve(g, cfg.solver)
        if not res.certified_exact:
            raise RuntimeError(f"trial {t}: solver {cfg.solver} returned an uncertified result")
    return TrialRecord(t, cfg.n * res.min_mean, res.length, res.solver.value, seed,
                       time.perf_counter() - t0)


def _trial_block(cfg, lo, hi):
    return [_solve_one(cfg, t) for t in range(lo, hi)]


def _blocks(total, workers, per_worker=4):
    """Contiguous [lo, hi) ranges covering ``total`` items."""
    nblk = max(1, min(total, workers * per_worker))
    edges = np.linspace(0, total, nblk + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_blocks(fn, args, total, workers):
    """fn(*args, lo, hi) over blocks, results in block order."""
    blocks = _blocks(total, workers)
    if workers <= 1 or len(blocks) == 1:
        return [fn(*args, lo, hi) for lo, hi in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, *args, lo, hi) for lo, hi in blocks]
        return [f.result() for f in futs]


def run_trials(cfg: ExperimentConfig) -> list:
    """Sample and solve ``cfg.trials`` instances; records ordered by trial index."""
    parts = _map_blocks(_trial_block, (cfg,), cfg.trials, cfg.workers)
    return [r for part in parts for r in part]


# -- comparison with the limit law ----------------------------------------------

def binomial_stderr(p, trials):
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


@dataclass
class ComparisonReport:
    variant: str
    n: int
    trials: int
    base_seed: int
    c_grid: list
    cdf_empirical: list
    cdf_stderr: list
    cdf_analytic: list
    lengths: list
    pmf_empirical: list
    pmf_stderr: list
    pmf_analytic: list
    sup_gap: float
    chi_square: float
    chi_square_df: int
    tail_expected: float
    meta: dict = field(default_factory=dict)

    def cdf_rows(self):
        return [(self.variant, c, e, s, a) for c, e, s, a in
                zip(self.c_grid, self.cdf_empirical, self.cdf_stderr, self.cdf_analytic)]

    def pmf_rows(self):
        return [(self.variant, k, e, s, a) for k, e, s, a in
                zip(self.lengths, self.pmf_empirical, self.pmf_stderr, self.pmf_analytic)]


def chi_square_lengths(lengths_observed, k_min, pmf, trials):
    """Chi-square of observed lengths against ``trials * pmf[k]``.

    Bins run upward from ``k_min``; the first bin whose expected count is
    below 5 and everything after it (including lengths the limit law puts
    at infinity) are pooled into one tail bin.
    Returns (statistic, degrees of freedom, expected count of the tail bin).
    """
    obs = np.asarray(lengths_observed)
    stat = 0.0
    bins = 0
    used = 0.0
    k = k_min
    while True:
        e = trials * pmf(k)
        if e < 5.0:
            break
        o = float(np.count_nonzero(obs == k))
        stat += (o - e) ** 2 / e
        used += e
        bins += 1
        k += 1
    o_tail = float(np.count_nonzero(obs >= k))
    e_tail = trials - used
    if e_tail > 0:
        stat += (o_tail - e_tail) ** 2 / e_tail
        bins += 1
    return stat, max(bins - 1, 0), e_tail


def compare_to_limit(records, cfg: ExperimentConfig, variant=None) -> ComparisonReport:
    """Empirical CDF on ``cfg.c_grid`` and length pmf against the limit law."""
    v = cfg.variant if variant is None else an.as_limit_law(variant)
    if v is not cfg.variant:
        raise ValueError(f"variant {v.value} does not match config "
                         f"({cfg.orientation.value}, {cfg.objective})")
    if not records:
        raise ValueError("no records")
    trials = len(records)
    w = np.array([r.scaled_weight for r in records])
    lens = np.array([r.length for r in records])

    cdf_e = [float(np.count_nonzero(w <= c)) / trials for c in cfg.c_grid]
    cdf_s = [binomial_stderr(p, trials) for p in cdf_e]
    cdf_a = [an.limit_cdf(c, v) for c in cfg.c_grid]
    gaps = [abs(a - b) for a, b in zip(cdf_e, cdf_a)]

    ks = list(range(v.k_min, int(lens.max()) + 1))
    pmf_e = [float(np.count_nonzero(lens == k)) / trials for k in ks]
    pmf_s = [binomial_stderr(p, trials) for p in pmf_e]
    cache = {}

    def pmf(k):
        if k not in cache:
            cache[k] = an.length_pmf(k, v)
        return cache[k]

    pmf_a = [pmf(k) for k in ks]
    chi, df, e_tail = chi_square_lengths(lens, v.k_min, pmf, trials)
    return ComparisonReport(
        variant=v.value, n=cfg.n, trials=trials, base_seed=cfg.base_seed,
        c_grid=list(cfg.c_grid), cdf_empirical=cdf_e, cdf_stderr=cdf_s,
        cdf_analytic=cdf_a, lengths=ks, pmf_empirical=pmf_e, pmf_stderr=pmf_s,
        pmf_analytic=pmf_a, sup_gap=max(gaps) if gaps else 0.0,
        chi_square=chi, chi_square_df=df, tail_expected=e_tail,
        meta=_meta(cfg.n, trials, cfg.base_seed))


def cdf_curve(variant, grid) -> ComparisonReport:
    """Analytic CDF on ``grid`` with no empirical data (empirical = None)."""
    v = an.as_limit_law(variant)
    grid = [float(c) for c in grid]
    return ComparisonReport(
        variant=v.value, n=0, trials=0, base_seed=0, c_grid=grid,
        cdf_empirical=[None] * len(grid), cdf_stderr=[None] * len(grid),
        cdf_analytic=[an.limit_cdf(c, v) for c in grid], lengths=[],
        pmf_empirical=[], pmf_stderr=[], pmf_analytic=[], sup_gap=0.0,
        chi_square=0.0, chi_square_df=0, tail_expected=0.0,
        meta=_meta(0, 0, 0))


def _meta(n, trials, base_seed, **extra):
    d = {"n": n, "trials": trials, "base_seed": base_seed,
         "version": version_string(), "backend": _accel.backend()}
    d.update(extra)
    return d


# -- Poisson approximation ------------------------------------------------------

@dataclass
class PoissonReport:
    n: int
    c0: float
    k_max: int
    trials: int
    base_seed: int
    orientation: str
    counts: list              # count value j = 0 .. max observed
    empirical_prob: list
    poisson_prob: list
    mean_empirical: float
    mean_exact: float
    tv_distance: float
    per_k: dict               # str(k) -> [mean, stderr, exact]
    meta: dict = field(default_factory=dict)

    def rows(self):
        return list(zip(self.counts, self.empirical_prob, self.poisson_prob))


def _census_block(n, orientation, c0, k_max, base_seed, lo, hi):
    kmin = as_orientation(orientation).min_cycle_length
    out = np.zeros((hi - lo, k_max - kmin + 1), np.int64)
    for t in range(lo, hi):
        g = sample_complete(n, orientation, rng.derive_seed(base_seed, t))
        cen = count_light_cycles(g, c0, k_max)
        out[t - lo] = [cen.counts[k] for k in range(kmin, k_max + 1)]
    return out


def light_cycle_counts(n, c0, k_max, trials, base_seed=0, orientation="directed", workers=1):
    """(trials x lengths) array of c0-light cycle counts, lengths kmin..k_max."""
    o = as_orientation(orientation)
    parts = _map_blocks(_census_block, (n, o.value, float(c0), int(k_max),
                                        rng.as_seed(base_seed)), trials, workers)
    return np.concatenate(parts, axis=0)


def total_variation_poisson(samples, mean):
    """TV distance between the empirical law of ``samples`` and Poisson(mean).

    Poisson mass above the largest observed value counts fully toward the
    distance.
    """
    samples = np.asarray(samples)
    top = int(samples.max()) if samples.size else 0
    emp = np.bincount(samples, minlength=top + 1) / samples.size
    pois = stats.poisson.pmf(np.arange(top + 1), mean) if mean > 0 else \
        np.eye(1, top + 1, 0).ravel()
    tail = max(0.0, 1.0 - float(pois.sum()))
    return 0.5 * (float(np.abs(emp - pois).sum()) + tail), emp, pois


def poisson_check(n, c0, k_max, trials, base_seed=0, orientation="directed",
                  workers=1) -> PoissonReport:
    """Counts of c0-light cycles of length <= k_max against the Poisson law
    whose mean is the exact finite-n expectation."""
    o = as_orientation(orientation)
    kmin = o.min_cycle_length
    counts = light_cycle_counts(n, c0, k_max, trials, base_seed, o, workers)
    totals = counts.sum(axis=1)
    exact = [an.expected_light_count_exact(n, k, c0, o) for k in range(kmin, k_max + 1)]
    mean_exact = float(sum(exact))
    tv, emp, pois = total_variation_poisson(totals, mean_exact)
    per_k = {}
    for i, k in enumerate(range(kmin, k_max + 1)):
        col = counts[:, i].astype(float)
        se = float(col.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        per_k[str(k)] = [float(col.mean()), se, exact[i]]
    return PoissonReport(
        n=n, c0=float(c0), k_max=int(k_max), trials=int(trials),
        base_seed=rng.as_seed(base_seed), orientation=o.value,
        counts=list(range(len(emp))), empirical_prob=[float(x) for x in emp],
        poisson_prob=[float(x) for x in pois], mean_empirical=float(totals.mean()),
        mean_exact=mean_exact, tv_distance=tv, per_k=per_k,
        meta=_meta(n, int(trials), rng.as_seed(base_seed)))


# -- walk band ------------------------------------------------------------------

@dataclass
class WalkBandReport:
    L: int
    A: float
    trials: int
    base_seed: int
    hits: int
    p_hat: float
    stderr: float
    exp_estimate: float
    brownian: float
    kind: str = "uniform"       # "uniform": lightness of L Exp weights; "band": plain walk
    meta: dict = field(default_factory=dict)

    @property
    def rate(self):
        """-ln(p_hat) / (L / A^2); inf when no trial succeeded."""
        if self.hits == 0:
            return math.inf
        return -math.log(self.p_hat) / (self.L / self.A ** 2)

    def rows(self):
        return [(self.L, self.A, self.p_hat, self.stderr, self.exp_estimate, self.brownian)]


def _walk_block(L, A, seed, lo, hi):
    if _accel.USE_NUMBA:
        return kw.walk_band_counts(L, A, np.uint64(seed), lo, hi)
    return kw.walk_band_counts_numpy(L, A, seed, lo, hi)


def _band_block(T, a, seed, lo, hi):
    if _accel.USE_NUMBA:
        return kw.band_walk_counts(T, a, np.uint64(seed), lo, hi)
    return kw.band_walk_counts_numpy(T, a, seed, lo, hi)


def walk_band_experiment(L, A, trials, base_seed=0, workers=1) -> WalkBandReport:
    """Fraction of synthetic L-cycles (i.i.d. Exp(1) weights) that are
    A-uniformly light at their own mean weight.

    The comparison values are exp(-(pi^2/2) L/A^2) and the probability that
    Brownian motion stays in a band of half-width A/2 for time L, which has
    the same exponential rate.
    """
    if L < 2 or A <= 0:
        raise ValueError("need L >= 2 and A > 0")
    seed = rng.as_seed(base_seed)
    hits = int(sum(_map_blocks(_walk_block, (int(L), float(A), seed), trials, workers)))
    p = hits / trials
    return WalkBandReport(int(L), float(A), int(trials), seed, hits, p,
                          binomial_stderr(p, trials),
                          an.uniform_light_probability_estimate(L, A),
                          an.brownian_band_probability(L, A / 2.0),
                          kind="uniform", meta=_meta(0, int(trials), seed))


def band_walk_experiment(T, a, trials, base_seed=0, workers=1) -> WalkBandReport:
    """Fraction of T-step walks with Exp(1) - 1 increments keeping |S_k| < a.

    Reported in WalkBandReport form with L = T and A = 2a, so ``brownian``
    is directly P(max_{t<=T} |B_t| < a).
    """
    if T < 1 or a <= 0:
        raise ValueError("need T >= 1 and a > 0")
    seed = rng.as_seed(base_seed)
    hits = int(sum(_map_blocks(_band_block, (int(T), float(a), seed), trials, workers)))
    p = hits / trials
    return WalkBandReport(int(T), 2.0 * a, int(trials), seed, hits, p,
                          binomial_stderr(p, trials),
                          an.uniform_light_probability_estimate(T, 2.0 * a),
                          an.brownian_band_probability(T, a),
                          kind="band", meta=_meta(0, int(trials), seed))


# -- supercritical split --------------------------------------------------------

@dataclass
class SupercriticalReport:
    n: int
    trials: int
    base_seed: int
    orientation: str
    jump_fraction: float          # share of trials with n mu* > 1/e
    jump_stderr: float
    jump_analytic: float          # 1 - pmf_sum
    sub_fraction: float           # share with n mu* <= 1/e
    envelope_slack: float
    envelope_fraction: float      # share with n mu* <= (1 + (pi^2/2 + slack)/ln^2 n)/e
    length_lower: float
    conditional_count: int
    conditional_median_length: float
    conditional_fraction_above_lower: float
    conditional_lengths: dict     # str(length) -> count
    meta: dict = field(default_factory=dict)


def supercritical_summary(records, cfg: ExperimentConfig, slack=3.0) -> SupercriticalReport:
    n = cfg.n
    w = np.array([r.scaled_weight for r in records])
    lens = np.array([r.length for r in records])
    trials = len(records)
    above = w > an.INV_E
    jump = float(above.mean())
    ln2 = math.log(n) ** 2
    envelope = (1.0 + (math.pi ** 2 / 2.0 + slack) / ln2) / math.e
    _wu, lower = an.supercritical_bounds(n)
    cond = lens[above]
    hist = {str(int(k)): int(c) for k, c in zip(*np.unique(cond, return_counts=True))}
    return SupercriticalReport(
        n=n, trials=trials, base_seed=cfg.base_seed, orientation=cfg.orientation.value,
        jump_fraction=jump, jump_stderr=binomial_stderr(jump, trials),
        jump_analytic=an.jump(cfg.variant), sub_fraction=float((~above).mean()),
        envelope_slack=float(slack), envelope_fraction=float(np.mean(w <= envelope)),
        length_lower=lower, conditional_count=int(cond.size),
        conditional_median_length=float(np.median(cond)) if cond.size else math.nan,
        conditional_fraction_above_lower=float(np.mean(cond > lower)) if cond.size else math.nan,
        conditional_lengths=hist, meta=_meta(n, trials, cfg.base_seed))


def supercritical_length_experiment(n_list, trials, base_seed=0, orientation="directed",
                                    workers=1, slack=3.0) -> list:
    """One SupercriticalReport per n, from min-mean trials at that n."""
    out = []
    for n in n_list:
        an.supercritical_bounds(n)  # domain check before spending time
        cfg = ExperimentConfig(n=n, trials=trials, base_seed=base_seed,
                               orientation=orientation, objective="mean", workers=workers)
        out.append(supercritical_summary(run_trials(cfg), cfg, slack))
    return out


# -- emission -------------------------------------------------------------------

CSV_SCHEMAS = {
    "cdf": ("variant", "c", "empirical", "stderr", "analytic"),
    "pmf": ("variant", "k", "empirical", "stderr", "analytic"),
    "poisson": ("count", "empirical_prob", "poisson_prob"),
    "walkband": ("L", "A", "p_hat", "stderr", "exp_estimate", "brownian"),
    "trials": ("trial", "scaled_weight", "length", "solver", "elapsed"),
}

REPORT_TYPES = {cls.__name__: cls for cls in
                (ComparisonReport, PoissonReport, WalkBandReport, SupercriticalReport)}


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if not math.isfinite(x) else format(float(x), ".17g")
    return str(x)


def table_rows(report, table=None):
    """(table name, rows) for the CSV form of ``report``."""
    if isinstance(report, list) and (not report or isinstance(report[0], TrialRecord)):
        return "trials", [(r.trial_index, r.scaled_weight, r.length, r.solver, r.elapsed)
                          for r in report]
    if isinstance(report, ComparisonReport):
        table = table or "cdf"
        return table, report.cdf_rows() if table == "cdf" else report.pmf_rows()
    if isinstance(report, PoissonReport):
        return "poisson", report.rows()
    if isinstance(report, WalkBandReport):
        return "walkband", report.rows()
    raise TypeError(f"no CSV form for {type(report).__name__}")


def to_json_obj(report):
    if isinstance(report, list):
        if report and isinstance(report[0], TrialRecord):
            return {"type": "trials", "records": [dataclasses.asdict(r) for r in report]}
        return {"type": "list", "items": [to_json_obj(r) for r in report]}
    d = dataclasses.asdict(report)
    meta = d.pop("meta", {})
    return {"type": type(report).__name__, "meta": meta, "data": d}


def from_json_obj(obj):
    kind = obj["type"]
    if kind == "trials":
        return [TrialRecord(**r) for r in obj["records"]]
    if kind == "list":
        return [from_json_obj(x) for x in obj["items"]]
    cls = REPORT_TYPES[kind]
    return cls(meta=obj.get("meta", {}), **obj["data"])


def emit(report, path=None, fmt="csv", table=None, stream=None):
    """Write ``report`` as CSV (17 significant digits), JSON or SVG.

    ``path`` None writes to ``stream`` (stdout by default).
    """
    import sys

    fmt = fmt.lower()
    try:
        if path is None:
            out = stream or sys.stdout
            _write(report, out, fmt, table)
            return
        with open(path, "w", newline="") as fh:
            _write(report, fh, fmt, table)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} output to {path}: {exc}") from exc


def _write(report, fh, fmt, table):
    if fmt == "csv":
        name, rows = table_rows(report, table)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_SCHEMAS[name])
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    elif fmt == "json":
        json.dump(to_json_obj(report), fh, indent=1, allow_nan=True)
        fh.write("\n")
    elif fmt == "svg":
        fh.write(render_svg(report, table))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_report(path):
    with open(path) as fh:
        return from_json_obj(json.load(fh))


def read_csv(path):
    """Rows of an emitted CSV as dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def render_svg(report, table=None, width=480, height=320):
    """Static line chart of a CDF or pmf report (analytic solid, empirical dots)."""
    name, rows = table_rows(report, table)
    if name not in ("cdf", "pmf"):
        raise ValueError("svg output is available for cdf and pmf tables only")
    xs = [float(r[1]) for r in rows]
    ya = [float(r[4]) for r in rows]
    ye = [r[2] for r in rows]
    pad = 40
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    ymax = max([1e-12] + ya + [float(y) for y in ye if y is not None])
    if x1 == x0:
        x1 = x0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - y / ymax * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{pad}" y="{pad - 10}" font-size="12">{report.variant} {name}</text>']
    if xs:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ya))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue"/>')
    for x, y in zip(xs, ye):
        if y is not None:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(float(y)):.2f}" r="2" fill="firebrick"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def default_workers():
    return max(1, os.cpu_count() or 1)
