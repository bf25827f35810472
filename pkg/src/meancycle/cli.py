"""
Command-line entry point.

Every run first prints its resolved configuration (one JSON line on
stderr, prefixed ``# config:``), then writes results to ``--out`` or stdout.
All c values use the scaled convention (a cycle is c-light when its mean
weight is at most c/n) and every logarithm is natural.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import analytic as an
from . import experiments as ex
from . import instances as inst
from . import solvers as sv
from .kernels import rng

SEED_ENV = "MEANCYCLE_SEED"

UNITS = ("c values are scaled weights: c-light means mean weight <= c/n. "
         "Logarithms are natural.")


class UsageError(ValueError):
    pass


# -- argument grammar -----------------------------------------------------------

def _usage_on_bad_number(fn):
    def wrapped(text):
        try:
            return fn(text)
        except UsageError:
            raise
        except ValueError as exc:
            raise UsageError(f"cannot parse {text!r}: {exc}") from None
    wrapped.__doc__ = fn.__doc__
    return wrapped


@_usage_on_bad_number
def parse_grid(text):
    """``a:b:step`` (inclusive of b) or a comma list of numbers."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise UsageError(f"grid needs step > 0 and b >= a, got {text!r}")
        m = int(math.floor((b - a) / step + 1e-9))
        return [round(a + i * step, 12) for i in range(m + 1)]
    vals = [float(p) for p in text.split(",") if p.strip()]
    if vals != sorted(vals):
        raise UsageError("grid values must be ascending")
    return vals


@_usage_on_bad_number
def parse_klist(text):
    """``2..10,100`` style list of integers."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty k list")
    return out


@_usage_on_bad_number
def parse_int_list(text):
    return [int(p) for p in text.split(",") if p.strip()]


def resolve_seed(flag_value):
    """--seed beats $MEANCYCLE_SEED beats 0."""
    if flag_value is not None:
        return rng.as_seed(flag_value), "flag"
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return rng.as_seed(int(env, 0)), "env"
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0, "default"


def _orientation(args):
    return inst.Orientation.UNDIRECTED if args.undirected else inst.Orientation.DIRECTED


def _variant_choices():
    return [v.value.replace("_", "-") for v in an.LimitLaw]


def build_parser():
    p = argparse.ArgumentParser(
        prog="meancycle",
        description="Minimum mean/max weight cycles in complete graphs with Exp(1) weights. " + UNITS)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, out=True, formats=("csv", "json")):
        if seed:
            sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                            help=f"base seed (default: ${SEED_ENV}, else 0)")
        if out:
            sp.add_argument("--out", default=None, help="output path (default stdout)")
            sp.add_argument("--format", choices=formats, default=formats[0])

    def orient(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--directed", action="store_true", help="directed complete graph (default)")
        g.add_argument("--undirected", action="store_true", help="undirected complete graph")

    def workers(sp):
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    s = sub.add_parser("solve", help="solve one sampled instance",
                       description="Sample one instance and solve it. " + UNITS)
    s.add_argument("--n", type=int, required=True)
    orient(s)
    s.add_argument("--objective", choices=ex.OBJECTIVES, default="mean")
    s.add_argument("--solver", default="all",
                   help="karp, howard, brute_force, pruned_karp, prefix_search or all "
                        "(all: karp, howard and brute_force when n <= 9, else prefix_search)")
    common(s, formats=("json",))

    s = sub.add_parser("sample", help="dump a sampled instance",
                       description="Write an instance as an i,j,weight edge list (hex floats) or npz.")
    s.add_argument("--n", type=int, required=True)
    orient(s)
    common(s, formats=("csv", "npz"))

    s = sub.add_parser("census", help="count c-light cycles by length",
                       description="Exact counts of c-light cycles of length <= kmax. " + UNITS)
    s.add_argument("--n", type=int, required=True)
    orient(s)
    s.add_argument("--c", type=float, required=True, help="scaled lightness level")
    s.add_argument("--kmax", type=int, default=6)
    common(s, formats=("json",))

    s = sub.add_parser("analytic-table", help="limiting length pmf table",
                       description="Limiting p_k, its tail asymptote and their difference.")
    s.add_argument("--variant", choices=_variant_choices() + ["all"], default="all")
    s.add_argument("--k", default="2..10,100", help="k list, e.g. 2..10,100")
    common(s, seed=False)

    s = sub.add_parser("cdf-curve", help="limiting CDF on a grid",
                       description="Limiting Pr[n * weight <= c] on a grid. " + UNITS)
    s.add_argument("--variant", choices=_variant_choices(), required=True)
    s.add_argument("--grid", "--c", dest="grid", default=None,
                   help="a:b:step or comma list (default 0:1.2:0.01 for max, 0:0.5:0.01 for mean)")
    common(s, seed=False, formats=("csv", "json", "svg"))

    s = sub.add_parser("experiment", help="Monte Carlo against the limit laws",
                       description="Solve sampled instances and compare with the limit CDF "
                                   "and length pmf. " + UNITS)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trials", type=int, required=True)
    orient(s)
    s.add_argument("--objective", choices=ex.OBJECTIVES, default="mean")
    s.add_argument("--grid", "--c", dest="grid", default=None, help="CDF grid (a:b:step or list)")
    s.add_argument("--table", choices=("cdf", "pmf", "trials"), default="cdf",
                   help="table written for csv/svg output")
    s.add_argument("--solver", default=ex.DEFAULT_MEAN_SOLVER, help="exact solver for mean objective")
    workers(s)
    common(s, formats=("csv", "json", "svg"))

    s = sub.add_parser("poisson", help="light-cycle counts against a Poisson law",
                       description="Counts of c-light cycles of length <= kmax versus Poisson "
                                   "with the exact finite-n mean. " + UNITS)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=float, required=True, help="scaled lightness level c0")
    s.add_argument("--kmax", type=int, default=8)
    s.add_argument("--trials", type=int, required=True)
    orient(s)
    workers(s)
    common(s)

    s = sub.add_parser("walkband", help="uniform lightness / band walk probability",
                       description="uniform mode: share of L i.i.d. Exp(1) weights that are "
                                   "A-uniformly light at their own mean. band mode: share of "
                                   "L-step walks with Exp(1)-1 steps staying strictly inside "
                                   "(-A, A).")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--A", type=float, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--mode", choices=("uniform", "band"), default="uniform")
    workers(s)
    common(s)

    s = sub.add_parser("supercritical", help="split at 1/e and supercritical bounds",
                       description="Share of trials with n * mu > 1/e, envelope check and "
                                   "conditional lengths. With --trials 0 only the analytic "
                                   "bounds are printed. " + UNITS)
    s.add_argument("--n", default="1000", help="comma list of n")
    s.add_argument("--trials", type=int, default=0)
    orient(s)
    s.add_argument("--slack", type=float, default=3.0, help="envelope slack added to pi^2/2")
    s.add_argument("--A", type=float, default=None, help="uniformity slack for the expected count")
    s.add_argument("--delta", type=float, default=None, help="relative excess over 1/e")
    s.add_argument("--L", type=int, default=None, help="window end L2 (window is L2-1 < L <= L2)")
    workers(s)
    common(s, formats=("json",))
    return p


# -- commands -------------------------------------------------------------------

def _print_config(cfg):
    print("# config: " + json.dumps(cfg, sort_keys=True, default=str), file=sys.stderr)


def _open_out(args):
    return open(args.out, "w") if args.out else sys.stdout


def _dump_json(obj, args):
    fh = _open_out(args)
    try:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_solve(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    names = args.solver.split(",")
    if names == ["all"]:
        names = ["karp", "howard", "brute_force"] if args.n <= sv.BRUTE_FORCE_MAX_N \
            else ["karp", "howard", "prefix_search"]
    if args.objective == "max":
        names = ["threshold"]
    for name in names:
        try:
            sv.Solver(name)
        except ValueError:
            raise UsageError(f"unknown solver {name!r}") from None
    if "brute_force" in names and args.n > sv.BRUTE_FORCE_MAX_N:
        raise UsageError(f"brute_force needs n <= {sv.BRUTE_FORCE_MAX_N}")
    if args.n < o.min_cycle_length:
        raise UsageError(f"n must be >= {o.min_cycle_length}")
    _print_config({"command": "solve", "n": args.n, "orientation": o.value, "seed": seed,
                   "seed_source": src, "objective": args.objective, "solvers": names})
    g = inst.sample_complete(args.n, o, seed)
    results = []
    for name in names:
        res = sv.min_max_cycle(g) if name == "threshold" else sv.solve(g, name)
        results.append(res.to_dict())
    vals = [r["min_mean"] for r in results]
    agree = max(vals) - min(vals) <= 1e-9 * max(abs(min(vals)), 1e-300)
    _dump_json({"results": results, "agree": bool(agree)}, args)


def cmd_sample(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    if args.n < o.min_cycle_length:
        raise UsageError(f"n must be >= {o.min_cycle_length}")
    if args.format == "npz" and not args.out:
        raise UsageError("npz output needs --out")
    _print_config({"command": "sample", "n": args.n, "orientation": o.value, "seed": seed,
                   "seed_source": src, "format": args.format})
    g = inst.sample_complete(args.n, o, seed)
    if args.out:
        inst.dump(g, args.out, args.format)
    else:
        sys.stdout.write(inst.dumps_csv(g))


def cmd_census(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    if args.kmax < o.min_cycle_length or args.kmax > args.n:
        raise UsageError(f"kmax must be in [{o.min_cycle_length}, n]")
    if args.c < 0:
        raise UsageError("c must be >= 0")
    _print_config({"command": "census", "n": args.n, "orientation": o.value, "seed": seed,
                   "seed_source": src, "c": args.c, "kmax": args.kmax})
    g = inst.sample_complete(args.n, o, seed)
    cen = sv.count_light_cycles(g, args.c, args.kmax)
    expected = {str(k): an.expected_light_count_exact(args.n, k, args.c, o) for k in cen.counts}
    _dump_json({"counts": {str(k): v for k, v in cen.counts.items()}, "total": cen.total,
                "expected_exact": expected, "c": args.c, "kmax": args.kmax,
                "n": args.n, "orientation": o.value, "seed": seed}, args)


def analytic_table_rows(variants, ks):
    rows = []
    for v in variants:
        for k in ks:
            if k < v.k_min:
                continue
            p = an.length_pmf(k, v)
            t = an.tail_asymptote(k, v)
            rows.append((v.value, k, p, t, abs(p - t)))
    return rows


def cmd_analytic_table(args):
    ks = parse_klist(args.k)
    variants = list(an.LimitLaw) if args.variant == "all" else [an.as_limit_law(args.variant)]
    _print_config({"command": "analytic-table", "variants": [v.value for v in variants], "k": ks})
    rows = analytic_table_rows(variants, ks)
    header = ("variant", "k", "p_k", "tail_asymptote", "abs_diff")
    if args.format == "json":
        _dump_json({"columns": list(header), "rows": [list(r) for r in rows],
                    "pmf_sum": {v.value: an.pmf_sum(v) for v in variants}}, args)
        return
    import csv
    fh = _open_out(args)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([ex._fmt(x) for x in r])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _default_grid(variant):
    return parse_grid("0:1.2:0.01" if variant.objective == "max" else "0:0.5:0.01")


def cmd_cdf_curve(args):
    v = an.as_limit_law(args.variant)
    grid = parse_grid(args.grid) if args.grid else _default_grid(v)
    if grid and grid[0] < 0:
        raise UsageError("grid values must be >= 0")
    _print_config({"command": "cdf-curve", "variant": v.value, "grid": grid})
    ex.emit(ex.cdf_curve(v, grid), args.out, args.format, table="cdf")


def cmd_experiment(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    v = an.limit_law_for(o, args.objective)
    grid = parse_grid(args.grid) if args.grid else _default_grid(v)
    try:
        cfg = ex.ExperimentConfig(n=args.n, trials=args.trials, base_seed=seed, orientation=o,
                                  objective=args.objective, c_grid=grid,
                                  workers=args.workers, solver=args.solver)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "svg" and args.table == "trials":
        raise UsageError("svg output is available for cdf and pmf tables only")
    _print_config(dict(cfg.to_dict(), command="experiment", seed_source=src,
                       first_trial_seed=cfg.seed_for(0)))
    records = ex.run_trials(cfg)
    if args.table == "trials":
        ex.emit(records, args.out, args.format)
        return
    report = ex.compare_to_limit(records, cfg)
    ex.emit(report, args.out, args.format, table=args.table)


def cmd_poisson(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    if args.trials < 1 or args.kmax < o.min_cycle_length or args.c < 0 or args.workers < 1:
        raise UsageError("need trials >= 1, c >= 0, workers >= 1 and kmax >= the minimum cycle length")
    _print_config({"command": "poisson", "n": args.n, "c0": args.c, "kmax": args.kmax,
                   "trials": args.trials, "orientation": o.value, "seed": seed,
                   "seed_source": src, "workers": args.workers})
    rep = ex.poisson_check(args.n, args.c, args.kmax, args.trials, seed, o, args.workers)
    ex.emit(rep, args.out, args.format)


def cmd_walkband(args):
    seed, src = resolve_seed(args.seed)
    if args.trials < 1 or args.A <= 0 or args.L < 2 or args.workers < 1:
        raise UsageError("need trials >= 1, A > 0, L >= 2 and workers >= 1")
    _print_config({"command": "walkband", "mode": args.mode, "L": args.L, "A": args.A,
                   "trials": args.trials, "seed": seed, "seed_source": src,
                   "workers": args.workers})
    if args.mode == "band":
        rep = ex.band_walk_experiment(args.L, args.A, args.trials, seed, args.workers)
    else:
        rep = ex.walk_band_experiment(args.L, args.A, args.trials, seed, args.workers)
    ex.emit(rep, args.out, args.format)


def cmd_supercritical(args):
    seed, src = resolve_seed(args.seed)
    o = _orientation(args)
    ns = parse_int_list(args.n)
    if not ns or min(ns) < 16:
        raise UsageError("every n must be >= 16")
    if args.trials < 0 or args.workers < 1:
        raise UsageError("need trials >= 0 and workers >= 1")
    window = (args.A, args.delta, args.L)
    if any(x is not None for x in window) and any(x is None for x in window):
        raise UsageError("--A, --delta and --L go together")
    _print_config({"command": "supercritical", "n": ns, "trials": args.trials,
                   "orientation": o.value, "seed": seed, "seed_source": src,
                   "slack": args.slack, "A": args.A, "delta": args.delta, "L": args.L,
                   "workers": args.workers})
    out = {"bounds": {}}
    for n in ns:
        wu, ll = an.supercritical_bounds(n)
        out["bounds"][str(n)] = {"weight_upper": wu, "scaled_weight_upper": wu * n,
                                 "length_lower": ll}
    if args.L is not None:
        p = an.SupercriticalParams(A=args.A, delta=args.delta, L1=args.L - 1, L2=args.L)
        out["window"] = {"expected_uniform_light_count": an.expected_uniform_light_count(p, o),
                         "uniform_light_probability": an.uniform_light_probability_estimate(
                             args.L, args.A),
                         "variance_ratio_bound": {
                             str(n): list(an.variance_ratio_bound(p, n)) for n in ns}}
    if args.trials > 0:
        reps = ex.supercritical_length_experiment(ns, args.trials, seed, o, args.workers,
                                                  args.slack)
        out["experiments"] = ex.to_json_obj(reps)["items"]
    _dump_json(out, args)


COMMANDS = {
    "solve": cmd_solve,
    "sample": cmd_sample,
    "census": cmd_census,
    "analytic-table": cmd_analytic_table,
    "cdf-curve": cmd_cdf_curve,
    "experiment": cmd_experiment,
    "poisson": cmd_poisson,
    "walkband": cmd_walkband,
    "supercritical": cmd_supercritical,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"meancycle {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        logging.getLogger(__name__).debug("failure", exc_info=True)
        print(f"meancycle {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
