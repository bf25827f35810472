"""
Numba kernels versus the numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time (MEANCYCLE_NO_NUMBA=1 selects numpy). Timings are the best of
``--repeat`` runs after one warm-up call, so JIT compilation is excluded.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import os
import subprocess
import sys
import time


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def child(repeat):
    import numpy as np

    from meancycle import _accel, experiments, instances, solvers

    g60 = instances.sample_complete(60, "directed", 1)
    g200 = instances.sample_complete(200, "directed", 2)
    u40 = instances.sample_complete(40, "undirected", 3)
    cases = {
        "sample n=1000 directed": lambda: instances.sample_complete(1000, "directed", 7),
        "karp n=60 directed": lambda: solvers.karp_min_mean_cycle(g60),
        "karp n=40 undirected": lambda: solvers.karp_min_mean_cycle(u40),
        "min_max n=200 directed": lambda: solvers.min_max_cycle(g200),
        "uniform walk L=2000 x 500": lambda: experiments.walk_band_experiment(2000, 44.7, 500, 3),
        "band walk T=10000 x 200": lambda: experiments.band_walk_experiment(10000, 100.0, 200, 3),
    }
    out = {"backend": _accel.backend(), "numpy": np.__version__, "timings": {}}
    for name, fn in cases.items():
        out["timings"][name] = _best(fn, repeat)
    print(json.dumps(out))


def run_backend(no_numba, repeat):
    env = dict(os.environ)
    if no_numba:
        env["MEANCYCLE_NO_NUMBA"] = "1"
    else:
        env.pop("MEANCYCLE_NO_NUMBA", None)
    res = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("--json", default=None, help="also write the raw timings here")
    args = ap.parse_args(argv)
    if args.child:
        child(args.repeat)
        return 0
    jit = run_backend(False, args.repeat)
    ref = run_backend(True, args.repeat)
    print(f"{'case':30s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s}")
    for name, t_jit in jit["timings"].items():
        t_np = ref["timings"][name]
        print(f"{name:30s} {t_jit:11.5f} {t_np:11.5f} {t_np / t_jit:8.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"numba": jit, "numpy": ref}, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
