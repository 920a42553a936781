"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 1000 100000] [--repeat 7]

Each backend runs in its own interpreter (the switch is the
ADJVT_PURE_NUMPY environment variable, read at import time).  Reported
numbers are the best per-call time over ``--repeat`` timing rounds.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit


def measure(sizes, repeat):
    import numpy as np

    from adjvt import _kernels, backend
    from adjvt.adjustment import adjustment_delta
    from adjvt.estimators import RunConfig, em_step, va1_step, va2_step, vt_step, warmup
    from adjvt.model import TRUE_PARAMS, MixtureParams, SeedSpec, simulate_sample
    from adjvt.partition import voronoi_partition

    warmup()
    params = MixtureParams([-1.0, 2.0], [0.7, 0.3])
    part = voronoi_partition(params)
    lw = np.log(params.weights)
    results = {"backend": backend(), "rows": []}

    def best(fn, number):
        return min(timeit.repeat(fn, number=number, repeat=repeat)) / number

    bp, lab, m, w = part.breakpoints, part.labels, params.means, params.weights
    results["rows"].append(("cell_moments", 0, best(lambda: _kernels.cell_moments(bp, lab, m, w, True), 2000)))
    results["rows"].append(("adjustment_delta", 0, best(lambda: adjustment_delta(params), 2000)))
    for n in sizes:
        x = simulate_sample(TRUE_PARAMS, n, SeedSpec(0))
        number = max(1, 200_000 // n)
        cases = {
            "cell_stats": lambda: _kernels.cell_stats(x, part.breakpoints, part.labels, 2),
            "em_accumulate": lambda: _kernels.em_accumulate(x, params.means, lw),
            "loglik": lambda: _kernels.loglik(x, params.means, lw),
            "vt_step": lambda: vt_step(params, x),
            "va1_step": lambda: va1_step(params, x),
            "va2_step": lambda: va2_step(params, x),
            "em_step": lambda: em_step(params, x),
            "va1_step unknown w": lambda: va1_step(params, x, False),
            "em_step unknown w": lambda: em_step(params, x, False),
        }
        for name, fn in cases.items():
            results["rows"].append((name, n, best(fn, number)))
    return results


def run_backend(pure, sizes, repeat):
    env = dict(os.environ, ADJVT_PURE_NUMPY="1" if pure else "0")
    cmd = [sys.executable, __file__, "--child", "--repeat", str(repeat), "--n", *map(str, sizes)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 100_000])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        json.dump(measure(args.n, args.repeat), sys.stdout)
        return 0

    fast = run_backend(False, args.n, args.repeat)
    slow = run_backend(True, args.n, args.repeat)
    if fast["backend"] != "numba":
        print("numba is not available; both columns use the numpy kernels", file=sys.stderr)
    print(f"{'operation':<20} {'n':>8} {'numba us':>10} {'numpy us':>10} {'speedup':>8}")
    for (name, n, t_fast), (_, _, t_slow) in zip(fast["rows"], slow["rows"]):
        size = str(n) if n else "-"
        print(f"{name:<20} {size:>8} {t_fast * 1e6:>10.2f} {t_slow * 1e6:>10.2f} {t_slow / t_fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
