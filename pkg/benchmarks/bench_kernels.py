"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 48] [--points 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from mhdlimit import _kernels_py

try:
    from mhdlimit import _kernels as _compiled
except ImportError:
    _compiled = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=48)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    h = 2 * np.pi / args.n
    values = rng.standard_normal((3, args.n, args.n, args.n))
    x = np.arange(args.n) * h
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    smooth = np.stack([np.sin(Z) + np.cos(Y), np.sin(X) + np.cos(Z), np.sin(Y) + np.cos(X)])
    points = rng.uniform(0, 2 * np.pi, (args.points, 3))

    cases = {
        "tricubic_periodic": lambda m: m.tricubic_periodic(values, points, h),
        "sign_change_cells": lambda m: m.sign_change_cells(values),
        "sign_change (smooth)": lambda m: m.sign_change_cells(smooth),
    }
    print(f"grid {args.n}^3, {args.points} points, best of {args.repeat}")
    print(f"{'kernel':<22}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}")
    for name, call in cases.items():
        t_py = _best(lambda: call(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:<22}{1e3 * t_py:>14.2f}{'n/a':>16}{'':>10}")
            continue
        t_c = _best(lambda: call(_compiled), args.repeat)
        print(f"{name:<22}{1e3 * t_py:>14.2f}{1e3 * t_c:>16.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
