"""Time the compiled scan kernel against the pure-Python fallback on identical plate families.

Usage: python benchmarks/bench_scan.py [--repeat 3] [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nkakeya import kernels
from nkakeya.grassmann import Box, NormalFamily, normal_net
from nkakeya.kakeya import init_assignment
from nkakeya.manifold import codim2_example, parabola
from nkakeya.plates import coverage, widen_to_plates


def family(manifold, box, R):
    a = init_assignment(normal_net(NormalFamily(manifold, box), 1.0 / R), R)
    return a, widen_to_plates(a.entries, R, verify=False).plates


def cases(quick: bool):
    par = parabola()
    box1 = Box.interval(-0.25, 0.25)
    a, pl = family(par, box1, 64)
    yield "plates d=2 R=64", pl, 2.0, 512 if quick else 1024, None
    yield "segments+eps d=2 R=64", a.segments(), 2.0, 512 if quick else 1024, 1.0 / 64
    c2 = codim2_example()
    box2 = Box(np.zeros(2), 0.25)
    a, pl = family(c2, box2, 8)
    yield "plates d=4 R=8", pl, 2.0, 24 if quick else 40, None
    yield "capsules d=4 R=8", a.segments(), 2.0, 24 if quick else 40, 1.0 / 8


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--quick", action="store_true")
    args = p.parse_args(argv)
    if kernels.compiled_scan_sets is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'case':<24}{'res':>6}{'compiled s':>12}{'python s':>12}{'speedup':>9}  same")
    for name, sets, L, res, eps in cases(args.quick):
        tc, c = best_of(lambda: coverage(sets, L, res, eps=eps, backend=kernels.compiled_scan_sets), args.repeat)
        tp, f = best_of(lambda: coverage(sets, L, res, eps=eps, backend=kernels.fallback_scan_sets), 1)
        same = np.array_equal(c.hist, f.hist)
        print(f"{name:<24}{res:>6}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}  {same}")


if __name__ == "__main__":
    main()
