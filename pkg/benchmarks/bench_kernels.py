"""Time the compiled window kernel against the numpy fallback.

    python benchmarks/bench_kernels.py [--m 1000000] [--points 512] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from concfun import _pykernels, kernels


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=1_000_000)
    ap.add_argument("--points", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    v = np.sort(np.random.default_rng(0).standard_normal(args.m))
    zs = np.linspace(0.0, 16.0, args.points)
    ref = _pykernels.window_counts_max(v, zs, True)
    print(f"m={args.m} grid={args.points} active backend={kernels.BACKEND}")
    if kernels.BACKEND == "cython":
        assert np.array_equal(kernels.window_counts_max(v, zs), ref)
        t_c = best_of(lambda: kernels.window_counts_max(v, zs), args.repeat)
        print(f"  cython  {t_c:8.3f} s")
    t_py = best_of(lambda: _pykernels.window_counts_max(v, zs, True), args.repeat)
    print(f"  numpy   {t_py:8.3f} s")
    if kernels.BACKEND == "cython":
        print(f"  speedup {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
