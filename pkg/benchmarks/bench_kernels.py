"""Compare the compiled trig-evaluation kernel against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from holonomy_lab._core import _kernels_py

try:
    from holonomy_lab._core import _kernels as _compiled
except ImportError:
    _compiled = None


def bench(fn, a, b, pts, repeat=200):
    fn(a, b, pts)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(a, b, pts)
    return (time.perf_counter() - t0) / repeat


def main():
    rng = np.random.default_rng(0)
    print(f"{'modes':>6} {'points':>7} {'numpy (us)':>11} {'cython (us)':>12} {'speedup':>8}")
    for n_modes in (8, 32, 128):
        for n_pts in (256, 1024, 8192):
            a = rng.normal(scale=0.01, size=n_modes + 1)
            b = rng.normal(scale=0.01, size=n_modes + 1)
            pts = rng.uniform(size=n_pts)
            t_py = bench(_kernels_py.eval_trig_series, a, b, pts)
            if _compiled is None:
                print(f"{n_modes:>6} {n_pts:>7} {t_py * 1e6:>11.1f} {'n/a':>12} {'n/a':>8}")
                continue
            t_cy = bench(_compiled.eval_trig_series, a, b, pts)
            print(f"{n_modes:>6} {n_pts:>7} {t_py * 1e6:>11.1f} {t_cy * 1e6:>12.1f} "
                  f"{t_py / t_cy:>8.2f}")

    # end-to-end: composition chains as used by the holonomy iteration
    from holonomy_lab import KERNEL_IMPLEMENTATION, CircleDiffeo, compose
    rng = np.random.default_rng(1)
    gs = [CircleDiffeo.rotation(rng.uniform()) for _ in range(50)]
    t0 = time.perf_counter()
    acc = CircleDiffeo.identity()
    for g in gs:
        acc = compose(g, acc, validate=False)
    t_chain = time.perf_counter() - t0
    print(f"\n50-fold composition chain ({KERNEL_IMPLEMENTATION} kernel, "
          f"set HOLONOMY_LAB_PURE_PY=1 for the fallback): {t_chain * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
