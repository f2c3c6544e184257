"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from havokts import _pykernels

try:
    from havokts import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    A = rng.standard_normal((14, 14)) * 0.1
    B = rng.standard_normal(14)
    v0 = rng.standard_normal(14)
    u = rng.standard_normal(5000)
    x = np.asarray(_pykernels.lorenz_rk4(-8.0, 8.0, 27.0, 10.0, 28.0, 8 / 3, 0.01, 1000, 20000))[:, 0]
    # delay embeddings as the false-nearest-neighbor search sees them
    emb = {d: np.ascontiguousarray(np.lib.stride_tricks.sliding_window_view(x, 19 * (d - 1) + 1)[:, ::19])
           for d in (3, 4, 8)}
    ia = rng.integers(0, 16, 20000).astype(np.int64)
    ib = rng.integers(0, 16, 20000).astype(np.int64)
    return {
        "lorenz_rk4 (20k steps)": lambda k: k.lorenz_rk4(-8.0, 8.0, 27.0, 10.0, 28.0, 8 / 3, 0.01, 1000, 20000),
        "forced_linear_rk4 (r=15, 5k steps)": lambda k: k.forced_linear_rk4(A, B, v0, u, 0.01, 5000),
        "nearest_neighbors (Lorenz, d=3)": lambda k: k.nearest_neighbors(emb[3]),
        "nearest_neighbors (Lorenz, d=4)": lambda k: k.nearest_neighbors(emb[4]),
        "nearest_neighbors (Lorenz, d=8)": lambda k: k.nearest_neighbors(emb[8]),
        "binned_mutual_information (20k, 16 bins)": lambda k: k.binned_mutual_information(ia, ib, 16),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels are not built; only the Python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:44s} {t_py:12.2f} {'-':>12s} {'-':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:44s} {t_py:12.2f} {t_cy:12.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
