"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 20000]

Each kernel is called once before timing so compile time is excluded;
reported numbers are the best of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from pa_patch import _accel, _kernels


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, d, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
    order = rng.permutation(n).astype(np.int64)
    scores = np.round(rng.normal(size=n), 3)
    positive = y > 0
    C = rng.normal(size=(k, d))

    def sweep(fn, mode):
        return lambda: fn(np.zeros(d), X, y, order, mode, np.inf, 0.01, 1)

    return [
        ("online_sweep (PA)", sweep(_kernels.online_sweep_nb, _kernels.MODE_PA),
         sweep(_kernels.online_sweep_np, _kernels.MODE_PA)),
        ("online_sweep (SGD)", sweep(_kernels.online_sweep_nb, _kernels.MODE_SGD),
         sweep(_kernels.online_sweep_np, _kernels.MODE_SGD)),
        ("roc_band_area (full)", lambda: _kernels.roc_band_area_nb(scores, positive, 1.0),
         lambda: _kernels.roc_band_area_np(scores, positive, 1.0)),
        ("roc_band_area (0.1%)", lambda: _kernels.roc_band_area_nb(scores, positive, 0.001),
         lambda: _kernels.roc_band_area_np(scores, positive, 0.001)),
        (f"nearest_center (k={k})", lambda: _kernels.nearest_center_nb(X, C),
         lambda: _kernels.nearest_center_np(X, C)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20_000)
    parser.add_argument("--d", type=int, default=32)
    parser.add_argument("--k", type=int, default=256)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _accel.NUMBA_INSTALLED:
        print("numba is not installed; both columns run the numpy path")
    print(f"n={args.n} d={args.d} default backend={_accel.backend()}")
    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, nb, np_ in cases(args.n, args.d, args.k, args.seed):
        nb()
        np_()
        t_nb, t_np = best_of(nb, args.repeat), best_of(np_, args.repeat)
        print(f"{name:<24}{t_nb * 1e3:>12.2f}{t_np * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
