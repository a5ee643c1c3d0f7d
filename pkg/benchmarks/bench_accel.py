"""Compare the numba and pure-numpy backends on the hot kernels.

    python3 benchmarks/bench_accel.py [--replicas 16] [--steps 2000] [--repeat 3]

The numba timings exclude compilation (one warm-up call per kernel).
"""

import argparse
import time

import numpy as np

from vendi import _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(R, steps, rng):
    X = rng.uniform(-2.5, 2.5, size=(R, 2))
    x = X[:, 0].copy()
    noise = rng.standard_normal((steps, R, 2))

    def advance(impl):
        pos = X.copy()
        rec = np.empty((steps // 100 + 1, R, 2))
        impl["dw_advance"](pos, noise, 0, 1e-2, 100.0, 10 * steps, _accel.KIND_RATIO, 1.0, 1.0,
                           1e-12, 1.0, -6.0, 1.0, 100, rec)

    return {
        "rbf_matrix": lambda impl: impl["rbf_matrix"](X, 1.0),
        "ratio_matrix": lambda impl: impl["ratio_matrix"](x),
        "position_grad q=1": lambda impl: impl["position_grad"](X, _accel.KIND_RATIO, 1.0, 1.0, 1e-12),
        "position_grad q=0.5": lambda impl: impl["position_grad"](X, _accel.KIND_RBF, 1.0, 0.5, 1e-12),
        f"dw_advance {steps} steps": advance,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=16)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _accel.NUMBA_IMPL is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"replicas={args.replicas}  best of {args.repeat}")
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases(args.replicas, args.steps, rng).items():
        fn(_accel.NUMBA_IMPL)  # compile / load from cache
        t_np = best_of(lambda: fn(_accel.NUMPY_IMPL), args.repeat)
        t_nb = best_of(lambda: fn(_accel.NUMBA_IMPL), args.repeat)
        print(f"{name:<24}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
