"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np
import scipy.linalg

from liespinor import kernels


def step_matrices(n, m=3, seed=0):
    rng = np.random.default_rng(seed)
    gen = 0.05 * (rng.standard_normal((2 * n * n, m, m)) + 1j * rng.standard_normal((2 * n * n, m, m)))
    mats = np.array([scipy.linalg.expm(x) for x in gen])
    Su = mats[: (n - 1) * n].reshape(n - 1, n, m, m)
    Sv = mats[n * n : n * n + n * (n - 1)].reshape(n, n - 1, m, m)
    return Su, Sv


def cases():
    Su, Sv = step_matrices(256)
    f0 = np.eye(3, dtype=complex)
    return {
        "rk4_profile (20k steps)": lambda impl: kernels.rk4_profile(1e-3, 0.0, 1e-3, 5e-4, 1e-3, 20.0, 20001, impl=impl),
        "tree_products 256x256": lambda impl: kernels.tree_products(Su, Sv, f0, True, impl=impl),
        "plaquette_holonomy 256x256": lambda impl: kernels.plaquette_holonomy(Su, Sv, True, impl=impl),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = kernels.backends()
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':30s}" + "".join(f"{name:>12s}" for name in impls) + f"{'speedup':>10s}")
    for label, fn in cases().items():
        times = {name: min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
                 for name, impl in impls.items()}
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{label:30s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times.values()) + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
