"""Timing comparison of the numba and numpy kernel paths.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

The first numba call in each section pays JIT compilation (cached on disk
afterwards); timings below are post-warmup medians.
"""

import argparse
import time

import numpy as np

from safeevop import kernels
from safeevop.plants import get_plant


def timed(fn, repeats):
    fn()  # warmup (numba compilation / cache load)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def bench(name, make_call, repeats):
    rows = []
    for backend in ("numpy", "numba") if kernels._HAVE_NUMBA else ("numpy",):
        kernels.set_backend(backend)
        rows.append((backend, timed(make_call, repeats)))
    base = rows[0][1]
    print(f"\n{name}")
    for backend, t in rows:
        speedup = base / t if t > 0 else float("inf")
        print(f"  {backend:<6} {t * 1e3:9.2f} ms   x{speedup:.1f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    plant = get_plant("quad-circle")
    pts = rng.random((1_000_000, 2))
    a = rng.uniform(-2, 2, 4)
    ball_pts = rng.random((1_000_000, 4))

    print(f"default backend: {kernels.active_backend()}")

    bench(
        "grid scan, quad-circle at resolution 1e-3 (1e6 lattice points)",
        lambda: kernels.grid_scan(
            1000,
            plant.space.lower,
            plant.space.upper,
            plant.cost.packed(),
            [c.packed() for c in plant.constraints],
        ),
        args.repeats,
    )
    bench(
        "polynomial batch evaluation (1e6 points, 5 terms)",
        lambda: kernels.poly_eval(plant.cost.coeffs, plant.cost.powers, pts),
        args.repeats,
    )
    bench(
        "affine violation count (1e6 points, 4-d)",
        lambda: kernels.affine_violations(a, -1.0, ball_pts),
        args.repeats,
    )
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
