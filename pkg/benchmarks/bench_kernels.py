"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--grid 48] [--repeat 5]

Times each kernel on arrays sized like a 3D state on an N^3 grid, checks
that both backends agree, then times one full Picard iteration per backend.
"""

import argparse
import math
import timeit

import numpy as np

from nsmild import kernels, mild
from nsmild.data import random_divfree


def _arrays(n, rng):
    modes = n * n * (n // 2 + 1)
    lam = np.ascontiguousarray(rng.uniform(0, 3 * n * n, modes))
    acc = rng.standard_normal((3, modes)) + 1j * rng.standard_normal((3, modes))
    left = rng.standard_normal((3, modes)) + 1j * rng.standard_normal((3, modes))
    right = rng.standard_normal((3, modes)) + 1j * rng.standard_normal((3, modes))
    vals = rng.standard_normal((3, n**3))
    return lam, acc, left, right, vals


def bench(n, repeat):
    rng = np.random.default_rng(0)
    lam, acc0, left, right, vals = _arrays(n, rng)
    out = {}
    results = {}
    for backend in ("cython", "python"):
        try:
            kernels.use_backend(backend)
        except ImportError:
            print(f"{backend}: unavailable")
            continue
        dec, wl, wr = (np.empty_like(lam) for _ in range(3))
        acc = acc0.copy()
        cases = {
            "etd_weights": lambda: kernels.etd_weights(lam, 1e-3, dec, wl, wr),
            "etd_accumulate": lambda: kernels.etd_accumulate(acc, dec, wl, wr, left, right),
            "power_sum q=5": lambda: kernels.power_sum(vals, 5.0),
            "power_sum q=2.5": lambda: kernels.power_sum(vals, 2.5),
            "max_magnitude": lambda: kernels.max_magnitude(vals),
        }
        for name, fn in cases.items():
            t = min(timeit.repeat(fn, number=1, repeat=repeat))
            out.setdefault(name, {})[backend] = t
        kernels.etd_weights(lam, 1e-3, dec, wl, wr)
        acc = acc0.copy()
        kernels.etd_accumulate(acc, dec, wl, wr, left, right)
        results[backend] = (dec.copy(), wl.copy(), acc, kernels.power_sum(vals, 5.0))

        cfg = mild.SolverConfig(d=3, grid_points=n, delta=0.05, nodes=8, picard_max_iterations=1)
        a = random_divfree(cfg.domain, 0.2, seed=1)
        t = min(timeit.repeat(lambda: mild.solve_mild(a, cfg), number=1, repeat=max(1, repeat // 2)))
        out.setdefault("picard iteration (8 nodes)", {})[backend] = t
    kernels.use_backend("cython" if "cython" in results else "python")

    print(f"grid {n}^3, best of {repeat}")
    print(f"{'kernel':<28}{'cython [ms]':>14}{'python [ms]':>14}{'speedup':>10}")
    for name, row in out.items():
        c, p = row.get("cython", math.nan), row.get("python", math.nan)
        print(f"{name:<28}{1e3 * c:>14.2f}{1e3 * p:>14.2f}{p / c:>10.2f}")
    if len(results) == 2:
        c, p = results["cython"], results["python"]
        diffs = [
            np.max(np.abs(c[0] - p[0])),
            np.max(np.abs(c[1] - p[1]) / np.maximum(np.abs(p[1]), 1e-300)),
            np.max(np.abs(c[2] - p[2])),
            abs(c[3] / p[3] - 1),
        ]
        print("max backend disagreement:", " ".join(f"{d:.2e}" for d in diffs))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=48)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    bench(a.grid, a.repeat)
