"""Benchmark the hot kernels under the numba and numpy backends.

Runs the banded operator application and the Monte Carlo path-sum kernel on
realistic problem sizes with both implementations and prints a timing
table.  The backends consume identical inputs; the measured results are
cross-checked to floating-point roundoff before timing.
"""

import math
import time

import numpy as np

from gbmsum import _kernels
from gbmsum.params import ReducedParams
from gbmsum.solver import GaussianStepOperator, Grid


def time_call(fn, *args, repeats=20):
    fn(*args)  # warm up (JIT compile / allocator)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_operator():
    print("-" * 72)
    print("banded operator application (one fixed-point iteration step)")
    print("-" * 72)
    for beta, rho, u_max in ((1.0, -0.1, 24.0), (0.1, -0.1, 10.0), (0.0016, 0.001, 11.0)):
        h = min(0.01, math.sqrt(beta) / 4.0)
        grid = Grid(h, int(u_max / h) + 1)
        op = GaussianStepOperator(grid, ReducedParams(beta=beta, rho=rho))
        rng = np.random.default_rng(0)
        values = np.abs(rng.standard_normal(grid.n_points))
        values[0] = 0.0
        band, k0 = op._band, op._k0
        cols = k0[:, None] + np.arange(band.shape[1])[None, :]
        t_np, out_np = time_call(_kernels._banded_matvec_np, band, k0, values, cols)
        line = (f"beta={beta:<7g} n={grid.n_points:<6d} band={band.shape[1]:<5d} "
                f"numpy {t_np * 1e3:8.2f} ms")
        if _kernels.NUMBA_AVAILABLE:
            t_nb, out_nb = time_call(_kernels._banded_matvec_nb, band, k0, values)
            rel = np.max(np.abs(out_nb - out_np)) / max(np.max(np.abs(out_np)), 1e-300)
            line += f"   numba {t_nb * 1e3:8.2f} ms   speedup {t_np / t_nb:5.1f}x   agree {rel:.1e}"
        print(line)


def bench_path_sums():
    print("-" * 72)
    print("Monte Carlo path sums (cumulative-product accumulation)")
    print("-" * 72)
    rng = np.random.default_rng(1)
    for n_paths, mean_len, kind in ((200_000, 10, "fixed"), (100_000, 10, "geometric")):
        if kind == "fixed":
            lengths = np.full(n_paths, mean_len, dtype=np.int64)
        else:
            lengths = rng.geometric(1.0 / mean_len, size=n_paths).astype(np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)])
        z = rng.standard_normal(offsets[-1])
        scale = np.full(n_paths, 0.3)
        drift = np.full(n_paths, -0.05)
        t_np, out_np = time_call(_kernels._path_sums_np, z, offsets, scale, drift,
                                 repeats=5)
        line = (f"{kind:<10s} paths={n_paths:<8d} draws={offsets[-1]:<9d} "
                f"numpy {t_np * 1e3:8.2f} ms")
        if _kernels.NUMBA_AVAILABLE:
            t_nb, out_nb = time_call(_kernels._path_sums_nb, z, offsets, scale, drift,
                                     repeats=5)
            rel = np.max(np.abs(out_nb - out_np)) / np.max(np.abs(out_np))
            line += f"   numba {t_nb * 1e3:8.2f} ms   speedup {t_np / t_nb:5.1f}x   agree {rel:.1e}"
        print(line)


if __name__ == "__main__":
    print(f"active backend: {_kernels.backend_name()} "
          f"(numba available: {_kernels.NUMBA_AVAILABLE})")
    bench_operator()
    bench_path_sums()
