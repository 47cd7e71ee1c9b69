"""Compare the compiled extension against the pure-NumPy fallback.

Kernel microbenchmarks run both implementations in-process; the full
time-step comparison launches subprocesses so each backend is selected at
import time, exactly as in normal use.

Usage: python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from gnsch import _kernels_py

try:
    from gnsch import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat=200):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    rng = np.random.default_rng(0)
    rows = []

    # CSR matvec on a system the size of the 2D coupled solve (64x64 grid)
    n = 2 * 64 * 64
    nnz_per_row = 8
    indptr = np.arange(0, n * nnz_per_row + 1, nnz_per_row, dtype=np.int64)
    indices = rng.integers(0, n, size=n * nnz_per_row).astype(np.int64)
    data = rng.normal(size=n * nnz_per_row)
    x = rng.normal(size=n)
    rows.append(("csr_matvec (n=%d)" % n,
                 timeit(lambda: _kernels_py.csr_matvec(indptr, indices, data, x)),
                 timeit(lambda: _kernels.csr_matvec(indptr, indices, data, x))
                 if _kernels else None))

    # upwind stencil increment, 1D and 2D
    f1 = rng.normal(size=2048)
    g1 = rng.normal(size=2048)
    rows.append(("shift_combo 1D (n=2048)",
                 timeit(lambda: _kernels_py.shift_combo(f1, g1, 0.3, 0.1, 0)),
                 timeit(lambda: _kernels.shift_combo(f1, g1, 0.3, 0.1, 0))
                 if _kernels else None))
    f2 = rng.normal(size=(64, 64))
    g2 = rng.normal(size=(64, 64))
    rows.append(("shift_combo 2D (64x64)",
                 timeit(lambda: _kernels_py.shift_combo(f2, g2, 0.3, 0.1, 1)),
                 timeit(lambda: _kernels.shift_combo(f2, g2, 0.3, 0.1, 1))
                 if _kernels else None))

    # coupled-system matvec on a 64x64 grid
    shape = (64, 64)
    coefs = {"v_diag": rng.normal(size=shape), "mu_diag": rng.normal(size=shape),
             "lap_diag": rng.normal(size=shape)}
    for axis in range(2):
        for tag in ("v", "mu", "lap"):
            coefs[f"{tag}_minus{axis}"] = rng.normal(size=shape)
            coefs[f"{tag}_plus{axis}"] = rng.normal(size=shape)
    xc = rng.normal(size=2 * 64 * 64)
    rows.append(("coupled_matvec 2D (64x64)",
                 timeit(lambda: _kernels_py.coupled_matvec(coefs, xc, shape)),
                 timeit(lambda: _kernels.coupled_matvec(coefs, xc, shape))
                 if _kernels else None))
    return rows


STEP_SNIPPET = r"""
import time
from dataclasses import replace
import gnsch
from gnsch import cli_io, driver
cfg = cli_io.parse_config(cli_io.bundled_config_path("testcase1"))
cfg = cfg.with_overrides(time=replace(cfg.time, t_final=2e-3))
t0 = time.perf_counter()
res = driver.run(cfg, quiet=True)
dt = (time.perf_counter() - t0) / len(res.diagnostics)
print(f"{gnsch.BACKEND}:{dt*1e3:.3f}")
"""


def bench_full_step():
    out = {}
    for backend in ("python", "compiled"):
        env = dict(os.environ, GNSCH_BACKEND=backend)
        try:
            proc = subprocess.run([sys.executable, "-c", STEP_SNIPPET], env=env,
                                  capture_output=True, text=True, check=True)
            name, ms = proc.stdout.strip().split(":")
            out[name] = float(ms)
        except subprocess.CalledProcessError as exc:
            print(f"  ({backend} run failed: {exc.stderr.strip().splitlines()[-1]})")
    return out


def main():
    print(f"{'kernel':<28} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, t_py, t_c in bench_kernels():
        if t_c is None:
            print(f"{name:<28} {t_py*1e6:>10.1f}us {'n/a':>12} {'':>9}")
        else:
            print(f"{name:<28} {t_py*1e6:>10.1f}us {t_c*1e6:>10.1f}us {t_py/t_c:>8.1f}x")
    print()
    print("full 1D time step (128 cells, 200 steps, ms/step):")
    results = bench_full_step()
    for name, ms in results.items():
        print(f"  {name:<10} {ms:.3f} ms")
    if {"python", "compiled"} <= results.keys():
        print(f"  step speedup: {results['python'] / results['compiled']:.2f}x")


if __name__ == "__main__":
    main()
