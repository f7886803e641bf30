"""Compare the numba and pure-numpy kernels, and a full solve under each backend.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 2048] [--m 129]

Kernel timings call both kernel tables directly in one process.  The full
solve is timed in a subprocess per backend, since the backend is fixed at
import time by ``L1GALERKIN_BACKEND``.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from l1galerkin.kernels import NUMBA_KERNELS, NUMPY_KERNELS

SOLVE_SNIPPET = """
import json, time
from l1galerkin import _backend
from l1galerkin.fem1d import SpatialMesh
from l1galerkin.fractional_time import TimeGrid
from l1galerkin.problems import make_zfk
from l1galerkin.stepper import solve
spec, mesh = make_zfk(0.5), SpatialMesh({m})
solve(spec, mesh, TimeGrid(1.0, 8))  # compile / warm caches
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    tr = solve(spec, mesh, TimeGrid(1.0, {n}))
    best = min(best, time.perf_counter() - t0)
print(json.dumps({{"backend": _backend.BACKEND, "seconds": best, "checksum": float(tr.final.coeffs.sum())}}))
"""


def kernel_cases(n, m, rng):
    d = 4.0 + rng.random(m)
    lo, up = -rng.random(m), -rng.random(m)
    rhs = rng.random(m)
    coeffs = rng.normal(size=n)
    rows = rng.normal(size=(n, m))
    return {
        "thomas_solve": (lo, d, up, rhs),
        "tridiag_matvec": (lo, d, up, rhs),
        "weighted_row_sum": (coeffs, rows),
    }


def bench_kernels(n, m, repeat):
    cases = kernel_cases(n, m, np.random.default_rng(0))
    print(f"kernels (history length {n}, {m} unknowns), best of {repeat}")
    print(f"  {'kernel':<18}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>10}")
    for name, args in cases.items():
        NUMBA_KERNELS[name](*args)  # compile outside the timing
        ref = NUMPY_KERNELS[name](*args)
        np.testing.assert_allclose(NUMBA_KERNELS[name](*args), ref, rtol=1e-10, atol=1e-12)
        number = 200
        t_np = min(timeit.repeat(lambda: NUMPY_KERNELS[name](*args), number=number, repeat=repeat)) / number
        t_nb = min(timeit.repeat(lambda: NUMBA_KERNELS[name](*args), number=number, repeat=repeat)) / number
        print(f"  {name:<18}{1e6 * t_np:>12.2f}{1e6 * t_nb:>12.2f}{t_np / t_nb:>10.2f}")


def bench_solve(n, m, repeat):
    print(f"full ZFK solve (N = {n}, M = {m}), best of {repeat}")
    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, L1GALERKIN_BACKEND=backend)
        code = SOLVE_SNIPPET.format(n=n, m=m, repeat=repeat)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        results[backend] = json.loads(out.stdout)
        print(f"  {backend:<8}{results[backend]['seconds']:>10.3f} s")
    a, b = results["numpy"], results["numba"]
    print(f"  speedup {a['seconds'] / b['seconds']:.2f}x, checksum difference {abs(a['checksum'] - b['checksum']):.1e}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--n", type=int, default=2048, help="time steps")
    p.add_argument("--m", type=int, default=129, help="mesh nodes")
    args = p.parse_args()
    bench_kernels(args.n, args.m - 2, args.repeat)
    bench_solve(args.n, args.m, max(1, args.repeat // 2))


if __name__ == "__main__":
    main()
