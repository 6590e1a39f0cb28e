"""Benchmark: compiled pivot kernel vs the pure-Python fallback.

Times the kernels head-to-head on identical tableaus (they implement the
same contract, so pivot counts must agree), then times two realistic
workloads end-to-end under each backend:

* a batch of endomorphism-membership LPs (the ellipsoid solver's inner loop),
* a marginal-region feasibility batch (wide LPs with many weight columns).

Run:  python benchmarks/bench_kernels.py
"""

import os
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from evikit._kernels import pivot_py

try:
    from evikit._kernels import _pivot_cy
except ImportError:
    _pivot_cy = None


def random_standard_form(rng, m, n):
    A = rng.normal(size=(m, n))
    x0 = np.abs(rng.normal(size=n))
    b = A @ x0
    flip = np.where(b < 0, -1.0, 1.0)
    A *= flip[:, None]
    b *= flip
    A_ext = np.hstack([A, np.eye(m)])
    c = np.concatenate([np.zeros(n), np.ones(m)])
    basis = np.arange(n, n + m, dtype=np.int64)
    body = np.column_stack([A_ext, b])
    red = c - c[basis] @ A_ext
    top = np.concatenate([red, [-(c[basis] @ b)]])
    tab = np.ascontiguousarray(np.vstack([top, body]))
    allowed = np.ones(n + m, dtype=np.uint8)
    return tab, basis, allowed


def bench_kernel(kernel, name, rng_seed=3, reps=60, m=40, n=120):
    rng = np.random.default_rng(rng_seed)
    total_pivots = 0
    t0 = time.perf_counter()
    for _ in range(reps):
        tab, basis, allowed = random_standard_form(rng, m, n)
        status, it = kernel.lp_pivot_loop(tab, basis, allowed, 1e-10, 500)
        total_pivots += it
    dt = time.perf_counter() - t0
    print(f"  {name:<8} {reps} phase-1 solves ({m}x{n}): {dt:8.3f}s "
          f"({1e6 * dt / max(total_pivots, 1):7.1f} us/pivot, {total_pivots} pivots)")
    return total_pivots, dt


def bench_workload(backend):
    os.environ["EVIKIT_KERNEL"] = backend
    for mod in [m for m in list(sys.modules) if m.startswith("evikit")]:
        del sys.modules[mod]
    from evikit.endomap import AffineEndo, endo_membership
    from evikit.games import bach_or_stravinsky, marginal_feasible
    from evikit.polytope import Polytope

    X = Polytope.box([0.0, 0.0, 0.0], [1.0, 1.5, 2.0])
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    for _ in range(120):
        endo = AffineEndo(linear=rng.normal(scale=0.6, size=(3, 3)),
                          offset=rng.normal(scale=0.4, size=3))
        endo_membership(X, endo)
    t_member = time.perf_counter() - t0

    bos = bach_or_stravinsky()
    t0 = time.perf_counter()
    for p in np.linspace(0.0, 1.0, 9):
        marginal_feasible(bos, (p, min(p + 0.1, 1.0)))
    t_region = time.perf_counter() - t0
    print(f"  {backend:<8} 120 membership LPs: {t_member:6.3f}s | "
          f"9 region probes: {t_region:6.3f}s")
    return t_member, t_region


def main():
    print("pivot kernel micro-benchmark")
    _, t_py = bench_kernel(pivot_py, "python")
    if _pivot_cy is not None:
        piv_c, t_c = bench_kernel(_pivot_cy, "c")
        print(f"  speedup: {t_py / t_c:.1f}x")
    else:
        print("  compiled kernel not built (python setup.py build_ext --inplace)")

    print("end-to-end workloads per backend")
    py = bench_workload("python")
    if _pivot_cy is not None:
        cc = bench_workload("c")
        print(f"  end-to-end speedup: membership {py[0] / cc[0]:.1f}x, "
              f"region {py[1] / cc[1]:.1f}x")
    os.environ.pop("EVIKIT_KERNEL", None)


if __name__ == "__main__":
    main()
