"""Benchmark: compiled kernels against the numpy fallback.

Times the perturbation kernels on batch sizes covering the two regimes
that matter in practice (many small nodewise batches during graph solves,
large sweeps during regularity measurement), plus an end-to-end orbit
workload through DiffeoSequence.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from phlab.kernels import _numpy as numpy_backend

try:
    from phlab.kernels import _ckern as cython_backend
except ImportError:
    cython_backend = None

COEFFS = np.array([4e-4, 1e-3, 6e-4, 8e-4, 5e-4])
EXPS = np.array([[1, 1, 0], [0, 1, 1], [1, 1, 0], [1, 0, 1], [0, 2, 0]])
COMPS = np.array([0, 1, 1, 2, 1])


def time_call(fn, *args, repeat=5, min_batches=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(min_batches):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / min_batches)
    return best


def orbit_workload(backend, pts, steps=60):
    lmat = np.diag([0.25, 1.0, 4.0])
    cur = pts
    for _ in range(steps):
        cur = cur @ lmat.T + backend.pert_eval(cur, COEFFS, EXPS, COMPS)
    return cur


def main():
    rng = np.random.default_rng(0)
    backends = [("numpy", numpy_backend)]
    if cython_backend is not None:
        backends.append(("cython", cython_backend))
    print(f"{'workload':<28}" + "".join(f"{name:>12}" for name, _ in backends)
          + f"{'speedup':>10}")
    rows = [
        ("pert_eval n=64", lambda b: b.pert_eval(
            rng.standard_normal((64, 3)) * 0.5, COEFFS, EXPS, COMPS), 200),
        ("pert_eval n=4096", lambda b: b.pert_eval(
            rng.standard_normal((4096, 3)) * 0.5, COEFFS, EXPS, COMPS), 20),
        ("pert_jac n=64", lambda b: b.pert_jac(
            rng.standard_normal((64, 3)) * 0.5, COEFFS, EXPS, COMPS), 200),
        ("pert_jac n=4096", lambda b: b.pert_jac(
            rng.standard_normal((4096, 3)) * 0.5, COEFFS, EXPS, COMPS), 20),
        ("orbit 60 steps n=256", lambda b: orbit_workload(
            b, rng.standard_normal((256, 3)) * 0.3), 5),
    ]
    for label, fn, batches in rows:
        times = [time_call(fn, mod, min_batches=batches)
                 for _, mod in backends]
        speedup = times[0] / times[-1] if len(times) > 1 else 1.0
        print(f"{label:<28}"
              + "".join(f"{t * 1e6:>10.1f}us" for t in times)
              + f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
