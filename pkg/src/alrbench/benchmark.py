"""Timing comparison between the compiled kernels and the pure fallback."""

from __future__ import annotations

import time

import numpy as np

from . import _kernels_py
from .numerics import hyperplane_through_points

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None


def _workloads():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(1500, 10))
    Xs = rng.normal(size=(60, 8))
    ys = rng.normal(size=60)
    Xl = rng.normal(size=(100, 50))
    yl = Xl @ rng.normal(size=50) + 0.1 * rng.normal(size=100)
    yl -= yl.mean()
    Xl -= Xl.mean(axis=0)
    K = Xs @ Xs.T
    h = hyperplane_through_points(X[:10])
    repr_vals = _kernels_py.msd_to_all(X)
    cand = np.arange(11, 1500, dtype=np.int64)
    members = np.arange(200, 400, dtype=np.int64)
    others = np.arange(0, 11, dtype=np.int64)
    cents = X[rng.choice(1500, size=12, replace=False)]
    return [
        ("msd_to_all(1500x10)", lambda k: k.msd_to_all(X)),
        ("gsx_greedy(1500x10, M=15)", lambda k: k.gsx_greedy(X, 15)),
        ("kmeans_lloyd(1500x10, k=12)",
         lambda k: k.kmeans_lloyd(X, cents, 300)),
        ("lasso_cd(100x50)", lambda k: k.lasso_cd(Xl, yl, 0.5, 10000, 1e-8)),
        ("svr_smo(m=60)", lambda k: k.svr_smo(K, ys, 1.0, 0.1, 1e-9, 200000)),
        ("manifold_argmin(1489 cands)",
         lambda k: k.manifold_argmin(X, cand, h.w, h.b, repr_vals, True)),
        ("cluster_argmax(200 members)",
         lambda k: k.cluster_argmax(X, members, others, True)),
    ]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(repeats: int = 5, echo=print):
    if _kernels is None:
        echo("compiled kernels not available; showing pure-Python times only")
    echo(f"{'kernel':34s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, call in _workloads():
        t_py = _time(lambda: call(_kernels_py), repeats)
        if _kernels is not None:
            t_cy = _time(lambda: call(_kernels), repeats)
            echo(f"{name:34s} {t_py * 1e3:9.3f}ms {t_cy * 1e3:9.3f}ms "
                 f"{t_py / t_cy:7.1f}x")
        else:
            echo(f"{name:34s} {t_py * 1e3:9.3f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    run_benchmark()
