"""Shared numerical kernels: PCA, k-means, hyperplanes, distance utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass
class PCAModel:
    """Principal components of mean-centered data.

    ``components`` rows are orthonormal directions sorted by explained
    variance; ``variances`` follow the sample-covariance convention
    (divide by n-1).
    """

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    n_iter: int
    inertia_trace: np.ndarray


@dataclass
class Hyperplane:
    """Affine hyperplane {x : x.w + b = 0} with unit-norm w."""

    w: np.ndarray
    b: float


def pca_fit(X, k: int) -> PCAModel:
    """Top-k principal directions of mean-centered X.

    Sign convention: each component's largest-magnitude coordinate is
    positive, so outputs are deterministic across LAPACK builds.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    k_max = min(n - 1, d)
    if not 1 <= k <= k_max:
        raise ValueError(f"k must be in [1, {k_max}] for shape {X.shape}, got {k}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:k].copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    variances = (s[:k] ** 2) / (n - 1)
    return PCAModel(mean=mean, components=components, variances=variances)


def pca_transform(model: PCAModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"expected shape (*, {model.mean.shape[0]}), got {X.shape}")
    return (X - model.mean) @ model.components.T


def kmeans(X, k: int, rng: np.random.Generator, max_iter: int = 300) -> KMeansResult:
    """Plain Lloyd k-means seeded with k distinct data points drawn from rng.

    Clusters are guaranteed non-empty (see the backend kernel's repair rule);
    assignments are a fixpoint unless max_iter was hit first.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    init_idx = rng.choice(n, size=k, replace=False)
    centroids, assign, inertia, it, trace = backend.kernels.kmeans_lloyd(
        X, X[init_idx], max_iter)
    return KMeansResult(centroids=centroids, assignments=assign,
                        inertia=inertia, n_iter=it, inertia_trace=trace)


def hyperplane_through_points(P) -> Hyperplane:
    """Hyperplane through d points in d dimensions.

    Solves [P | 1] [w; b] = 0 for the null-space vector via SVD and rescales
    so |w| = 1.  Affinely degenerate point sets yield one (deterministic)
    unit null-space vector rather than an error.
    """
    P = np.asarray(P, dtype=np.float64)
    d = P.shape[1]
    if P.shape[0] != d:
        raise ValueError(f"need exactly {d} points in {d}-d, got {P.shape[0]}")
    A = np.hstack([P, np.ones((d, 1))])
    _, _, vt = np.linalg.svd(A)
    v = vt[-1]
    # w = 0 would force b = 0, impossible for a unit null vector
    nw = np.linalg.norm(v[:d])
    return Hyperplane(w=v[:d] / nw, b=float(v[d] / nw))


def point_manifold_distance(x, h: Hyperplane) -> float:
    """|x.w + b| / |w|; the absolute value keeps the distance non-negative."""
    return float(abs(np.asarray(x, dtype=np.float64) @ h.w + h.b)
                 / np.linalg.norm(h.w))


def mean_sq_distance_root(x, X) -> float:
    """Square root of the mean squared distance from x to every row of X."""
    X = np.asarray(X, dtype=np.float64)
    diff = X - np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.einsum("ij,ij->i", diff, diff).mean()))
