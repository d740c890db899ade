"""Linear models fit on the selected samples: OLS, ridge, LASSO, linear SVR.

Objective conventions (the absolute RMSE level depends on these, so they are
pinned here once):

* ridge / OLS:  sum_i w_i (y_i - x_i.w - b)^2 + lambda * ||w||^2  -- plain
  sum of squared errors, not the mean, and the bias is never regularized;
* LASSO:        sum_i (y_i - x_i.w - b)^2 + lambda * ||w||_1;
* linear SVR:   0.5 * ||w||^2 + C * sum_i max(0, |y_i - x_i.w - b| - eps)
  with eps = epsilon_factor * std(y) over the training targets (population
  std).

All fits are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import backend

OLS = "OLS"
RIDGE = "Ridge"
LASSO = "LASSO"
LINEAR_SVR = "LinearSVR"
MODEL_KINDS = (RIDGE, LASSO, LINEAR_SVR, OLS)


@dataclass
class RegConfig:
    kind: str
    lambda_: float = 0.5
    C: float = 1.0
    epsilon_factor: float = 0.1
    sample_weights: np.ndarray | None = None


@dataclass
class LinearModel:
    w: np.ndarray
    b: float
    config: RegConfig
    diagnostics: dict = field(default_factory=dict)


def predict(model: LinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.w.shape[0]:
        raise ValueError(f"model has {model.w.shape[0]} features, X has {X.shape[1]}")
    return X @ model.w + model.b


def fit(config: RegConfig, X, y) -> LinearModel:
    """Dispatch on config.kind.  Sample weights are honored by ridge/OLS only."""
    if config.kind == RIDGE:
        return fit_ridge(X, y, config.lambda_, config.sample_weights)
    if config.kind == OLS:
        return fit_ols(X, y, config.sample_weights)
    if config.kind == LASSO:
        return fit_lasso(X, y, config.lambda_)
    if config.kind == LINEAR_SVR:
        return fit_linear_svr(X, y, config.C, config.epsilon_factor)
    raise ValueError(f"unknown model kind {config.kind!r}")


def fit_ridge(X, y, lambda_: float = 0.5, weights=None) -> LinearModel:
    """Weighted ridge by the augmented normal equations, bias unpenalized.

    lambda_ = 0 on a rank-deficient design falls back to the minimum-norm
    least-squares solution and flags a diagnostic.
    """
    X, y = _check_xy(X, y)
    if lambda_ < 0:
        raise ValueError(f"lambda must be >= 0, got {lambda_}")
    m, d = X.shape
    omega = _check_weights(weights, m)
    A = np.hstack([X, np.ones((m, 1))])
    diagnostics: dict = {}
    if lambda_ == 0.0:
        sqw = np.sqrt(omega)
        theta, _, rank, _ = np.linalg.lstsq(A * sqw[:, None], y * sqw, rcond=None)
        if rank < d + 1:
            diagnostics["pinv_fallback"] = True
    else:
        G = A.T @ (omega[:, None] * A)
        G[np.arange(d), np.arange(d)] += lambda_
        theta = np.linalg.solve(G, A.T @ (omega * y))
    cfg = RegConfig(kind=RIDGE, lambda_=lambda_,
                    sample_weights=None if weights is None else omega)
    return LinearModel(w=theta[:d], b=float(theta[d]), config=cfg,
                       diagnostics=diagnostics)


def fit_ols(X, y, weights=None) -> LinearModel:
    model = fit_ridge(X, y, 0.0, weights)
    model.config = replace(model.config, kind=OLS)
    return model


def fit_lasso(X, y, lambda_: float = 0.5, max_sweeps: int = 10000,
              tol: float = 1e-8) -> LinearModel:
    """Cyclic coordinate descent with soft thresholding.

    The bias is profiled out exactly by centering (it is unregularized), so
    the descent runs on centered data and b = mean(y) - mean(X).w at the end.
    """
    X, y = _check_xy(X, y)
    if lambda_ < 0:
        raise ValueError(f"lambda must be >= 0, got {lambda_}")
    xm = X.mean(axis=0)
    ym = float(y.mean())
    w, sweeps, converged = backend.kernels.lasso_cd(
        X - xm, y - ym, lambda_, max_sweeps, tol)
    diagnostics = {"sweeps": int(sweeps)}
    if not converged:
        diagnostics["not_converged"] = True
    cfg = RegConfig(kind=LASSO, lambda_=lambda_)
    return LinearModel(w=w, b=ym - float(xm @ w), config=cfg,
                       diagnostics=diagnostics)


def fit_linear_svr(X, y, C: float = 1.0, epsilon_factor: float = 0.1,
                   tol: float | None = None,
                   max_iter: int = 200000) -> LinearModel:
    """Linear epsilon-insensitive SVR solved exactly on the dual.

    An SMO-style maximal-violating-pair loop handles the equality constraint
    from the bias; the bias itself comes from the exact 1-D minimizer of the
    residual loss, tie-broken toward the median residual.
    """
    X, y = _check_xy(X, y)
    if C <= 0:
        raise ValueError(f"C must be > 0, got {C}")
    if epsilon_factor < 0:
        raise ValueError(f"epsilon_factor must be >= 0, got {epsilon_factor}")
    eps = float(epsilon_factor * y.std())
    scale = max(1.0, float(np.abs(y).max()))
    if tol is None:
        tol = 1e-9 * scale
    K = X @ X.T
    beta, n_iter, gap = backend.kernels.svr_smo(K, y, C, eps, tol, max_iter)
    w = X.T @ beta
    b = _svr_bias(y - X @ w, eps)
    diagnostics = {"smo_iters": int(n_iter)}
    # the loop drives the violation to ~machine precision and may stall one
    # rounding step above tol; only gaps that could move the fit get flagged
    if gap > 1e-6 * scale:
        diagnostics["not_converged"] = True
        diagnostics["kkt_gap"] = float(gap)
    cfg = RegConfig(kind=LINEAR_SVR, C=C, epsilon_factor=epsilon_factor)
    return LinearModel(w=w, b=b, config=cfg, diagnostics=diagnostics)


def svr_objective(model: LinearModel, X, y) -> float:
    """Primal objective of the linear-SVR fit (used by tests and diagnostics)."""
    X, y = _check_xy(X, y)
    eps = float(model.config.epsilon_factor * y.std())
    resid = np.abs(y - X @ model.w - model.b)
    hinge = np.maximum(resid - eps, 0.0).sum()
    return float(0.5 * model.w @ model.w + model.config.C * hinge)


def _svr_bias(residuals, eps: float) -> float:
    """Exact minimizer of sum max(0, |r - b| - eps) over b.

    The loss is convex piecewise linear with breakpoints r +- eps; the
    minimizing set is an interval between breakpoints, and the returned b is
    the point of that interval closest to median(r).
    """
    r = np.asarray(residuals, dtype=np.float64)
    bps = np.unique(np.concatenate([r - eps, r + eps]))
    losses = np.maximum(np.abs(r[None, :] - bps[:, None]) - eps, 0.0).sum(axis=1)
    best = losses.min()
    atol = 1e-9 * (1.0 + best)
    flat = np.flatnonzero(losses <= best + atol)
    lo, hi = bps[flat[0]], bps[flat[-1]]
    return float(min(max(float(np.median(r)), lo), hi))


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y shape {y.shape} does not match X rows {X.shape[0]}")
    if X.shape[0] < 1:
        raise ValueError("need at least one training sample")
    return X, y


def _check_weights(weights, m):
    if weights is None:
        return np.ones(m)
    omega = np.asarray(weights, dtype=np.float64)
    if omega.shape != (m,):
        raise ValueError(f"weights shape {omega.shape} != ({m},)")
    if not (omega > 0).all():
        raise ValueError("sample weights must be positive")
    return omega
