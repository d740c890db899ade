"""Unsupervised pool-based sample selection strategies.

Implements random sampling (RS), greedy input-space sampling (GSx), the
representativeness-diversity baseline (RD), importance-weighted P-ALICE, and
the iterative informativeness-representativeness-diversity selector (IRD)
with its informativeness-diversity ablation (ID).

All selectors return pool-relative indices, break every tie toward the
lowest index, and are deterministic given (pool, M, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .numerics import (hyperplane_through_points, kmeans,
                       mean_sq_distance_root, pca_fit, pca_transform,
                       point_manifold_distance)

RS = "RS"
PALICE = "P-ALICE"
GSX = "GSx"
RD = "RD"
IRD = "IRD"
ID = "ID"
METHODS = (RS, PALICE, GSX, RD, IRD, ID)

# lambda grid for P-ALICE: coarse on [0, 1], fine on [0.41, 0.59]
PALICE_LAMBDA_GRID = tuple(
    [0.0, 0.1, 0.2, 0.3, 0.4]
    + [round(0.41 + 0.01 * i, 2) for i in range(19)]
    + [0.6, 0.7, 0.8, 0.9, 1.0]
)


@dataclass
class Selection:
    """Ordered selected pool indices plus method-specific diagnostics.

    ``weights`` are present only for P-ALICE (importance weights 1/b)."""

    indices: list[int]
    weights: list[float] | None = None
    diagnostics: dict = field(default_factory=dict)


class SelectionHistory:
    """Rows of index-sets used for convergence/cycle detection."""

    def __init__(self):
        self.rows: list[tuple[int, ...]] = []
        self._seen: set[tuple[int, ...]] = set()

    @staticmethod
    def _key(indices) -> tuple[int, ...]:
        return tuple(sorted(int(i) for i in indices))

    def add(self, indices) -> None:
        key = self._key(indices)
        self.rows.append(key)
        self._seen.add(key)

    def seen(self, indices) -> bool:
        return self._key(indices) in self._seen


@dataclass
class IRDConfig:
    c_max: int = 5
    init: str = RD  # "RD" or "GSx"
    rng_seed: int | None = None
    record_trace: bool = False

    def __post_init__(self):
        if self.c_max < 0:
            raise ValueError(f"c_max must be >= 0, got {self.c_max}")
        if self.init not in (RD, GSX):
            raise ValueError(f"init must be 'RD' or 'GSx', got {self.init!r}")


def _as_pool(pool) -> np.ndarray:
    X = np.ascontiguousarray(pool, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"pool must be a non-empty 2-D matrix, got {X.shape}")
    return X


def _check_m(M: int, n: int, low: int = 1) -> None:
    if not low <= M <= n:
        raise ValueError(f"M must be in [{low}, {n}], got {M}")


def select_random(pool, M: int, rng: np.random.Generator) -> Selection:
    """Uniform sample of M pool indices without replacement."""
    X = _as_pool(pool)
    _check_m(M, X.shape[0])
    idx = rng.choice(X.shape[0], size=M, replace=False)
    return Selection(indices=[int(i) for i in idx])


def select_gsx(pool, M: int) -> Selection:
    """Greedy input-space sampling; fully deterministic, no generator."""
    X = _as_pool(pool)
    _check_m(M, X.shape[0])
    idx = backend.kernels.gsx_greedy(X, M)
    return Selection(indices=[int(i) for i in idx])


def select_rd(pool, M: int, rng: np.random.Generator) -> Selection:
    """k-means with k=M, then each cluster's centroid-closest member."""
    X = _as_pool(pool)
    _check_m(M, X.shape[0])
    indices, n_iter = _rd_indices(X, M, rng)
    return Selection(indices=indices, diagnostics={"kmeans_iters": n_iter})


def _rd_indices(X, M, rng):
    km = kmeans(X, M, rng)
    indices = []
    for c in range(M):
        members = np.flatnonzero(km.assignments == c)
        diff = X[members] - km.centroids[c]
        nearest = members[int(np.argmin(np.einsum("ij,ij->i", diff, diff)))]
        indices.append(int(nearest))
    return indices, km.n_iter


# --- P-ALICE -----------------------------------------------------------------

def palice_bias(x, U_inv, lam: float) -> float:
    """Resampling bias b^lambda(x) = (x' U^-1 x)^lambda.

    Tiny negative quadratic forms from rounding are clipped to zero."""
    q = float(np.asarray(x, dtype=np.float64) @ U_inv @ np.asarray(x, dtype=np.float64))
    return max(q, 0.0) ** lam


def _weighted_draw(weights, M, rng):
    """M sequential draws without replacement, probability proportional to
    the remaining weights (renormalized after each draw)."""
    remaining = np.arange(len(weights))
    w = np.asarray(weights, dtype=np.float64).copy()
    out = []
    for _ in range(M):
        total = w.sum()
        if total > 0.0:
            p = w / total
        else:
            p = np.full(len(remaining), 1.0 / len(remaining))
        pick = int(rng.choice(len(remaining), p=p))
        out.append(int(remaining[pick]))
        remaining = np.delete(remaining, pick)
        w = np.delete(w, pick)
    return out


def _palice_q(X_sel, b_sel, U):
    """Estimated mean squared loss Q = trace(U L L') for one candidate draw.

    L = (X W X')^-1 X W with X the d x M matrix of selected samples and
    W = diag(1/b).  Structurally singular systems (M < d) and numerically
    singular ones use the pseudo-inverse; the flag is reported upstream.
    """
    M, d = X_sel.shape
    b_sel = np.maximum(b_sel, 1e-12)
    Xl = X_sel.T  # d x M
    XW = Xl / b_sel[None, :]
    A = XW @ X_sel
    used_pinv = False
    if M < d:
        L = np.linalg.pinv(A) @ XW
        used_pinv = True
    else:
        try:
            L = np.linalg.solve(A, XW)
            if not np.isfinite(L).all():
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            L = np.linalg.pinv(A) @ XW
            used_pinv = True
    q = float(np.sum(U * (L @ L.T)))
    return q, used_pinv


def select_palice(pool, M: int, rng: np.random.Generator,
                  lambda_grid=PALICE_LAMBDA_GRID) -> Selection:
    """P-ALICE: per lambda, draw M samples with probability ~ b^lambda and
    keep the draw minimizing the estimated loss Q(lambda).

    Returned weights are 1/b^{lambda*}(x_m), the diagonal of the
    importance-weighting matrix.
    """
    X = _as_pool(pool)
    n, d = X.shape
    _check_m(M, n)
    U = X.T @ X / n
    diagnostics: dict = {}
    try:
        U_inv = np.linalg.inv(U)
        if not np.isfinite(U_inv).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        U_inv = np.linalg.pinv(U)
        diagnostics["u_pinv"] = True
    quad = np.maximum(np.einsum("ij,jk,ik->i", X, U_inv, X), 0.0)

    best = None
    q_grid = []
    any_pinv = False
    for lam in lambda_grid:
        b_lam = np.ones(n) if lam == 0.0 else quad ** lam
        draw = _weighted_draw(b_lam, M, rng)
        q, used_pinv = _palice_q(X[draw], b_lam[draw], U)
        any_pinv = any_pinv or used_pinv
        q_grid.append((float(lam), q))
        if best is None or q < best[0]:
            best = (q, float(lam), draw, b_lam[draw])
    q_star, lam_star, indices, b_star = best
    diagnostics.update({"lambda_star": lam_star, "q_star": q_star,
                        "q_grid": q_grid})
    if any_pinv:
        diagnostics["q_pinv"] = True
    weights = [float(v) for v in 1.0 / np.maximum(b_star, 1e-12)]
    return Selection(indices=indices, weights=weights, diagnostics=diagnostics)


# --- IRD / ID ----------------------------------------------------------------

def ird_objective(candidate, pool, h) -> float:
    """Ratio score: root-mean-square distance to the pool over distance to
    the manifold; +inf for candidates on the manifold (never selected)."""
    dist = point_manifold_distance(candidate, h)
    if dist == 0.0:
        return float("inf")
    return mean_sq_distance_root(candidate, pool) / dist


def rd_score(candidate_idx: int, cluster, selected, pool) -> float:
    """Representativeness x diversity for one candidate within its cluster.

    R = |S| / sum of squared distances to the cluster (singleton => +inf);
    D = min distance to the other selected samples; D = 0 kills the score.
    """
    X = _as_pool(pool)
    members = np.asarray(sorted(int(i) for i in cluster), dtype=np.int64)
    if int(candidate_idx) not in set(members.tolist()):
        raise ValueError("candidate must belong to the cluster")
    sel = np.asarray(list(selected), dtype=np.int64)
    if sel.size == 0:
        raise ValueError("selected must be non-empty")
    x = X[int(candidate_idx)]
    diversity = float(np.sqrt(
        np.einsum("ij,ij->i", X[sel] - x, X[sel] - x).min()))
    if diversity == 0.0:
        return 0.0
    ssd = float(np.einsum("ij,ij->i", X[members] - x, X[members] - x).sum())
    if ssd == 0.0:
        return float("inf")
    return len(members) / ssd * diversity


def select_ird(pool, M: int, config: IRDConfig | None = None,
               rng: np.random.Generator | None = None) -> Selection:
    """IRD with case dispatch on M versus d+1."""
    return _ird_dispatch(pool, M, config, rng, use_repr=True, method=IRD)


def select_id(pool, M: int, config: IRDConfig | None = None,
              rng: np.random.Generator | None = None) -> Selection:
    """Ablation: IRD's control flow, scoring by informativeness/diversity
    only (candidates farthest from the manifold; D alone in the clusters)."""
    return _ird_dispatch(pool, M, config, rng, use_repr=False, method=ID)


def ird_case_equal(pool, config: IRDConfig | None = None,
                   rng: np.random.Generator | None = None) -> Selection:
    """The M = d+1 case run directly (M is implied by the pool width)."""
    X = _as_pool(pool)
    config, rng = _ird_defaults(config, rng)
    trace = [] if config.record_trace else None
    indices, diag = _algorithm1(X, config, rng, True, trace)
    return _finish(indices, diag, "equal", config, trace)


def ird_case_less(pool, M: int, config: IRDConfig | None = None,
                  rng: np.random.Generator | None = None) -> Selection:
    """The M < d+1 case: project to the M-1 leading principal scores of the
    pool, then run the equal case in score space."""
    X = _as_pool(pool)
    config, rng = _ird_defaults(config, rng)
    return _case_less(X, M, config, rng, True)


def ird_case_greater(pool, M: int, config: IRDConfig | None = None,
                     rng: np.random.Generator | None = None) -> Selection:
    """The M > d+1 case: equal-case core, then cluster-wise extras."""
    X = _as_pool(pool)
    config, rng = _ird_defaults(config, rng)
    return _case_greater(X, M, config, rng, True)


def _ird_defaults(config, rng):
    if config is None:
        config = IRDConfig()
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    return config, rng


def _effective_space(X):
    """Project away exact linear dependencies among the pool columns.

    One-hot groups make the centered pool rank-deficient (the expanded
    columns of one categorical sum to a constant): the hyperplane through
    any d samples then degenerates to the global constraint direction and
    every candidate sits at distance ~0.  Dropping the zero-variance
    principal directions is lossless for all pairwise distances and makes
    the manifolds well posed.  Returns (matrix, effective dimension).
    """
    d = X.shape[1]
    s = np.linalg.svd(X - X.mean(axis=0), compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return X, 0  # all pool rows identical
    d_eff = int(np.sum(s > s[0] * 1e-9))
    if d_eff >= d:
        return X, d
    model = pca_fit(X, d_eff)
    return pca_transform(model, X), d_eff


def _ird_dispatch(pool, M, config, rng, use_repr, method):
    X = _as_pool(pool)
    n, d = X.shape
    if not 2 <= M <= n:
        raise ValueError(f"M must be in [2, {n}], got {M}")
    config, rng = _ird_defaults(config, rng)
    Xw, d_eff = _effective_space(X)
    if d_eff == 0:
        return Selection(indices=list(range(M)),
                         diagnostics={"case": "degenerate", "init": config.init,
                                      "effective_dim": 0})
    if M == d_eff + 1:
        trace = [] if config.record_trace else None
        indices, diag = _algorithm1(Xw, config, rng, use_repr, trace)
        sel = _finish(indices, diag, "equal", config, trace)
    elif M < d_eff + 1:
        sel = _case_less(Xw, M, config, rng, use_repr)
    else:
        sel = _case_greater(Xw, M, config, rng, use_repr)
    if d_eff != d:
        sel.diagnostics["effective_dim"] = d_eff
    return sel


def _finish(indices, diag, case, config, trace):
    diag = dict(diag)
    diag["case"] = case
    diag["init"] = config.init
    if trace is not None:
        diag["trace"] = trace
    return Selection(indices=indices, diagnostics=diag)


def _initial_selection(X, M, init, rng):
    if init == GSX:
        return [int(i) for i in backend.kernels.gsx_greedy(X, M)]
    indices, _ = _rd_indices(X, M, rng)
    return indices


def _algorithm1(X, config, rng, use_repr, trace):
    """EM-style sweeps for M = d+1: fix d samples, rebuild the hyperplane,
    replace the remaining slot with the best non-selected candidate."""
    n, d = X.shape
    M = d + 1
    if n <= M:
        # nothing to optimize; every pool sample is selected
        return list(range(n)), {"degenerate_pool": True, "sweeps": 0,
                                "cycle_detected": False}
    sel = _initial_selection(X, M, config.init, rng)
    if trace is not None:
        trace.append({"phase": "init", "indices": list(sel)})
    history = SelectionHistory()
    history.add(sel)
    repr_all = backend.kernels.msd_to_all(X) if use_repr else np.zeros(n)
    selected = np.zeros(n, dtype=bool)
    selected[sel] = True
    sweeps = 0
    cycle = False
    for _ in range(config.c_max):
        for t in range(M):
            # slot t is being re-optimized: candidates are all samples not
            # pinned on the manifold, including the current occupant, so a
            # converged sweep leaves the selection unchanged
            fixed = [sel[s] for s in range(M) if s != t]
            h = hyperplane_through_points(X[fixed])
            selected[sel[t]] = False
            cand = np.flatnonzero(~selected)
            choice, _ = backend.kernels.manifold_argmin(
                X, cand, h.w, h.b, repr_all, use_repr)
            if trace is not None:
                trace.append({"phase": "case_equal", "slot": t,
                              "before": list(sel), "fixed": list(fixed),
                              "chosen": choice})
            selected[choice] = True
            sel[t] = choice
        sweeps += 1
        if history.seen(sel):
            cycle = True
            break
        history.add(sel)
    return sel, {"sweeps": sweeps, "cycle_detected": cycle,
                 "history_rows": len(history.rows)}


def _case_less(X, M, config, rng, use_repr):
    n, d = X.shape
    if not 2 <= M < d + 1:
        raise ValueError(f"case M < d+1 needs M in [2, {d}], got {M}")
    if n <= M:
        raise ValueError(f"pool size {n} must exceed M={M}")
    model = pca_fit(X, M - 1)
    scores = pca_transform(model, X)
    trace = [] if config.record_trace else None
    indices, diag = _algorithm1(scores, config, rng, use_repr, trace)
    diag = dict(diag)
    diag["pca_dims"] = M - 1
    return _finish(indices, diag, "less", config, trace)


def _case_greater(X, M, config, rng, use_repr):
    n, d = X.shape
    if not M > d + 1:
        raise ValueError(f"case M > d+1 needs M > {d + 1}, got {M}")
    if M > n:
        raise ValueError(f"M={M} exceeds pool size {n}")
    trace = [] if config.record_trace else None
    core, core_diag = _algorithm1(X, config, rng, use_repr, trace)
    selected = np.zeros(n, dtype=bool)
    selected[core] = True
    remaining = np.flatnonzero(~selected)
    k = M - d - 1
    km = kmeans(X[remaining], k, rng)
    clusters = [remaining[km.assignments == c] for c in range(k)]
    sel = list(core)
    for c in range(k):
        diff = X[clusters[c]] - km.centroids[c]
        nearest = clusters[c][int(np.argmin(np.einsum("ij,ij->i", diff, diff)))]
        sel.append(int(nearest))
    if trace is not None:
        trace.append({"phase": "init_extras", "indices": list(sel)})
    history = SelectionHistory()
    history.add(sel)
    sweeps = 0
    cycle = False
    for _ in range(config.c_max):
        for j in range(k):
            t = d + 1 + j
            others = np.asarray([sel[s] for s in range(M) if s != t],
                                dtype=np.int64)
            choice, _ = backend.kernels.cluster_argmax(
                X, clusters[j], others, use_repr)
            if trace is not None:
                trace.append({"phase": "case_greater", "slot": t,
                              "before": list(sel),
                              "cluster": [int(i) for i in clusters[j]],
                              "chosen": choice})
            sel[t] = choice
        sweeps += 1
        if history.seen(sel):
            cycle = True
            break
        history.add(sel)
    diag = {"core_sweeps": core_diag.get("sweeps", 0),
            "core_cycle_detected": core_diag.get("cycle_detected", False),
            "sweeps": sweeps, "cycle_detected": cycle,
            "history_rows": len(history.rows)}
    return _finish(sel, diag, "greater", config, trace)


def select(method: str, pool, M: int, rng: np.random.Generator,
           ird_config: IRDConfig | None = None,
           palice_lambda_grid=PALICE_LAMBDA_GRID) -> Selection:
    """Uniform entry point used by the experiment harness."""
    if method == RS:
        return select_random(pool, M, rng)
    if method == GSX:
        return select_gsx(pool, M)
    if method == RD:
        return select_rd(pool, M, rng)
    if method == PALICE:
        return select_palice(pool, M, rng, palice_lambda_grid)
    if method == IRD:
        return select_ird(pool, M, ird_config, rng)
    if method == ID:
        return select_id(pool, M, ird_config, rng)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
