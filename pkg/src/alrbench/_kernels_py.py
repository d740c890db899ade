"""Pure-NumPy implementations of the hot numerical kernels.

This module mirrors the compiled extension ``alrbench._kernels`` function for
function; :mod:`alrbench.backend` picks whichever is importable.  Both
backends use the same tie-breaking rule everywhere: the first (lowest-index)
extremum wins.
"""

import numpy as np
from scipy.spatial.distance import cdist


def msd_to_all(X):
    """Root-mean-square distance from every row of X to all rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sq = cdist(X, X, "sqeuclidean")
    return np.sqrt(sq.mean(axis=1))


def gsx_greedy(X, m):
    """Greedy diversity selection: centroid-closest first, then repeatedly
    the point maximizing its minimum distance to the selected set."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.empty(m, dtype=np.int64)
    centroid = X.mean(axis=0)
    diff = X - centroid
    first = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
    out[0] = first
    diff = X - X[first]
    min_sq = np.einsum("ij,ij->i", diff, diff)
    min_sq[first] = -1.0  # selected points never win the argmax
    for t in range(1, m):
        nxt = int(np.argmax(min_sq))
        out[t] = nxt
        diff = X - X[nxt]
        d = np.einsum("ij,ij->i", diff, diff)
        np.minimum(min_sq, d, out=min_sq)
        min_sq[nxt] = -1.0
    return out


def kmeans_lloyd(X, centroids, max_iter):
    """Lloyd iterations until the assignment fixpoint or ``max_iter``.

    Empty clusters are repaired by reassigning the point farthest from its
    current centroid whose donor cluster keeps at least two members.
    Returns (centroids, assignments, inertia, n_iter, inertia_trace).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64, copy=True)
    n = X.shape[0]
    k = centroids.shape[0]
    assign = np.full(n, -1, dtype=np.int64)
    trace = []
    it = 0
    inertia = 0.0
    for it in range(1, max_iter + 1):
        dist = cdist(X, centroids, "sqeuclidean")
        new_assign = np.argmin(dist, axis=1).astype(np.int64)
        counts = np.bincount(new_assign, minlength=k)
        for c in np.flatnonzero(counts == 0):
            own = dist[np.arange(n), new_assign]
            movable = counts[new_assign] >= 2
            own = np.where(movable, own, -1.0)
            far = int(np.argmax(own))
            counts[new_assign[far]] -= 1
            new_assign[far] = c
            counts[c] += 1
        for c in range(k):
            centroids[c] = X[new_assign == c].mean(axis=0)
        diff = X - centroids[new_assign]
        inertia = float(np.einsum("ij,ij->", diff, diff))
        trace.append(inertia)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centroids, assign, inertia, it, np.asarray(trace)


def lasso_cd(X, y, lam, max_sweeps, tol, kkt_tol=5e-7):
    """Cyclic coordinate descent with soft thresholding on centered data.

    Minimizes sum((y - X w)^2) + lam * ||w||_1.  Returns (w, sweeps,
    converged).  Convergence needs max coordinate change < tol within a
    sweep AND the subgradient optimality residual below kkt_tol (the
    coordinate-change test alone does not bound the KKT residual on badly
    scaled columns).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    col_sq = np.einsum("ij,ij->j", X, X)
    w = np.zeros(d)
    r = np.array(y, dtype=np.float64, copy=True)
    thr = 0.5 * lam
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(d):
            cj = col_sq[j]
            if cj <= 0.0:
                continue
            wj = w[j]
            rho = X[:, j] @ r + cj * wj
            if rho > thr:
                nwj = (rho - thr) / cj
            elif rho < -thr:
                nwj = (rho + thr) / cj
            else:
                nwj = 0.0
            if nwj != wj:
                r += X[:, j] * (wj - nwj)
                w[j] = nwj
                delta = abs(nwj - wj)
                if delta > max_delta:
                    max_delta = delta
        if max_delta < tol and _lasso_kkt_violation(X, r, w, lam) <= kkt_tol:
            return w, sweep, True
    return w, max_sweeps, False


def _lasso_kkt_violation(X, r, w, lam):
    g = 2.0 * (X.T @ r)
    viol = np.where(w == 0.0, np.maximum(np.abs(g) - lam, 0.0),
                    np.abs(g - lam * np.sign(w)))
    return float(viol.max()) if len(viol) else 0.0


def _smo_phi(a, gdiff, eps, bi, bj, delta):
    return (-0.5 * a * delta * delta + gdiff * delta
            - eps * (abs(bi + delta) - abs(bi) + abs(bj - delta) - abs(bj)))


def svr_smo(K, y, c_box, eps, tol, max_iter):
    """Maximal-violating-pair coordinate ascent on the linear-SVR dual.

    Maximizes -0.5 b'Kb + y'b - eps*||b||_1 over sum(b)=0, |b_i| <= c_box.
    Each pair step solves its 1-D piecewise-quadratic subproblem exactly.
    Returns (beta, n_iter, kkt_gap).
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    m = K.shape[0]
    beta = np.zeros(m)
    g = np.array(y, dtype=np.float64, copy=True)  # y - K beta
    gap = 0.0
    it = 0
    while it < max_iter:
        it += 1
        up = g - eps * np.where(beta >= 0.0, 1.0, -1.0)
        dn = g - eps * np.where(beta > 0.0, 1.0, -1.0)
        up = np.where(beta < c_box, up, -np.inf)
        dn = np.where(beta > -c_box, dn, np.inf)
        i = int(np.argmax(up))
        j = int(np.argmin(dn))
        gap = up[i] - dn[j]
        if not gap > tol:
            gap = max(gap, 0.0)
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        gdiff = g[i] - g[j]
        bi, bj = beta[i], beta[j]
        lo = max(-c_box - bi, bj - c_box)
        hi = min(c_box - bi, bj + c_box)
        cands = [lo, hi]
        for bp in (-bi, bj):
            if lo < bp < hi:
                cands.append(bp)
        if a > 0.0:
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    d = (gdiff - eps * (si - sj)) / a
                    if lo < d < hi:
                        cands.append(d)
        best_delta = cands[0]
        best_phi = _smo_phi(a, gdiff, eps, bi, bj, cands[0])
        for d in cands[1:]:
            phi = _smo_phi(a, gdiff, eps, bi, bj, d)
            if phi > best_phi:
                best_phi = phi
                best_delta = d
        if best_phi <= 0.0:
            break  # numerical stall; gap still reported
        beta[i] += best_delta
        beta[j] -= best_delta
        g -= best_delta * (K[:, i] - K[:, j])
    return beta, it, gap


def manifold_argmin(X, cand, w, b, repr_vals, use_repr):
    """Pick the candidate minimizing the ratio of representativeness to
    hyperplane distance (or, with use_repr=0, the farthest-from-plane one).

    Returns (pool index, score).  Zero distances score +inf in ratio mode.
    """
    Xc = X[cand]
    proj = np.abs(Xc @ w + b) / np.linalg.norm(w)
    if use_repr:
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(proj > 0.0, repr_vals[cand] / proj, np.inf)
    else:
        scores = -proj
    k = int(np.argmin(scores))
    return int(cand[k]), float(scores[k])


def cluster_argmax(X, members, others, use_repr):
    """Pick the cluster member maximizing R*D (or D alone with use_repr=0).

    R = |S| / sum of squared distances to the cluster; D = min distance to
    the other selected samples.  Conventions: singleton cluster => R = +inf,
    D = 0 kills the score (0 * inf = 0).  Returns (pool index, score).
    """
    Xm = X[members]
    d_sq = cdist(Xm, X[others], "sqeuclidean").min(axis=1)
    diversity = np.sqrt(d_sq)
    if use_repr:
        ssd = cdist(Xm, Xm, "sqeuclidean").sum(axis=1)
        s = float(len(members))
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(ssd > 0.0, s * diversity / ssd,
                              np.where(diversity > 0.0, np.inf, 0.0))
    else:
        scores = diversity
    k = int(np.argmax(scores))
    return int(members[k]), float(scores[k])
