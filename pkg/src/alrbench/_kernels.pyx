# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot numerical kernels.

Semantics match ``alrbench._kernels_py`` exactly, including tie-breaking
(first/lowest index wins every argmin/argmax).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()


def msd_to_all(X):
    """Root-mean-square distance from every row of X to all rows of X."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, sq, diff
    for i in range(n):
        acc = 0.0
        for j in range(n):
            sq = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                sq += diff * diff
            acc += sq
        out[i] = sqrt(acc / n)
    return out_arr


def gsx_greedy(X, Py_ssize_t m):
    """Greedy diversity selection: centroid-closest first, then repeatedly
    the point maximizing its minimum distance to the selected set."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out_arr = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef double[::1] centroid = np.zeros(d)
    cdef double[::1] min_sq = np.empty(n)
    cdef Py_ssize_t i, k, t, best
    cdef double sq, diff, best_val
    for i in range(n):
        for k in range(d):
            centroid[k] += x[i, k]
    for k in range(d):
        centroid[k] /= n
    best = 0
    best_val = INFINITY
    for i in range(n):
        sq = 0.0
        for k in range(d):
            diff = x[i, k] - centroid[k]
            sq += diff * diff
        if sq < best_val:
            best_val = sq
            best = i
    out[0] = best
    for i in range(n):
        sq = 0.0
        for k in range(d):
            diff = x[i, k] - x[best, k]
            sq += diff * diff
        min_sq[i] = sq
    min_sq[best] = -1.0
    for t in range(1, m):
        best = 0
        best_val = -INFINITY
        for i in range(n):
            if min_sq[i] > best_val:
                best_val = min_sq[i]
                best = i
        out[t] = best
        for i in range(n):
            sq = 0.0
            for k in range(d):
                diff = x[i, k] - x[best, k]
                sq += diff * diff
            if sq < min_sq[i]:
                min_sq[i] = sq
        min_sq[best] = -1.0
    return out_arr


def kmeans_lloyd(X, centroids, Py_ssize_t max_iter):
    """Lloyd iterations until the assignment fixpoint or ``max_iter``, with
    empty clusters repaired from the farthest point of a donor cluster that
    keeps at least two members."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] cents = np.array(centroids, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = cents.shape[0]
    assign_arr = np.full(n, -1, dtype=np.int64)
    new_assign_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] assign = assign_arr
    cdef cnp.int64_t[::1] new_assign = new_assign_arr
    cdef double[::1] own = np.empty(n)
    cdef cnp.int64_t[::1] counts = np.zeros(k, dtype=np.int64)
    trace_arr = np.empty(max_iter, dtype=np.float64)
    cdef double[::1] trace = trace_arr
    cdef Py_ssize_t it = 0, i, j, c, best, far
    cdef double sq, diff, best_val, inertia = 0.0
    cdef bint changed
    while it < max_iter:
        it += 1
        for c in range(k):
            counts[c] = 0
        for i in range(n):
            best = 0
            best_val = INFINITY
            for c in range(k):
                sq = 0.0
                for j in range(d):
                    diff = x[i, j] - cents[c, j]
                    sq += diff * diff
                if sq < best_val:
                    best_val = sq
                    best = c
            new_assign[i] = best
            own[i] = best_val
            counts[best] += 1
        for c in range(k):
            if counts[c] == 0:
                far = 0
                best_val = -INFINITY
                for i in range(n):
                    if counts[new_assign[i]] >= 2 and own[i] > best_val:
                        best_val = own[i]
                        far = i
                counts[new_assign[far]] -= 1
                new_assign[far] = c
                counts[c] += 1
                # distance to the (stale) centroid of the new cluster
                sq = 0.0
                for j in range(d):
                    diff = x[far, j] - cents[c, j]
                    sq += diff * diff
                own[far] = sq
        for c in range(k):
            for j in range(d):
                cents[c, j] = 0.0
        for i in range(n):
            c = new_assign[i]
            for j in range(d):
                cents[c, j] += x[i, j]
        for c in range(k):
            for j in range(d):
                cents[c, j] /= counts[c]
        inertia = 0.0
        for i in range(n):
            c = new_assign[i]
            for j in range(d):
                diff = x[i, j] - cents[c, j]
                inertia += diff * diff
        trace[it - 1] = inertia
        changed = False
        for i in range(n):
            if new_assign[i] != assign[i]:
                changed = True
            assign[i] = new_assign[i]
        if not changed:
            break
    return (np.asarray(cents), assign_arr, inertia, it,
            trace_arr[:it].copy())


cdef double _lasso_kkt_violation(double[:, ::1] x, double[::1] r,
                                 double[::1] w, double lam) nogil:
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    cdef double g, viol, worst = 0.0
    for j in range(d):
        g = 0.0
        for i in range(n):
            g += x[i, j] * r[i]
        g *= 2.0
        if w[j] == 0.0:
            viol = fabs(g) - lam
            if viol < 0.0:
                viol = 0.0
        elif w[j] > 0.0:
            viol = fabs(g - lam)
        else:
            viol = fabs(g + lam)
        if viol > worst:
            worst = viol
    return worst


def lasso_cd(X, y, double lam, Py_ssize_t max_sweeps, double tol,
             double kkt_tol=5e-7):
    """Cyclic coordinate descent with soft thresholding on centered data.

    Convergence needs max coordinate change < tol within a sweep AND the
    subgradient optimality residual below kkt_tol.
    """
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    w_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double[::1] r = np.array(y, dtype=np.float64, copy=True)
    cdef double[::1] col_sq = np.zeros(d)
    cdef Py_ssize_t i, j, sweep
    cdef double cj, wj, nwj, rho, delta, max_delta, thr = 0.5 * lam
    for j in range(d):
        for i in range(n):
            col_sq[j] += x[i, j] * x[i, j]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(d):
            cj = col_sq[j]
            if cj <= 0.0:
                continue
            wj = w[j]
            rho = cj * wj
            for i in range(n):
                rho += x[i, j] * r[i]
            if rho > thr:
                nwj = (rho - thr) / cj
            elif rho < -thr:
                nwj = (rho + thr) / cj
            else:
                nwj = 0.0
            if nwj != wj:
                for i in range(n):
                    r[i] += x[i, j] * (wj - nwj)
                w[j] = nwj
                delta = fabs(nwj - wj)
                if delta > max_delta:
                    max_delta = delta
        if max_delta < tol and _lasso_kkt_violation(x, r, w, lam) <= kkt_tol:
            return w_arr, sweep, True
    return w_arr, max_sweeps, False


cdef inline double _smo_phi(double a, double gdiff, double eps, double bi,
                            double bj, double delta) nogil:
    return (-0.5 * a * delta * delta + gdiff * delta
            - eps * (fabs(bi + delta) - fabs(bi) + fabs(bj - delta) - fabs(bj)))


def svr_smo(K, y, double c_box, double eps, double tol, Py_ssize_t max_iter):
    """Maximal-violating-pair coordinate ascent on the linear-SVR dual."""
    cdef double[:, ::1] kmat = np.ascontiguousarray(K, dtype=np.float64)
    cdef Py_ssize_t m = kmat.shape[0]
    beta_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] beta = beta_arr
    cdef double[::1] g = np.array(y, dtype=np.float64, copy=True)
    cdef double[::1] cands = np.empty(8)
    cdef Py_ssize_t it = 0, i, j, t, n_cand
    cdef double gap = 0.0, up_best, dn_best, val, a, gdiff, bi, bj
    cdef double lo, hi, bp, dstar, si, sj, best_phi, best_delta, phi
    while it < max_iter:
        it += 1
        i = 0
        j = 0
        up_best = -INFINITY
        dn_best = INFINITY
        for t in range(m):
            if beta[t] >= 0.0:
                val = g[t] - eps
            else:
                val = g[t] + eps
            if beta[t] < c_box and val > up_best:
                up_best = val
                i = t
            if beta[t] > 0.0:
                val = g[t] - eps
            else:
                val = g[t] + eps
            if beta[t] > -c_box and val < dn_best:
                dn_best = val
                j = t
        gap = up_best - dn_best
        if not gap > tol:
            if gap < 0.0:
                gap = 0.0
            break
        a = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        gdiff = g[i] - g[j]
        bi = beta[i]
        bj = beta[j]
        lo = -c_box - bi
        if bj - c_box > lo:
            lo = bj - c_box
        hi = c_box - bi
        if bj + c_box < hi:
            hi = bj + c_box
        cands[0] = lo
        cands[1] = hi
        n_cand = 2
        if lo < -bi < hi:
            cands[n_cand] = -bi
            n_cand += 1
        if lo < bj < hi:
            cands[n_cand] = bj
            n_cand += 1
        if a > 0.0:
            for t in range(4):
                si = 1.0 if t < 2 else -1.0
                sj = 1.0 if t % 2 == 0 else -1.0
                dstar = (gdiff - eps * (si - sj)) / a
                if lo < dstar < hi:
                    cands[n_cand] = dstar
                    n_cand += 1
        best_delta = cands[0]
        best_phi = _smo_phi(a, gdiff, eps, bi, bj, cands[0])
        for t in range(1, n_cand):
            phi = _smo_phi(a, gdiff, eps, bi, bj, cands[t])
            if phi > best_phi:
                best_phi = phi
                best_delta = cands[t]
        if best_phi <= 0.0:
            break
        beta[i] = bi + best_delta
        beta[j] = bj - best_delta
        for t in range(m):
            g[t] -= best_delta * (kmat[t, i] - kmat[t, j])
    return beta_arr, it, gap


def manifold_argmin(X, cand, w, double b, repr_vals, bint use_repr):
    """Candidate minimizing representativeness / hyperplane distance (or the
    farthest-from-plane candidate when use_repr is false)."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.int64_t[::1] c = np.ascontiguousarray(cand, dtype=np.int64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(repr_vals, dtype=np.float64)
    cdef Py_ssize_t d = x.shape[1], nc = c.shape[0]
    cdef Py_ssize_t t, k, idx, best = 0
    cdef double wnorm = 0.0, proj, dist, score, best_score = INFINITY
    for k in range(d):
        wnorm += wv[k] * wv[k]
    wnorm = sqrt(wnorm)
    for t in range(nc):
        idx = c[t]
        proj = b
        for k in range(d):
            proj += x[idx, k] * wv[k]
        dist = fabs(proj) / wnorm
        if use_repr:
            score = rv[idx] / dist if dist > 0.0 else INFINITY
        else:
            score = -dist
        if score < best_score:
            best_score = score
            best = t
    return int(c[best]), float(best_score)


def cluster_argmax(X, members, others, bint use_repr):
    """Cluster member maximizing R*D (or D alone when use_repr is false)."""
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.int64_t[::1] mem = np.ascontiguousarray(members, dtype=np.int64)
    cdef cnp.int64_t[::1] oth = np.ascontiguousarray(others, dtype=np.int64)
    cdef Py_ssize_t d = x.shape[1], nm = mem.shape[0], no = oth.shape[0]
    cdef Py_ssize_t t, u, k, idx, best = 0
    cdef double sq, diff, min_sq, ssd, diversity, score
    cdef double best_score = -INFINITY
    for t in range(nm):
        idx = mem[t]
        min_sq = INFINITY
        for u in range(no):
            sq = 0.0
            for k in range(d):
                diff = x[idx, k] - x[oth[u], k]
                sq += diff * diff
            if sq < min_sq:
                min_sq = sq
        diversity = sqrt(min_sq)
        if use_repr:
            ssd = 0.0
            for u in range(nm):
                sq = 0.0
                for k in range(d):
                    diff = x[idx, k] - x[mem[u], k]
                    sq += diff * diff
                ssd += sq
            if ssd > 0.0:
                score = nm * diversity / ssd
            elif diversity > 0.0:
                score = INFINITY
            else:
                score = 0.0
        else:
            score = diversity
        if score > best_score:
            best_score = score
            best = t
    return int(mem[best]), float(best_score)
