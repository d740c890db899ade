import numpy as np
import pytest
from numpy.testing import assert_allclose

from alrbench import regressors
from alrbench.regressors import (RegConfig, fit, fit_lasso, fit_linear_svr,
                                 fit_ols, fit_ridge, predict, svr_objective)


def ridge_objective(w, b, X, y, lam, weights=None):
    omega = np.ones(len(y)) if weights is None else np.asarray(weights)
    r = y - X @ w - b
    return float((omega * r * r).sum() + lam * w @ w)


class TestRidge:
    def test_hand_normal_equations(self):
        # sum-of-squares + 0.5 w^2 on X=[-1;1], y=[-1,1]: w = 2/2.5
        model = fit_ridge(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), 0.5)
        assert model.w[0] == pytest.approx(0.8, abs=1e-12)
        assert model.b == pytest.approx(0.0, abs=1e-12)

    def test_shrinkage_limit(self, rng):
        X = rng.normal(size=(12, 3))
        y = rng.normal(size=12) + 3.0
        model = fit_ridge(X, y, 1e12)
        assert np.abs(model.w).max() < 1e-6
        assert model.b == pytest.approx(y.mean(), rel=1e-6)

    def test_ols_residual_orthogonality(self, rng):
        X = rng.normal(size=(30, 4))
        y = X @ rng.normal(size=4) + rng.normal(size=30)
        model = fit_ridge(X, y, 0.0)
        r = y - predict(model, X)
        A = np.hstack([X, np.ones((30, 1))])
        assert np.abs(A.T @ r).max() < 1e-8

    def test_weighted_scale_equivalence(self, rng):
        X = rng.normal(size=(15, 3))
        y = rng.normal(size=15)
        c = 3.7
        a = fit_ridge(X, y, 0.5 * c, weights=np.full(15, c))
        b = fit_ridge(X, y, 0.5)
        assert_allclose(a.w, b.w, atol=1e-10)
        assert a.b == pytest.approx(b.b, abs=1e-10)

    def test_gradient_vanishes_at_solution(self, rng):
        X = rng.normal(size=(20, 4))
        y = rng.normal(size=20)
        w8 = rng.uniform(0.5, 2.0, size=20)
        lam = 0.7
        model = fit_ridge(X, y, lam, weights=w8)
        r = y - predict(model, X)
        grad_w = -2.0 * X.T @ (w8 * r) + 2.0 * lam * model.w
        grad_b = -2.0 * (w8 * r).sum()
        assert np.abs(np.append(grad_w, grad_b)).max() < 1e-6
        # finite-difference agreement
        h = 1e-5
        for j in range(4):
            wp = model.w.copy(); wp[j] += h
            wm = model.w.copy(); wm[j] -= h
            fd = (ridge_objective(wp, model.b, X, y, lam, w8)
                  - ridge_objective(wm, model.b, X, y, lam, w8)) / (2 * h)
            assert fd == pytest.approx(grad_w[j], abs=1e-3)

    def test_rank_deficient_min_norm_fallback(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])  # rank 1
        y = np.array([2.0, 4.0, 6.0])
        model = fit_ridge(X, y, 0.0)
        assert model.diagnostics.get("pinv_fallback") is True
        assert_allclose(predict(model, X), y, atol=1e-9)
        # minimum-norm solution: among all exact fits, this has smallest norm
        assert np.linalg.norm(np.append(model.w, model.b)) <= \
            np.linalg.norm([2.0, 0.0, 0.0]) + 1e-9

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            fit_ridge(rng.normal(size=(4, 2)), np.zeros(4), -1.0)
        with pytest.raises(ValueError):
            fit_ridge(rng.normal(size=(4, 2)), np.zeros(3), 1.0)
        with pytest.raises(ValueError):
            fit_ridge(rng.normal(size=(4, 2)), np.zeros(4), 1.0,
                      weights=np.array([1.0, -1.0, 1.0, 1.0]))


class TestLasso:
    def test_hand_soft_threshold(self):
        # 1-D subgradient optimum: w = soft(2, 0.25) / 2
        model = fit_lasso(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), 0.5)
        assert model.w[0] == pytest.approx(0.875, abs=1e-10)
        assert model.b == pytest.approx(0.0, abs=1e-12)

    def test_full_shrinkage_threshold(self, rng):
        X = rng.normal(size=(25, 4))
        y = rng.normal(size=25)
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        # tiny relative margin keeps the boundary comparison off the last ulp
        lam = 2.0 * np.abs(Xc.T @ yc).max() * (1.0 + 1e-9)
        model = fit_lasso(X, y, lam)
        assert_allclose(model.w, 0.0)
        assert model.b == pytest.approx(y.mean())
        # just below the threshold at least one coordinate activates
        below = fit_lasso(X, y, lam * (1.0 - 1e-6))
        assert np.abs(below.w).max() > 0.0

    def test_lambda_zero_matches_ols(self, rng):
        X = rng.normal(size=(40, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + 0.1 * rng.normal(size=40)
        a = fit_lasso(X, y, 0.0)
        b = fit_ridge(X, y, 0.0)
        assert_allclose(a.w, b.w, atol=1e-6)
        assert a.b == pytest.approx(b.b, abs=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_conditions(self, seed):
        gen = np.random.default_rng(seed)
        m, d = int(gen.integers(5, 40)), int(gen.integers(1, 8))
        X = gen.normal(size=(m, d)) * gen.uniform(0.5, 2.0, size=d)
        y = X @ gen.normal(size=d) + gen.normal(size=m)
        lam = float(gen.uniform(0.05, 2.0))
        model = fit_lasso(X, y, lam)
        r = y - predict(model, X)
        g = 2.0 * X.T @ r
        for j in range(d):
            if model.w[j] == 0.0:
                assert abs(g[j]) <= lam + 1e-6
            else:
                assert g[j] == pytest.approx(lam * np.sign(model.w[j]), abs=1e-6)

    def test_non_convergence_diagnostic(self, rng):
        X = rng.normal(size=(30, 6))
        X[:, 3] = X[:, 2] + 1e-8 * rng.normal(size=30)  # near-duplicate columns
        y = rng.normal(size=30)
        model = fit_lasso(X, y, 0.01, max_sweeps=1)
        assert model.diagnostics.get("not_converged") is True


class TestLinearSVR:
    def test_constant_targets(self):
        X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
        y = np.full(3, 3.7)
        model = fit_linear_svr(X, y, C=1.0, epsilon_factor=0.1)
        assert_allclose(model.w, 0.0, atol=1e-12)
        assert model.b == pytest.approx(3.7)
        eps = 0.1 * y.std()
        assert np.abs(predict(model, X) - 3.7).max() <= eps + 1e-12

    def test_zero_eps_large_c_is_median_like(self, rng):
        X = rng.normal(size=(41, 2))
        y = X @ np.array([2.0, -1.0]) + rng.standard_cauchy(41) * 0.1
        model = fit_linear_svr(X, y, C=1e4, epsilon_factor=0.0)
        resid = y - predict(model, X)
        assert abs(np.median(resid)) < 1e-3

    def test_objective_vs_convex_solver_oracle(self):
        cp = pytest.importorskip("cvxpy")
        gen = np.random.default_rng(17)
        X = gen.normal(size=(20, 3))
        y = X @ gen.normal(size=3) + 0.3 * gen.normal(size=20)
        model = fit_linear_svr(X, y, C=1.3, epsilon_factor=0.15)
        eps = 0.15 * y.std()
        w = cp.Variable(3)
        b = cp.Variable()
        obj = 0.5 * cp.sum_squares(w) + 1.3 * cp.sum(
            cp.pos(cp.abs(y - X @ w - b) - eps))
        prob = cp.Problem(cp.Minimize(obj))
        prob.solve(solver=cp.CLARABEL)
        mine = svr_objective(model, X, y)
        assert mine == pytest.approx(prob.value, rel=1e-4, abs=1e-8)

    def test_never_worse_than_trivial_model(self, rng):
        for _ in range(10):
            X = rng.normal(size=(15, 3))
            y = rng.normal(size=15) * 4 + 1
            model = fit_linear_svr(X, y)
            trivial = regressors.LinearModel(
                w=np.zeros(3), b=float(y.mean()), config=model.config)
            assert svr_objective(model, X, y) <= \
                svr_objective(trivial, X, y) + 1e-9

    def test_deterministic(self, rng):
        X = rng.normal(size=(18, 4))
        y = rng.normal(size=18)
        a = fit_linear_svr(X, y)
        b = fit_linear_svr(X, y)
        assert np.array_equal(a.w, b.w) and a.b == b.b


class TestPredictAndDispatch:
    def test_constant_model(self):
        model = regressors.LinearModel(w=np.zeros(2), b=4.2,
                                       config=RegConfig(kind="OLS"))
        assert_allclose(predict(model, np.zeros((3, 2))), 4.2)

    def test_linear_arithmetic(self):
        model = regressors.LinearModel(w=np.array([2.0]), b=1.0,
                                       config=RegConfig(kind="OLS"))
        assert predict(model, np.array([[3.0]]))[0] == pytest.approx(7.0)

    def test_self_consistency(self, rng):
        X = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        model = fit_ridge(X, y, 0.3)
        r1 = y - predict(model, X)
        r2 = y - (X @ model.w + model.b)
        assert_allclose(r1, r2)

    def test_dimension_mismatch(self, rng):
        model = fit_ridge(rng.normal(size=(5, 3)), rng.normal(size=5), 0.1)
        with pytest.raises(ValueError):
            predict(model, rng.normal(size=(4, 2)))

    def test_dispatcher_covers_all_kinds(self, rng):
        X = rng.normal(size=(12, 2))
        y = rng.normal(size=12)
        for kind in regressors.MODEL_KINDS:
            model = fit(RegConfig(kind=kind), X, y)
            assert model.config.kind == kind
            assert np.isfinite(predict(model, X)).all()
        with pytest.raises(ValueError):
            fit(RegConfig(kind="Quadratic"), X, y)

    def test_ols_label(self, rng):
        model = fit_ols(rng.normal(size=(6, 2)), rng.normal(size=6))
        assert model.config.kind == "OLS"
