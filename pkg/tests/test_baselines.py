import numpy as np
import pytest

from mpadmm.baselines import (iterative_svd, scaled_gd, scaled_gd_gradients,
                              scaled_gd_loss, soft_impute)
from mpadmm.data import PartialMatrix, generate_synthetic
from mpadmm.exceptions import ParameterError
from mpadmm.linalg import soft_threshold_svd
from mpadmm.objective import err_l2, ols_alpha


def _hide_entries(A, hidden):
    n, m = A.shape
    mask = np.ones((n, m), dtype=bool)
    for i, j in hidden:
        mask[i, j] = False
    r, c = np.nonzero(mask)
    return PartialMatrix(n=n, m=m, rows=r, cols=c, values=A[r, c])


def _naive_isvd_step(X, missing, k):
    """Per-entry reference for one imputation pass: each missing (i, j) is
    regressed on the right factor with its j-th row removed."""
    _, _, Vt = np.linalg.svd(X, full_matrices=False)
    V = Vt[:k].T
    X_new = X.copy()
    for i, j in zip(*np.nonzero(missing)):
        v_j = V[j]
        G = V.T @ V - np.outer(v_j, v_j)
        coef = np.linalg.pinv(G, rcond=1e-10) @ (V.T @ X[i] - v_j * X[i, j])
        X_new[i, j] = v_j @ coef
    return X_new


class TestIterativeSVD:
    def test_no_missing_returns_input(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((6, 5))
        pm = _hide_entries(A, [])
        res = iterative_svd(pm, 2)
        assert res.iterations == 0
        assert res.termination == "tolerance_met"
        assert np.array_equal(res.X_hat, A)

    def test_row_mean_initialization(self):
        A = np.array([[1.0, 3.0, 100.0],
                      [4.0, 8.0, 6.0],
                      [-1.0, -2.0, -3.0]])
        pm = _hide_entries(A, [(0, 2), (2, 0), (2, 1), (2, 2)])
        res = iterative_svd(pm, 1, max_iters=0)
        # missing entries hold their row's observed mean; a fully hidden
        # row holds the global observed mean
        assert res.X_hat[0, 2] == pytest.approx(2.0)
        global_mean = np.mean([1.0, 3.0, 4.0, 8.0, 6.0])
        assert np.allclose(res.X_hat[2], global_mean)

    def test_observed_entries_preserved(self):
        rng = np.random.default_rng(1)
        u = rng.uniform(0.5, 1.5, size=8)
        v = rng.uniform(0.5, 1.5, size=6)
        A = np.outer(u, v)
        pm = _hide_entries(A, [(0, 0), (3, 4), (7, 5)])
        res = iterative_svd(pm, 1)
        assert np.array_equal(res.X_hat[pm.rows, pm.cols], pm.values)

    def test_rank_one_completion_consistency(self):
        rng = np.random.default_rng(2)
        u = rng.uniform(0.5, 1.5, size=10)
        v = rng.uniform(0.5, 1.5, size=8)
        A = np.outer(u, v)
        hidden = [(2, 3), (6, 1)]
        pm = _hide_entries(A, hidden)
        res = iterative_svd(pm, 1)
        assert res.termination == "tolerance_met"
        for i, j in hidden:
            # accuracy is limited by the absolute change-based stopping rule
            assert res.X_hat[i, j] == pytest.approx(A[i, j], abs=0.05)

    def test_matches_naive_per_entry_loop(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((9, 7))
        hidden = [(0, 1), (2, 2), (4, 6), (8, 0), (5, 3)]
        pm = _hide_entries(A, hidden)
        missing = ~pm.mask()
        # reproduce the row-mean start, then one vectorized pass
        res0 = iterative_svd(pm, 3, max_iters=0)
        res1 = iterative_svd(pm, 3, max_iters=1)
        want = _naive_isvd_step(res0.X_hat, missing, 3)
        assert np.max(np.abs(res1.X_hat - want)) < 1e-12

    def test_parameter_errors(self):
        pm = PartialMatrix(n=3, m=3, rows=[], cols=[], values=[])
        with pytest.raises(ParameterError):
            iterative_svd(pm, 1)
        pm = PartialMatrix(n=3, m=3, rows=[0], cols=[0], values=[1.0])
        with pytest.raises(ParameterError):
            iterative_svd(pm, 4)


class TestSoftImpute:
    def test_zero_threshold_fills_with_data(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((6, 5))
        pm = _hide_entries(A, [(1, 1), (4, 2)])
        res = soft_impute(pm, 0.0)
        assert res.termination == "tolerance_met"
        assert np.max(np.abs(res.X_hat - pm.to_dense_zero_filled())) < 1e-12

    def test_total_shrinkage_returns_zero(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((5, 4))
        pm = _hide_entries(A, [(0, 0)])
        tau = np.linalg.svd(pm.to_dense_zero_filled(),
                            compute_uv=False)[0] + 1.0
        res = soft_impute(pm, tau)
        assert res.iterations == 1
        assert np.allclose(res.X_hat, 0.0)

    def test_fixed_point_self_consistency(self):
        pm, _, _ = generate_synthetic(20, 15, 2, 2, 0.4, 0.0, seed=6)
        res = soft_impute(pm, 0.5, eps=1e-12)
        obs = pm.mask()
        W = np.where(obs, pm.to_dense_zero_filled(), res.X_hat)
        assert np.linalg.norm(soft_threshold_svd(W, 0.5) - res.X_hat) < 1e-3

    def test_each_step_is_the_prox_minimizer(self):
        rng = np.random.default_rng(7)
        W = rng.standard_normal((8, 6))
        tau = 0.9
        Z = soft_threshold_svd(W, tau)

        def prox_obj(X):
            return (0.5 * np.sum((X - W) ** 2)
                    + tau * np.linalg.svd(X, compute_uv=False).sum())

        best = prox_obj(Z)
        for _ in range(50):
            assert best <= prox_obj(Z + 0.1 * rng.standard_normal(Z.shape)) + 1e-10

    def test_negative_tau(self):
        pm = PartialMatrix(n=2, m=2, rows=[0], cols=[0], values=[1.0])
        with pytest.raises(ParameterError):
            soft_impute(pm, -1.0)


class TestScaledGD:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(8)
        n, m, k, d = 5, 4, 2, 3
        A = rng.standard_normal((n, m))
        pm = _hide_entries(A, [(0, 1), (3, 2)])
        Y = rng.standard_normal((n, d))
        U = rng.standard_normal((n, k))
        V = rng.standard_normal((m, k))
        alpha = rng.standard_normal((m, d))
        lam, gamma = 0.7, 0.3
        gU, gV = scaled_gd_gradients(U, V, pm, Y, alpha, lam, gamma)
        h = 1e-5
        for arr, grad in ((U, gU), (V, gV)):
            for idx in np.ndindex(arr.shape):
                arr[idx] += h
                up = scaled_gd_loss(U, V, pm, Y, alpha, lam, gamma)
                arr[idx] -= 2 * h
                dn = scaled_gd_loss(U, V, pm, Y, alpha, lam, gamma)
                arr[idx] += h
                assert grad[idx] == pytest.approx((up - dn) / (2 * h),
                                                  abs=1e-5, rel=1e-5)

    def test_exact_factors_are_a_fixed_point(self):
        # fully observed rank-k data with no regularization: the spectral
        # initialization is already optimal, so the run stops immediately
        pm, si, gt = generate_synthetic(15, 10, 2, 2, 0.0, 0.0, seed=9)
        res = scaled_gd(pm, si.Y, 0.0, 0.0, 2)
        assert res.termination == "tolerance_met"
        assert res.iterations == 1
        assert np.max(np.abs(res.X_hat - gt.A_true)) < 1e-8
        assert res.monotone_violations == 0

    def test_loss_decreases_from_spectral_init(self):
        pm, si, gt = generate_synthetic(30, 20, 2, 3, 0.2, 0.0, seed=10)
        res = scaled_gd(pm, si.Y, 1.0, 1e-6, 2, max_iters=300)
        A0 = pm.to_dense_zero_filled()
        Uf, s, Vt = np.linalg.svd(A0, full_matrices=False)
        U0 = Uf[:, :2] * np.sqrt(s[:2])
        V0 = Vt[:2].T * np.sqrt(s[:2])
        a0 = ols_alpha(U0 @ V0.T, si.Y)
        init_loss = scaled_gd_loss(U0, V0, pm, si.Y, a0, 1.0, 1e-6)
        a1 = ols_alpha(res.X_hat, si.Y)
        final_loss = scaled_gd_loss(res.U_f, res.V_f, pm, si.Y, a1, 1.0, 1e-6)
        assert final_loss < init_loss
        assert err_l2(res.X_hat, gt.A_true) < err_l2(A0, gt.A_true)
        assert res.U_f.shape == (30, 2) and res.V_f.shape == (20, 2)
        assert res.monotone_violations <= res.iterations

    def test_parameter_errors(self):
        pm = PartialMatrix(n=3, m=3, rows=[0], cols=[0], values=[1.0])
        with pytest.raises(ParameterError):
            scaled_gd(pm, np.zeros((3, 1)), 1.0, 1.0, 4)
        empty = PartialMatrix(n=3, m=3, rows=[0], cols=[0], values=[0.0])
        with pytest.raises(ParameterError):
            scaled_gd(empty, np.zeros((3, 1)), 1.0, 1.0, 1)
