"""Reference completion methods benchmarked against the ADMM solver:
row-regression iterative SVD imputation, singular-value soft-impute,
and preconditioned (scaled) gradient descent on balanced factors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import PartialMatrix
from .exceptions import ParameterError
from .linalg import soft_threshold_svd
from .objective import ols_alpha


@dataclass
class BaselineResult:
    X_hat: np.ndarray
    iterations: int
    wall_time: float
    termination: str  # 'tolerance_met' | 'max_iters'
    U_f: Optional[np.ndarray] = None  # factored output (scaled_gd only)
    V_f: Optional[np.ndarray] = None
    jitter_used: bool = False
    monotone_violations: int = 0


def iterative_svd(data: PartialMatrix, k: int,
                  max_iters: int = 500) -> BaselineResult:
    """SVD imputation: re-estimate each missing entry (i, j) by regressing
    the rest of row i (column j excluded) on the right singular factor of
    the current rank-k iterate with its j-th row removed.

    Because the regression Gram is V^T V - v_j v_j^T, all missing entries
    are refit in one vectorized pass per iteration.  Missing entries start
    at their row's observed mean (global observed mean for empty rows);
    iteration stops when the Frobenius change over the missing entries
    drops below 0.01.
    """
    if data.nnz == 0:
        raise ParameterError("iterative_svd requires at least one observation")
    if not 1 <= k <= min(data.n, data.m):
        raise ParameterError("k out of range")
    t0 = time.perf_counter()

    obs = data.mask()
    missing = ~obs
    X = data.to_dense_zero_filled()
    counts = obs.sum(axis=1)
    global_mean = float(data.values.mean())
    row_means = np.where(counts > 0,
                         X.sum(axis=1) / np.maximum(counts, 1), global_mean)
    X = np.where(missing, row_means[:, None], X)

    if not missing.any():
        return BaselineResult(X_hat=X, iterations=0,
                              wall_time=time.perf_counter() - t0,
                              termination="tolerance_met")

    termination = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        _, _, Vt = np.linalg.svd(X, full_matrices=False)
        V = Vt[:k].T  # m x k
        # per-column leave-one-out Gram inverses, batched
        G = V.T @ V
        Gj = G[None, :, :] - V[:, :, None] * V[:, None, :]  # m x k x k
        H = np.linalg.pinv(Gj, rcond=1e-10) @ V[:, :, None]  # m x k x 1
        H = H[:, :, 0]
        # imputed_ij = v_j^T Gj^-1 (V^T x_i - v_j X_ij)
        E = (X @ V) @ H.T  # n x m
        s = np.sum(V * H, axis=1)  # m
        X_new = np.where(missing, E - X * s[None, :], X)
        change = float(np.linalg.norm((X_new - X)[missing]))
        X = X_new
        if change < 0.01:
            termination = "tolerance_met"
            break
    return BaselineResult(X_hat=X, iterations=it,
                          wall_time=time.perf_counter() - t0,
                          termination=termination)


def soft_impute(data: PartialMatrix, tau: float, eps: float = 1e-4,
                k_cap: Optional[int] = None,
                max_iters: int = 500) -> BaselineResult:
    """Proximal imputation: Z <- S_tau(observed entries + previous iterate
    on the unobserved ones), starting from Z = 0."""
    if tau < 0:
        raise ParameterError("tau must be nonnegative")
    t0 = time.perf_counter()
    obs = data.mask()
    A_obs = data.to_dense_zero_filled()
    Z = np.zeros((data.n, data.m))
    termination = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        W = np.where(obs, A_obs, Z)
        Z_new = soft_threshold_svd(W, tau, max_rank=k_cap)
        num = float(np.sum((Z_new - Z) ** 2))
        den = max(float(np.sum(Z * Z)), 1e-30)
        Z = Z_new
        if num / den < eps:
            termination = "tolerance_met"
            break
    return BaselineResult(X_hat=Z, iterations=it,
                          wall_time=time.perf_counter() - t0,
                          termination=termination)


def scaled_gd_loss(U, V, data: PartialMatrix, Y, alpha, lam: float,
                   gamma: float) -> float:
    X_at = np.einsum("ij,ij->i", U[data.rows], V[data.cols])
    diff = X_at - data.values
    E = Y - U @ (V.T @ alpha)
    return (float(diff @ diff) + lam * float(np.sum(E * E))
            + 0.5 * gamma * (float(np.sum(U * U)) + float(np.sum(V * V))))


def scaled_gd_gradients(U, V, data: PartialMatrix, Y, alpha, lam: float,
                        gamma: float):
    """Analytic gradients of scaled_gd_loss in (U, V) at fixed alpha."""
    n, m = data.n, data.m
    X_at = np.einsum("ij,ij->i", U[data.rows], V[data.cols])
    Rs = np.zeros((n, m))
    Rs[data.rows, data.cols] = X_at - data.values
    E = Y - U @ (V.T @ alpha)
    EA = E @ alpha.T  # n x m
    gU = 2.0 * (Rs @ V) - 2.0 * lam * (EA @ V) + gamma * U
    gV = 2.0 * (Rs.T @ U) - 2.0 * lam * (EA.T @ U) + gamma * V
    return gU, gV


def _stable_inverse(G: np.ndarray):
    """Inverse of a k x k Gram matrix; falls back to a trace-scaled ridge
    when the matrix is numerically singular.  Returns (inverse, jittered)."""
    k = G.shape[0]
    try:
        c = np.linalg.cond(G)
    except np.linalg.LinAlgError:
        c = np.inf
    if not np.isfinite(c) or c > 1e14:
        G = G + 1e-10 * max(np.trace(G), 1.0) * np.eye(k)
        return np.linalg.inv(G), True
    return np.linalg.inv(G), False


def scaled_gd(data: PartialMatrix, Y, lam: float, gamma: float, k: int,
              max_iters: int = 1000) -> BaselineResult:
    """Preconditioned gradient descent on balanced factors U V^T.

    The regression weights are refit by least squares each iteration and
    held fixed during the gradient step; updates are right-multiplied by
    (V^T V)^-1 and (U^T U)^-1 respectively, with step size one tenth of
    the inverse leading singular value of the zero-filled data.
    Terminates at the iteration cap or when the relative objective
    improvement falls below 1e-3.
    """
    if not 1 <= k <= min(data.n, data.m):
        raise ParameterError("k out of range")
    t0 = time.perf_counter()
    Y = np.atleast_2d(np.asarray(Y, dtype=float))

    A0 = data.to_dense_zero_filled()
    Uf, s, Vt = np.linalg.svd(A0, full_matrices=False)
    s1 = s[0] if s.size else 0.0
    if s1 <= 0:
        raise ParameterError("zero data matrix")
    eta = 1.0 / (10.0 * s1)
    sqrt_s = np.sqrt(s[:k])
    U = Uf[:, :k] * sqrt_s
    V = Vt[:k].T * sqrt_s

    jitter_used = False
    violations = 0
    termination = "max_iters"
    alpha = ols_alpha(U @ V.T, Y)
    loss_prev = scaled_gd_loss(U, V, data, Y, alpha, lam, gamma)
    it = 0
    for it in range(1, max_iters + 1):
        gU, gV = scaled_gd_gradients(U, V, data, Y, alpha, lam, gamma)
        inv_v, j1 = _stable_inverse(V.T @ V)
        inv_u, j2 = _stable_inverse(U.T @ U)
        jitter_used = jitter_used or j1 or j2
        U = U - eta * (gU @ inv_v)
        V = V - eta * (gV @ inv_u)
        alpha = ols_alpha(U @ V.T, Y)
        loss = scaled_gd_loss(U, V, data, Y, alpha, lam, gamma)
        if loss > loss_prev + 1e-9:
            violations += 1
        rel = (loss_prev - loss) / max(abs(loss_prev), np.finfo(float).tiny)
        loss_prev = loss
        if 0 <= rel < 1e-3:
            termination = "tolerance_met"
            break
    return BaselineResult(X_hat=U @ V.T, iterations=it,
                          wall_time=time.perf_counter() - t0,
                          termination=termination, U_f=U, V_f=V,
                          jitter_used=jitter_used,
                          monotone_violations=violations)
