"""Objective evaluation and solution quality metrics.

The objective being minimized is

    sum_{(i,j) in Omega} (X_ij - A_ij)^2
      + lam * Tr(Y^T (I - P_X) Y)
      + gamma * ||X||_*

where P_X projects onto the column space of X.  Two evaluation routes
are provided: a naive pseudo-inverse route (the oracle) and an SVD
route that never forms X^T X and accepts factored input U_f V_f^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PartialMatrix
from .exceptions import ParameterError

PINV_CUTOFF = 1e-12  # relative singular value cutoff in ols_alpha


@dataclass(frozen=True)
class ObjectiveBreakdown:
    fit_term: float
    side_term: float
    reg_term: float

    @property
    def total(self) -> float:
        return self.fit_term + self.side_term + self.reg_term


@dataclass(frozen=True)
class Metrics:
    err_l2: float
    r2: float
    fitted_rank: int
    objective: ObjectiveBreakdown


def ols_alpha(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Minimum-norm least squares solution (X^T X)^+ X^T Y."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise ParameterError("X and Y row counts disagree")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((X.shape[1], Y.shape[1]))
    keep = s > PINV_CUTOFF * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return Vt.T @ (inv[:, None] * (U.T @ Y))


def _fit_term(X_at, data: PartialMatrix) -> float:
    diff = X_at - data.values
    return float(diff @ diff)


def objective_naive(X: np.ndarray, data: PartialMatrix, Y: np.ndarray,
                    lam: float, gamma: float) -> ObjectiveBreakdown:
    """Oracle route: explicit pseudo-inverse of X^T X for the side term."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    fit = _fit_term(X[data.rows, data.cols], data)
    P = X @ np.linalg.pinv(X.T @ X) @ X.T
    resid = Y - P @ Y
    side = lam * float(np.trace(Y.T @ resid))
    s = np.linalg.svd(X, compute_uv=False)
    return ObjectiveBreakdown(fit_term=fit, side_term=side,
                              reg_term=gamma * float(s.sum()))


def objective_svd(X_or_factors, data: PartialMatrix, Y: np.ndarray,
                  lam: float, gamma: float) -> ObjectiveBreakdown:
    """SVD route; accepts a dense matrix or a factor pair (U_f, V_f).

    The side term uses Tr(Y^T (I - U U^T) Y) from the compact SVD of X at
    numerical rank; factored input is handled through thin QR of each
    factor, at O(k n (m + d)) cost and without densifying U_f V_f^T.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if isinstance(X_or_factors, tuple):
        Uf, Vf = (np.asarray(f, dtype=float) for f in X_or_factors)
        Qu, Ru = np.linalg.qr(Uf)
        Qv, Rv = np.linalg.qr(Vf)
        Uc, s, Vtc = np.linalg.svd(Ru @ Rv.T)
        X_at = np.einsum("ij,ij->i", Uf[data.rows], Vf[data.cols])
        left = Qu @ Uc  # n x k, orthonormal columns
    else:
        X = np.atleast_2d(np.asarray(X_or_factors, dtype=float))
        left_full, s, _ = np.linalg.svd(X, full_matrices=False)
        left = left_full
        X_at = X[data.rows, data.cols]

    # numerical rank: drop directions whose singular value underflows
    if s.size and s[0] > 0:
        r = int(np.sum(s > s[0] * max(1, len(s)) * np.finfo(float).eps))
    else:
        r = 0
    left = left[:, :r]

    fit = _fit_term(X_at, data)
    YtY = float(np.sum(Y * Y))
    proj = left.T @ Y
    side = lam * (YtY - float(np.sum(proj * proj)))
    return ObjectiveBreakdown(fit_term=fit, side_term=side,
                              reg_term=gamma * float(s[:r].sum()))


def spectral_bound(data: PartialMatrix, Y: np.ndarray, lam: float,
                   gamma: float) -> float:
    """A priori spectral norm bound (sum_Omega A_ij^2 + lam ||Y||_F^2) / gamma."""
    if gamma <= 0:
        raise ParameterError("gamma must be > 0")
    Y = np.asarray(Y, dtype=float)
    return (float(data.values @ data.values) + lam * float(np.sum(Y * Y))) / gamma


def worst_case_delta(X: np.ndarray, gamma: float):
    """Adversarial perturbation gamma*UV^T attaining <X, Delta> = gamma||X||_*."""
    if gamma < 0:
        raise ParameterError("gamma must be >= 0")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    r = int(np.sum(s > (s[0] * 1e-14 if s.size and s[0] > 0 else 0.0)))
    Delta = gamma * (U[:, :r] @ Vt[:r])
    return Delta, gamma * float(s[:r].sum())


def err_l2(X_hat: np.ndarray, A_true: np.ndarray) -> float:
    """Relative squared Frobenius reconstruction error."""
    A_true = np.asarray(A_true, dtype=float)
    denom = float(np.sum(A_true * A_true))
    if denom == 0.0:
        raise ParameterError("A_true must be nonzero")
    diff = np.asarray(X_hat, dtype=float) - A_true
    return float(np.sum(diff * diff)) / denom


def r_squared(X_hat: np.ndarray, Y: np.ndarray) -> float:
    """Pooled multivariate R^2 of the side info regressed on X_hat.

    Total sum of squares is column-mean centered and pooled over columns.
    """
    X_hat = np.atleast_2d(np.asarray(X_hat, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    alpha = ols_alpha(X_hat, Y)
    resid = Y - X_hat @ alpha
    ss_res = float(np.sum(resid * resid))
    centered = Y - Y.mean(axis=0, keepdims=True)
    ss_tot = float(np.sum(centered * centered))
    if ss_tot == 0.0:
        if ss_res <= 1e-12 * max(1.0, float(np.sum(Y * Y))):
            return 1.0
        raise ParameterError("R^2 undefined: constant Y with nonzero residual")
    return 1.0 - ss_res / ss_tot


def fitted_rank(X_hat: np.ndarray) -> int:
    """Numerical rank: singular values above s_1 * max(n, m) * 2^-52."""
    X_hat = np.atleast_2d(np.asarray(X_hat, dtype=float))
    s = np.linalg.svd(X_hat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = s[0] * max(X_hat.shape) * 2.0 ** -52
    return int(np.sum(s > tol))


def evaluate(X_hat: np.ndarray, data: PartialMatrix, Y: np.ndarray,
             A_true: np.ndarray, lam: float, gamma: float) -> Metrics:
    """Bundle of all solution quality metrics against a known ground truth."""
    return Metrics(
        err_l2=err_l2(X_hat, A_true),
        r2=r_squared(X_hat, Y),
        fitted_rank=fitted_rank(X_hat),
        objective=objective_svd(X_hat, data, Y, lam, gamma),
    )
