"""Dense and implicit-operator linear algebra primitives.

Truncated SVD / symmetric eigendecompositions are computed by block
randomized subspace iteration (oversampling 10, at least 4 power
iterations, then iterated to the requested tolerance).  Inputs whose
smaller dimension is at most ``DENSE_CUTOFF`` take a full dense
decomposition instead; the dense path doubles as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ConvergenceError, ParameterError

DENSE_CUTOFF = 32
OVERSAMPLE = 10
MIN_POWER_ITERS = 4
MAX_POWER_ITERS = 300


class LinearMap:
    """A linear operator given by matvec callbacks, never materialized.

    ``apply`` computes v -> M v and ``apply_transpose`` computes v -> M^T v.
    Both accept 1-d vectors or 2-d blocks of column vectors.
    """

    def __init__(self, rows: int, cols: int,
                 apply: Callable[[np.ndarray], np.ndarray],
                 apply_transpose: Callable[[np.ndarray], np.ndarray]):
        self.rows = int(rows)
        self.cols = int(cols)
        self.apply = apply
        self.apply_transpose = apply_transpose

    @property
    def shape(self):
        return (self.rows, self.cols)

    @classmethod
    def from_dense(cls, A: np.ndarray) -> "LinearMap":
        A = np.asarray(A, dtype=float)
        return cls(A.shape[0], A.shape[1],
                   lambda v: A @ v, lambda v: A.T @ v)

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(self.cols))


@dataclass(frozen=True)
class TruncatedSVD:
    """Leading singular triplets: U (n x k), S (k,), V (m x k)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def compose(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T


def _fix_signs(U: np.ndarray, V: Optional[np.ndarray] = None):
    """Make the first nonzero entry of each column of U nonnegative.

    V, when given, is flipped in lockstep so the product is preserved.
    """
    for j in range(U.shape[1]):
        col = U[:, j]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        nz = np.nonzero(np.abs(col) > 1e-12 * scale)[0]
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
            if V is not None:
                V[:, j] = -V[:, j]
    return U, V


def _as_linear_map(op) -> LinearMap:
    if isinstance(op, LinearMap):
        return op
    return LinearMap.from_dense(np.asarray(op, dtype=float))


def truncated_svd(op, k: int, tol: float = 1e-10, seed: int = 0) -> TruncatedSVD:
    """Leading-k singular triplets of a dense matrix or LinearMap.

    tol is a relative accuracy target on the singular values (scaled by
    the leading singular value estimate).
    """
    lm = _as_linear_map(op)
    n, m = lm.rows, lm.cols
    if not 1 <= k <= min(n, m):
        raise ParameterError(f"rank k={k} out of range for {n}x{m} operator")

    if min(n, m) <= DENSE_CUTOFF:
        A = lm.to_dense() if not isinstance(op, np.ndarray) else np.asarray(op, dtype=float)
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        U, Vh = U[:, :k].copy(), Vt[:k].T.copy()
        _fix_signs(U, Vh)
        return TruncatedSVD(U=U, S=s[:k].copy(), V=Vh)

    rng = np.random.default_rng(seed)
    ell = min(k + OVERSAMPLE, min(n, m))
    Q = np.linalg.qr(lm.apply(rng.standard_normal((m, ell))))[0]
    prev = None
    for it in range(MAX_POWER_ITERS):
        Q = np.linalg.qr(lm.apply_transpose(Q))[0]
        Q = np.linalg.qr(lm.apply(Q))[0]
        B = lm.apply_transpose(Q).T  # ell x m
        s = np.linalg.svd(B, compute_uv=False)[:k]
        if it + 1 >= MIN_POWER_ITERS and prev is not None:
            scale = max(s[0], np.finfo(float).tiny)
            if np.max(np.abs(s - prev)) <= tol * scale:
                break
        prev = s
    else:
        Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
        best = TruncatedSVD(U=Q @ Ub[:, :k], S=s[:k], V=Vt[:k].T)
        raise ConvergenceError(
            f"truncated_svd did not stabilize within {MAX_POWER_ITERS} iterations",
            best=best)

    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    U = Q @ Ub[:, :k]
    Vh = Vt[:k].T.copy()
    _fix_signs(U, Vh)
    return TruncatedSVD(U=U, S=s[:k].copy(), V=Vh)


def _check_symmetric(lm: LinearMap, rng: np.random.Generator, probes: int = 3):
    n = lm.rows
    for _ in range(probes):
        v = rng.standard_normal(n)
        w = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        w /= np.linalg.norm(w)
        lv, lw = lm.apply(v), lm.apply(w)
        scale = 1.0 + max(np.linalg.norm(lv), np.linalg.norm(lw))
        if abs(lv @ w - lw @ v) > 1e-8 * scale:
            raise ParameterError("operator failed the symmetry probe")


def _spectral_norm_bound(lm: LinearMap, rng: np.random.Generator) -> float:
    """Cheap upper-ish bound on the spectral norm via power iteration."""
    v = rng.standard_normal(lm.rows)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(30):
        w = lm.apply(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = nw
        v = w / nw
    return 1.5 * est + 1e-12


def symmetric_eig_topk(op, k: int, tol: float = 1e-10, seed: int = 0):
    """Top-k eigenpairs (largest algebraic eigenvalues) of a symmetric operator.

    Returns (M, lambdas) with M n x k orthonormal and lambdas non-increasing.
    Indefinite operators are handled by shifting with a spectral norm bound
    before subspace iteration, which preserves the algebraic ordering.
    """
    lm = _as_linear_map(op)
    if lm.rows != lm.cols:
        raise ParameterError("symmetric_eig_topk requires a square operator")
    n = lm.rows
    if not 1 <= k <= n:
        raise ParameterError(f"rank k={k} out of range for {n}x{n} operator")

    rng = np.random.default_rng(seed)
    _check_symmetric(lm, rng)

    if n <= DENSE_CUTOFF:
        A = lm.to_dense() if not isinstance(op, np.ndarray) else np.asarray(op, dtype=float)
        lam, vecs = np.linalg.eigh(0.5 * (A + A.T))
        order = np.argsort(lam)[::-1][:k]
        M = vecs[:, order].copy()
        _fix_signs(M)
        return M, lam[order].copy()

    shift = _spectral_norm_bound(lm, rng)

    def shifted(block):
        return lm.apply(block) + shift * block

    Q = np.linalg.qr(shifted(rng.standard_normal((n, min(k + OVERSAMPLE, n)))))[0]
    prev = None
    for it in range(MAX_POWER_ITERS):
        AQ = shifted(Q)
        T = Q.T @ AQ
        lam, W = np.linalg.eigh(0.5 * (T + T.T))
        order = np.argsort(lam)[::-1]
        ritz = lam[order][:k] - shift
        Q = np.linalg.qr(AQ)[0]
        if it + 1 >= MIN_POWER_ITERS and prev is not None:
            scale = max(np.max(np.abs(ritz)), shift, np.finfo(float).tiny)
            if np.max(np.abs(ritz - prev)) <= tol * scale:
                break
        prev = ritz
    else:
        raise ConvergenceError(
            f"symmetric_eig_topk did not stabilize within {MAX_POWER_ITERS} iterations",
            best=(Q[:, :k], prev))

    AQ = lm.apply(Q)
    T = Q.T @ AQ
    lam, W = np.linalg.eigh(0.5 * (T + T.T))
    order = np.argsort(lam)[::-1][:k]
    M = Q @ W[:, order]
    M = np.linalg.qr(M)[0]
    _fix_signs(M)
    lambdas = np.array([M[:, j] @ lm.apply(M[:, j]) for j in range(k)])
    idx = np.argsort(lambdas)[::-1]
    return M[:, idx].copy(), lambdas[idx]


def symmetric_eig_topk_factored(F1: np.ndarray, F2: np.ndarray, k: int,
                                seed: int = 0):
    """Top-k algebraic eigenpairs of the symmetric product C = F1 F2^T.

    With F1, F2 both n x q and C symmetric, col(F1) is an invariant
    subspace containing range(C) and C vanishes on its complement, so the
    full spectrum is eig(Q^T C Q) plus n - q zeros for Q = orth(F1).  Cost
    is O(n q^2) and exact up to the dense q x q eigensolve; no n x n
    buffer is formed.  When fewer than k eigenvalues of the compressed
    block are nonnegative, zero-eigenvalue directions from the complement
    are preferred over negative ones.
    """
    F1 = np.asarray(F1, dtype=float)
    F2 = np.asarray(F2, dtype=float)
    if F1.shape != F2.shape:
        raise ParameterError("factor shapes disagree")
    n, q = F1.shape
    if not 1 <= k <= n:
        raise ParameterError(f"rank k={k} out of range for {n}x{n} operator")

    Q = np.linalg.qr(F1)[0]
    T = (Q.T @ F1) @ (F2.T @ Q)
    lam, W = np.linalg.eigh(0.5 * (T + T.T))
    order = np.argsort(lam)[::-1]
    lam, W = lam[order], W[:, order]

    take = min(k, q)
    n_zero_better = 0
    if n > q:
        # count selected negatives that a complement null vector beats
        n_zero_better = int(np.sum(lam[:take] < 0.0))
    keep = take - n_zero_better
    M = Q @ W[:, :keep]
    lambdas = lam[:keep]

    pad = k - keep
    if pad > 0:
        if n - q < pad:
            raise ParameterError("operator order too small for requested k")
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((n, pad))
        G -= Q @ (Q.T @ G)
        if M.shape[1]:
            G -= M @ (M.T @ G)
        Mc = np.linalg.qr(G)[0][:, :pad]
        M = np.hstack([M, Mc])
        lambdas = np.concatenate([lambdas, np.zeros(pad)])

    M = np.ascontiguousarray(M)
    _fix_signs(M)
    return M, lambdas


def build_pgram_operator(Y: np.ndarray, Z: np.ndarray, Phi: np.ndarray,
                         lam: float, rho1: float) -> LinearMap:
    """Implicit symmetric operator lam*YY^T + (rho1/2)ZZ^T + (Phi Z^T + Z Phi^T)/2.

    Stored only through its n x (d + 3k) factors F1, F2 with C = F1 F2^T;
    a matvec costs O(n(d + k)) and no n x n buffer is ever allocated.
    """
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    n = Y.shape[0]
    if Z.shape[0] != n or Phi.shape != Z.shape:
        raise ParameterError("Y, Z, Phi row counts / shapes are inconsistent")
    if lam < 0 or rho1 < 0:
        raise ParameterError("lam and rho1 must be nonnegative")

    sl, sr, sh = np.sqrt(lam), np.sqrt(rho1 / 2.0), np.sqrt(0.5)
    F1 = np.hstack([sl * Y, sr * Z, sh * Phi, sh * Z])
    F2 = np.hstack([sl * Y, sr * Z, sh * Z, sh * Phi])

    op = LinearMap(n, n, lambda v: F1 @ (F2.T @ v), lambda v: F2 @ (F1.T @ v))
    op.F1 = F1
    op.F2 = F2
    return op


def soft_threshold_svd(X: np.ndarray, tau: float,
                       max_rank: Optional[int] = None) -> np.ndarray:
    """Singular value soft-thresholding: sum_i max(s_i - tau, 0) u_i v_i^T."""
    if tau < 0:
        raise ParameterError("tau must be nonnegative")
    X = np.asarray(X, dtype=float)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    if max_rank is not None:
        s[max_rank:] = 0.0
    return (U * s) @ Vt


def apply_projection(M: np.ndarray, R: np.ndarray) -> np.ndarray:
    """M (M^T R) for orthonormal-column M; O(k n c), idempotent."""
    M = np.asarray(M, dtype=float)
    R = np.asarray(R, dtype=float)
    k = M.shape[1]
    gram = M.T @ M
    if np.max(np.abs(gram - np.eye(k))) > 1e-6:
        raise ParameterError("M does not have orthonormal columns")
    return M @ (M.T @ R)
