"""Mixed-projection ADMM solver.

Minimizes, over U (n x k), V (m x k) and a rank-k orthogonal projector
P = M M^T, the partially observed fit plus side-information and
factored nuclear-norm surrogate terms, by alternating closed-form
block updates on the augmented Lagrangian with copy variable Z and
dual variables Phi (projection constraint) and Psi (copy constraint).
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import Hyperparams, PartialMatrix, SideInfo
from .exceptions import NumericalError, ParameterError
from .linalg import (apply_projection, build_pgram_operator,
                     symmetric_eig_topk_factored, truncated_svd)


class RankDeficiencyWarning(UserWarning):
    """Z had numerical rank below k when computing the dual residual."""


@dataclass
class ObservationMasks:
    """Per-row and per-column observed index lists with aligned values."""

    row_cols: list
    row_vals: list
    col_rows: list
    col_vals: list

    @classmethod
    def from_partial(cls, data: PartialMatrix) -> "ObservationMasks":
        row_cols = [[] for _ in range(data.n)]
        row_vals = [[] for _ in range(data.n)]
        col_rows = [[] for _ in range(data.m)]
        col_vals = [[] for _ in range(data.m)]
        for i, j, v in zip(data.rows, data.cols, data.values):
            row_cols[i].append(j)
            row_vals[i].append(v)
            col_rows[j].append(i)
            col_vals[j].append(v)
        return cls(
            row_cols=[np.array(c, dtype=np.int64) for c in row_cols],
            row_vals=[np.array(v) for v in row_vals],
            col_rows=[np.array(r, dtype=np.int64) for r in col_rows],
            col_vals=[np.array(v) for v in col_vals],
        )


@dataclass
class IterateState:
    U: np.ndarray
    V: np.ndarray
    M: np.ndarray  # orthonormal factor of P = M M^T
    Z: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray

    @property
    def k(self) -> int:
        return self.U.shape[1]

    def x_hat(self) -> np.ndarray:
        return self.U @ self.V.T


@dataclass
class SolveReport:
    iterations: int = 0
    phi_residual_trace: list = field(default_factory=list)
    psi_residual_trace: list = field(default_factory=list)
    dual_residual_trace: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    subproblem_times: dict = field(default_factory=lambda: {"U": 0.0, "V": 0.0, "P": 0.0, "Z": 0.0})
    termination: str = "max_iters"
    warnings: list = field(default_factory=list)
    lagrangian_trace: list = field(default_factory=list)  # filled when tracked


def _solve_rows(out, indices, gather, vals, factor_cols, diag, extra):
    """Row-independent ridge solves; each row is computed on its own so the
    result does not depend on how rows are distributed across threads."""
    k = factor_cols.shape[1]
    eye = np.eye(k)
    for i in indices:
        idx = gather[i]
        rhs = extra[i].copy()
        if idx.size:
            Fi = factor_cols[idx]
            G = 2.0 * (Fi.T @ Fi) + diag * eye
            rhs += 2.0 * (Fi.T @ vals[i])
        else:
            G = diag * eye
        out[i] = cho_solve(cho_factor(G, check_finite=False), rhs,
                           check_finite=False)


def _parallel_rows(n_rows, threads, work):
    if threads <= 1 or n_rows < 2:
        work(range(n_rows))
        return
    blocks = np.array_split(np.arange(n_rows), min(threads, n_rows))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, blocks))


def update_U(V, Z, Psi, masks: ObservationMasks, gamma: float, rho2: float,
             threads: int = 1) -> np.ndarray:
    if gamma + rho2 <= 0:
        raise ParameterError("gamma + rho2 must be > 0")
    n, k = Z.shape
    out = np.empty((n, k))
    extra = Psi + rho2 * Z
    _parallel_rows(n, threads, lambda idx: _solve_rows(
        out, idx, masks.row_cols, masks.row_vals, V, gamma + rho2, extra))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite values after U update")
    return out


def update_V(U, masks: ObservationMasks, gamma: float,
             threads: int = 1) -> np.ndarray:
    if gamma <= 0:
        raise ParameterError("gamma must be > 0")
    m = len(masks.col_rows)
    k = U.shape[1]
    out = np.empty((m, k))
    zeros = np.zeros((m, k))
    _parallel_rows(m, threads, lambda idx: _solve_rows(
        out, idx, masks.col_rows, masks.col_vals, U, gamma, zeros))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite values after V update")
    return out


def update_P(Y, Z, Phi, lam: float, rho1: float, k: int,
             seed: int = 0) -> np.ndarray:
    """Orthonormal factor M of the projector maximizing the P subproblem.

    M holds the k eigenvectors of largest algebraic eigenvalue of
    lam*YY^T + (rho1/2)ZZ^T + (Phi Z^T + Z Phi^T)/2, computed through the
    implicit factored operator.
    """
    if k > Y.shape[0]:
        raise ParameterError("k exceeds the row dimension")
    op = build_pgram_operator(Y, Z, Phi, lam, rho1)
    M, _ = symmetric_eig_topk_factored(op.F1, op.F2, k, seed=seed)
    return M


def update_Z(U, M, Phi, Psi, rho1: float, rho2: float) -> np.ndarray:
    """Closed-form stationary point of the Z subproblem.

    Solves (rho1 (I - P) + rho2 I) Z = rho2 U - (I - P) Phi - Psi with the
    inverse expanded through the projector, never forming an n x n matrix.
    """
    if rho1 <= 0 or rho2 <= 0:
        raise ParameterError("rho1, rho2 must be > 0")
    PU = apply_projection(M, U)
    PPhi = apply_projection(M, Phi)
    PPsi = apply_projection(M, Psi)
    return (rho2 * U - Phi + PPhi - Psi + rho1 * PU
            - (rho1 / rho2) * PPsi) / (rho1 + rho2)


def update_duals(state: IterateState, rho1: float, rho2: float):
    resid_phi = state.Z - apply_projection(state.M, state.Z)
    resid_psi = state.Z - state.U
    return state.Phi + rho1 * resid_phi, state.Psi + rho2 * resid_psi


def primal_residuals(state: IterateState):
    """Frobenius norms of (I - P)Z and Z - U."""
    phi_res = float(np.linalg.norm(state.Z - apply_projection(state.M, state.Z)))
    psi_res = float(np.linalg.norm(state.Z - state.U))
    return phi_res, psi_res


def dual_residual(state: IterateState, Y, lam: float, seed: int = 0) -> float:
    """||P2 - P1 P2||_F where P1 projects onto col(Z) and P2 onto the top-k
    eigenspace of lam*YY^T + (Phi Z^T + Z Phi^T)/2, all in factored form."""
    Z = state.Z
    k = state.k
    Uz, sz, _ = np.linalg.svd(Z, full_matrices=False)
    if sz.size and sz[0] > 0:
        rank = int(np.sum(sz > sz[0] * max(Z.shape) * np.finfo(float).eps))
    else:
        rank = 0
    if rank < k:
        warnings.warn("Z has numerical rank below k; dual residual computed "
                      "at the actual rank", RankDeficiencyWarning)
    Q1 = Uz[:, :rank]
    op = build_pgram_operator(Y, Z, state.Phi, lam, 0.0)
    M2, _ = symmetric_eig_topk_factored(op.F1, op.F2, k, seed=seed)
    B = M2 - Q1 @ (Q1.T @ M2) if rank else M2
    return float(np.linalg.norm(B))


def augmented_lagrangian(state: IterateState, data: PartialMatrix, Y,
                         lam: float, gamma: float, rho1: float,
                         rho2: float) -> float:
    """Value of the augmented Lagrangian at the current iterate."""
    U, V, M, Z, Phi, Psi = (state.U, state.V, state.M, state.Z,
                            state.Phi, state.Psi)
    fit = np.einsum("ij,ij->i", U[data.rows], V[data.cols]) - data.values
    proj_y = M.T @ Y
    side = lam * (float(np.sum(Y * Y)) - float(np.sum(proj_y * proj_y)))
    reg = 0.5 * gamma * (float(np.sum(U * U)) + float(np.sum(V * V)))
    rphi = Z - apply_projection(M, Z)
    rpsi = Z - U
    return (float(fit @ fit) + side + reg
            + float(np.sum(Phi * rphi)) + float(np.sum(Psi * rpsi))
            + 0.5 * rho1 * float(np.sum(rphi * rphi))
            + 0.5 * rho2 * float(np.sum(rpsi * rpsi)))


def first_order_check(state: IterateState, data: PartialMatrix, Y,
                      lam: float, gamma: float, tol: float) -> dict:
    """Residual tests of the stationarity system of the Lagrangian.

    Returns one boolean per condition: U and V row stationarity,
    P eigenspace alignment, dual balance Phi + Psi = P Phi, Z = P Z
    and Z = U.
    """
    masks = ObservationMasks.from_partial(data)
    U, V, M, Z, Phi, Psi = (state.U, state.V, state.M, state.Z,
                            state.Phi, state.Psi)
    k = state.k

    res_u = 0.0
    for i in range(U.shape[0]):
        idx = masks.row_cols[i]
        if idx.size:
            Vi = V[idx]
            lhs = 2.0 * (Vi.T @ (Vi @ U[i])) + gamma * U[i]
            rhs = 2.0 * (Vi.T @ masks.row_vals[i]) + Psi[i]
        else:
            lhs, rhs = gamma * U[i], Psi[i]
        res_u += float(np.sum((lhs - rhs) ** 2))

    res_v = 0.0
    for j in range(V.shape[0]):
        idx = masks.col_rows[j]
        if idx.size:
            Uj = U[idx]
            lhs = 2.0 * (Uj.T @ (Uj @ V[j])) + gamma * V[j]
            rhs = 2.0 * (Uj.T @ masks.col_vals[j])
        else:
            lhs, rhs = gamma * V[j], np.zeros(k)
        res_v += float(np.sum((lhs - rhs) ** 2))

    op = build_pgram_operator(Y, Z, Phi, lam, 0.0)
    M2, _ = symmetric_eig_topk_factored(op.F1, op.F2, k, seed=0)
    cross = float(np.sum((M.T @ M2) ** 2))
    res_p = np.sqrt(max(2.0 * k - 2.0 * cross, 0.0))

    res_dual = float(np.linalg.norm(Phi + Psi - apply_projection(M, Phi)))
    res_zp = float(np.linalg.norm(Z - apply_projection(M, Z)))
    res_zu = float(np.linalg.norm(Z - U))

    return {
        "U_stationarity": bool(np.sqrt(res_u) <= tol),
        "V_stationarity": bool(np.sqrt(res_v) <= tol),
        "P_alignment": bool(res_p <= tol),
        "dual_balance": bool(res_dual <= tol),
        "Z_projected": bool(res_zp <= tol),
        "Z_equals_U": bool(res_zu <= tol),
    }


def solve(data: PartialMatrix, side: SideInfo, hp: Hyperparams,
          track_objective: bool = True, track_dual_residual: bool = True,
          track_lagrangian: bool = False):
    """Run the full ADMM loop; returns (IterateState, SolveReport).

    Initialization: U0 = Z0 = L sqrt(S), V0 = R sqrt(S), M0 = L from the
    rank-k truncated SVD of the zero-filled data, and all-ones duals.
    Terminates when both squared primal residual norms fall to eps, or at
    the iteration cap.
    """
    from .objective import objective_svd  # local import avoids a cycle

    Y = side.Y
    if Y.shape[0] != data.n:
        raise ParameterError("side info row count does not match the data")
    k = hp.k
    if k > min(data.n, data.m):
        raise ParameterError("k exceeds min(n, m)")
    if not (np.all(np.isfinite(data.values)) and np.all(np.isfinite(Y))):
        raise NumericalError("non-finite input data")

    A0 = data.to_dense_zero_filled()
    tsvd = truncated_svd(A0, k, seed=hp.seed)
    sqrt_s = np.sqrt(tsvd.S)
    state = IterateState(
        U=tsvd.U * sqrt_s,
        V=tsvd.V * sqrt_s,
        M=tsvd.U.copy(),
        Z=tsvd.U * sqrt_s,
        Phi=np.ones((data.n, k)),
        Psi=np.ones((data.n, k)),
    )
    masks = ObservationMasks.from_partial(data)
    report = SolveReport()
    report.termination = "max_iters"

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficiencyWarning)
        for t in range(hp.max_iters):
            lag_row = []
            if track_lagrangian:
                lag_row.append(augmented_lagrangian(state, data, Y, hp.lam,
                                                    hp.gamma, hp.rho1, hp.rho2))

            t0 = time.perf_counter()
            U_prev = state.U if track_lagrangian else None
            state.U = update_U(state.V, state.Z, state.Psi, masks,
                               hp.gamma, hp.rho2, hp.threads)
            report.subproblem_times["U"] += time.perf_counter() - t0
            if track_lagrangian:
                du_sq = float(np.sum((state.U - U_prev) ** 2))
                lag_row.append(augmented_lagrangian(state, data, Y, hp.lam,
                                                    hp.gamma, hp.rho1, hp.rho2))

            t0 = time.perf_counter()
            state.M = update_P(Y, state.Z, state.Phi, hp.lam, hp.rho1, k,
                               seed=hp.seed)
            report.subproblem_times["P"] += time.perf_counter() - t0
            if track_lagrangian:
                lag_row.append(augmented_lagrangian(state, data, Y, hp.lam,
                                                    hp.gamma, hp.rho1, hp.rho2))

            t0 = time.perf_counter()
            state.V = update_V(state.U, masks, hp.gamma, hp.threads)
            report.subproblem_times["V"] += time.perf_counter() - t0
            if track_lagrangian:
                lag_row.append(augmented_lagrangian(state, data, Y, hp.lam,
                                                    hp.gamma, hp.rho1, hp.rho2))

            t0 = time.perf_counter()
            state.Z = update_Z(state.U, state.M, state.Phi, state.Psi,
                               hp.rho1, hp.rho2)
            report.subproblem_times["Z"] += time.perf_counter() - t0
            if track_lagrangian:
                lag_row.append(augmented_lagrangian(state, data, Y, hp.lam,
                                                    hp.gamma, hp.rho1, hp.rho2))
                # (L before, after U, after P, after V, after Z, ||dU||^2)
                report.lagrangian_trace.append(tuple(lag_row) + (du_sq,))

            state.Phi, state.Psi = update_duals(state, hp.rho1, hp.rho2)

            for name, arr in (("U", state.U), ("V", state.V), ("M", state.M),
                              ("Z", state.Z), ("Phi", state.Phi),
                              ("Psi", state.Psi)):
                if not np.all(np.isfinite(arr)):
                    raise NumericalError(f"non-finite {name} iterate",
                                         iteration=t)

            phi_res, psi_res = primal_residuals(state)
            report.phi_residual_trace.append(phi_res)
            report.psi_residual_trace.append(psi_res)
            if track_dual_residual:
                report.dual_residual_trace.append(
                    dual_residual(state, Y, hp.lam, seed=hp.seed))
            if track_objective:
                report.objective_trace.append(
                    objective_svd((state.U, state.V), data, Y, hp.lam,
                                  hp.gamma).total)
            report.iterations = t + 1
            if max(phi_res ** 2, psi_res ** 2) <= hp.eps:
                report.termination = "tolerance_met"
                break

    report.warnings = [str(w.message) for w in caught]
    return state, report
