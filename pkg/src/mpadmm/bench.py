"""Benchmark harness: parameter sweeps over synthetic instances with
per-trial metrics and per-subproblem timings written as CSV."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import admm, baselines
from .data import Hyperparams, generate_synthetic
from .exceptions import ParameterError
from .objective import evaluate

CSV_COLUMNS = ["method", "n", "m", "k", "d", "seed", "objective", "err_l2",
               "r2", "fitted_rank", "time_ms", "t_U_ms", "t_V_ms", "t_P_ms",
               "t_Z_ms", "iters", "phi_res", "psi_res", "dual_res"]

METHOD_NAMES = ("admm", "iterative_svd", "soft_impute", "scaled_gd")


@dataclass
class SweepConfig:
    varying_parameter: str  # one of n, m, d, k
    values: list
    fixed: dict  # keys n, m, k, d
    trials: int
    methods: list
    hyper: Hyperparams
    miss_frac: float
    sigma: float
    base_seed: int
    soft_impute_tau: float = 1.0
    record_timings: bool = True

    def __post_init__(self):
        if self.varying_parameter not in ("n", "m", "d", "k"):
            raise ParameterError("varying_parameter must be one of n, m, d, k")
        if not self.values or any(v <= 0 for v in self.values):
            raise ParameterError("values must be non-empty and positive")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        unknown = set(self.methods) - set(METHOD_NAMES)
        if unknown or not self.methods:
            raise ParameterError(f"unknown methods: {sorted(unknown)}")
        for key in ("n", "m", "k", "d"):
            if key not in self.fixed:
                raise ParameterError(f"fixed parameter {key!r} missing")


@dataclass
class TrialRow:
    method: str
    n: int
    m: int
    k: int
    d: int
    seed: int
    objective: Optional[float] = None
    err_l2: Optional[float] = None
    r2: Optional[float] = None
    fitted_rank: Optional[int] = None
    time_ms: Optional[float] = None
    t_U_ms: Optional[float] = None
    t_V_ms: Optional[float] = None
    t_P_ms: Optional[float] = None
    t_Z_ms: Optional[float] = None
    iters: Optional[int] = None
    phi_res: Optional[float] = None
    psi_res: Optional[float] = None
    dual_res: Optional[float] = None
    error: bool = False

    def as_csv(self) -> list:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if name == "objective" and self.error:
                out.append("error")
            elif v is None:
                out.append("")
            elif isinstance(v, (int, np.integer)) or name in ("method",):
                out.append(str(v))
            else:
                out.append("%.10g" % v)
        return out


def trial_seed(base_seed: int, value_index: int, trial_index: int) -> int:
    return base_seed * 10 ** 6 + value_index * 10 ** 3 + trial_index


def run_trial(method: str, data, side, truth, hp: Hyperparams,
              soft_impute_tau: float, record_timings: bool) -> TrialRow:
    row = TrialRow(method=method, n=data.n, m=data.m, k=hp.k, d=side.d,
                   seed=hp.seed)
    if method == "admm":
        t0 = time.perf_counter()
        state, report = admm.solve(data, side, hp)
        elapsed = time.perf_counter() - t0
        X_hat = state.x_hat()
        row.iters = report.iterations
        if report.phi_residual_trace:
            row.phi_res = report.phi_residual_trace[-1]
            row.psi_res = report.psi_residual_trace[-1]
        if report.dual_residual_trace:
            row.dual_res = report.dual_residual_trace[-1]
        if record_timings:
            st = report.subproblem_times
            row.t_U_ms = 1e3 * st["U"]
            row.t_V_ms = 1e3 * st["V"]
            row.t_P_ms = 1e3 * st["P"]
            row.t_Z_ms = 1e3 * st["Z"]
            row.time_ms = 1e3 * elapsed
    else:
        if method == "iterative_svd":
            res = baselines.iterative_svd(data, hp.k)
        elif method == "soft_impute":
            res = baselines.soft_impute(data, soft_impute_tau, k_cap=hp.k)
        elif method == "scaled_gd":
            res = baselines.scaled_gd(data, side.Y, hp.lam, hp.gamma, hp.k)
        else:
            raise ParameterError(f"unknown method {method!r}")
        X_hat = res.X_hat
        row.iters = res.iterations
        if record_timings:
            row.time_ms = 1e3 * res.wall_time

    metrics = evaluate(X_hat, data, side.Y, truth.A_true, hp.lam, hp.gamma)
    row.objective = metrics.objective.total
    row.err_l2 = metrics.err_l2
    row.r2 = metrics.r2
    row.fitted_rank = metrics.fitted_rank
    return row


def run_sweep(config: SweepConfig, out_path) -> list:
    """Run the sweep, write the per-trial CSV and a per-(method, value)
    mean summary CSV; returns the summary as a list of dicts.

    A method failure is recorded as a row with 'error' in the objective
    column and the sweep continues.
    """
    rows = []
    cells = []  # (method, value) aligned with rows, for the summary
    for vi, value in enumerate(config.values):
        params = dict(config.fixed)
        params[config.varying_parameter] = int(value)
        n, m, k, d = params["n"], params["m"], params["k"], params["d"]
        for ti in range(config.trials):
            seed = trial_seed(config.base_seed, vi, ti)
            data, side, truth = generate_synthetic(
                n, m, k, d, config.miss_frac, config.sigma, seed)
            hp = replace(config.hyper, k=k, seed=seed)
            for method in config.methods:
                try:
                    row = run_trial(method, data, side, truth, hp,
                                    config.soft_impute_tau,
                                    config.record_timings)
                except Exception:
                    row = TrialRow(method=method, n=n, m=m, k=k, d=d,
                                   seed=seed, error=True)
                rows.append(row)
                cells.append((method, value))

    with open(out_path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())

    summary = _summarize(rows, cells)
    summary_path = str(out_path) + ".summary.csv"
    numeric = CSV_COLUMNS[6:]
    with open(summary_path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "value", "trials"] + numeric)
        for s in summary:
            line = [s["method"], str(s["value"]), str(s["trials"])]
            for col in numeric:
                v = s[col]
                line.append("" if v is None else "%.10g" % v)
            writer.writerow(line)
    return summary


def _summarize(rows, cells) -> list:
    order = []
    groups = {}
    for row, cell in zip(rows, cells):
        if cell not in groups:
            groups[cell] = []
            order.append(cell)
        groups[cell].append(row)
    numeric = CSV_COLUMNS[6:]
    summary = []
    for cell in order:
        good = [r for r in groups[cell] if not r.error]
        entry = {"method": cell[0], "value": cell[1], "trials": len(good)}
        for col in numeric:
            vals = [getattr(r, col) for r in good
                    if getattr(r, col) is not None]
            entry[col] = float(np.mean(vals)) if vals else None
        summary.append(entry)
    return summary
