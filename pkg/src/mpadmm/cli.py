"""Command-line interface: generate synthetic data, solve single
instances, run benchmark sweeps, and evaluate saved solutions.

Exit codes: 0 success, 1 parameter/parse error, 2 numerical or
convergence error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import admm, baselines
from .bench import SweepConfig, run_sweep
from .data import (Hyperparams, PartialMatrix, SideInfo, generate_synthetic,
                   load_dense_csv, load_partial, load_side_info,
                   save_dense_csv, save_partial, save_side_info)
from .exceptions import ConvergenceError, NumericalError, ParameterError, ParseError
from .objective import err_l2, fitted_rank, objective_svd, r_squared

DEFAULT_THREADS = min(os.cpu_count() or 1, 24)


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise _CliError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="mpadmm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--rank", "--k", dest="rank", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--miss-frac", type=float, default=0.9)
    g.add_argument("--sigma", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("solve", help="solve one instance from files")
    s.add_argument("--method", default="admm",
                   choices=["admm", "iterative-svd", "soft-impute",
                            "scaled-gd"])
    s.add_argument("--data", required=True, help="partial matrix file")
    s.add_argument("--side-info", help="side info CSV (required for admm)")
    s.add_argument("--truth", help="ground truth CSV, enables err_l2")
    s.add_argument("--rank", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--rho1", type=float, default=10.0)
    s.add_argument("--rho2", type=float, default=10.0)
    s.add_argument("--max-iter", type=int, default=20)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--tau", type=float, default=1.0,
                   help="soft-impute shrinkage threshold")
    s.add_argument("--threads", type=int, default=DEFAULT_THREADS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")

    w = sub.add_parser("sweep", help="run a benchmark sweep")
    w.add_argument("--config", required=True, help="key=value config file")
    w.add_argument("--out", help="overrides 'out' from the config file")

    e = sub.add_parser("eval", help="re-evaluate a saved solution")
    e.add_argument("--data", required=True)
    e.add_argument("--side-info", required=True)
    e.add_argument("--truth", help="ground truth CSV, enables err_l2")
    e.add_argument("--lambda", dest="lam", type=float, default=1.0)
    e.add_argument("--gamma", type=float, default=1.0)
    e.add_argument("--out", required=True,
                   help="directory holding U.csv / V.csv; metrics.csv is "
                        "(re)written there")
    return p


def _cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    data, side, truth = generate_synthetic(args.n, args.m, args.rank, args.d,
                                           args.miss_frac, args.sigma,
                                           args.seed)
    save_partial(data, os.path.join(args.out, "partial.txt"))
    save_side_info(side, os.path.join(args.out, "side_info.csv"))
    save_dense_csv(truth.A_true, os.path.join(args.out, "truth.csv"))
    print(f"wrote partial.txt, side_info.csv, truth.csv to {args.out}")
    return 0


def _write_metrics(path, X_hat, data, Y, lam, gamma, A_true=None):
    obj = objective_svd(X_hat, data, Y, lam, gamma)
    fields = [
        ("objective", obj.total), ("fit_term", obj.fit_term),
        ("side_term", obj.side_term), ("reg_term", obj.reg_term),
        ("r2", r_squared(X_hat, Y)), ("fitted_rank", fitted_rank(X_hat)),
    ]
    if A_true is not None:
        fields.append(("err_l2", err_l2(X_hat, A_true)))
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([name for name, _ in fields])
        writer.writerow(["%.17g" % v if isinstance(v, float) else str(v)
                         for _, v in fields])
    return dict(fields)


def _factor_dense(X_hat):
    """Exact factorization X_hat = U V^T through a compact SVD."""
    U, s, Vt = np.linalg.svd(X_hat, full_matrices=False)
    return U * s, Vt.T


def _cmd_solve(args) -> int:
    data = load_partial(args.data)
    if args.side_info:
        side = SideInfo(Y=load_dense_csv(args.side_info))
        if side.n != data.n:
            raise ParameterError("side info row count does not match data")
    elif args.method == "admm":
        raise ParameterError("--side-info is required for method admm")
    else:
        side = SideInfo(Y=np.zeros((data.n, 1)))
    os.makedirs(args.out, exist_ok=True)

    report_rows = []
    if args.method == "admm":
        hp = Hyperparams(k=args.rank, lam=args.lam, gamma=args.gamma,
                         rho1=args.rho1, rho2=args.rho2, eps=args.tol,
                         max_iters=args.max_iter, threads=args.threads,
                         seed=args.seed)
        state, report = admm.solve(data, side, hp)
        U_out, V_out = state.U, state.V
        X_hat = state.x_hat()
        for i in range(report.iterations):
            report_rows.append([
                str(i + 1),
                "%.17g" % report.phi_residual_trace[i],
                "%.17g" % report.psi_residual_trace[i],
                "%.17g" % report.dual_residual_trace[i],
                "%.17g" % report.objective_trace[i],
                report.termination,
            ])
        if not report_rows:  # converged before the first iteration
            report_rows.append(["0", "", "", "", "", report.termination])
    else:
        if args.method == "iterative-svd":
            res = baselines.iterative_svd(data, args.rank)
        elif args.method == "soft-impute":
            res = baselines.soft_impute(data, args.tau, k_cap=args.rank)
        else:
            res = baselines.scaled_gd(data, side.Y, args.lam, args.gamma,
                                      args.rank)
        X_hat = res.X_hat
        if res.U_f is not None:
            U_out, V_out = res.U_f, res.V_f
        else:
            U_out, V_out = _factor_dense(X_hat)
        report_rows.append([str(res.iterations), "", "", "", "",
                            res.termination])

    save_dense_csv(U_out, os.path.join(args.out, "U.csv"))
    save_dense_csv(V_out, os.path.join(args.out, "V.csv"))
    with open(os.path.join(args.out, "report.csv"), "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "phi_res", "psi_res", "dual_res",
                         "objective", "termination"])
        writer.writerows(report_rows)

    A_true = load_dense_csv(args.truth) if args.truth else None
    metrics = _write_metrics(os.path.join(args.out, "metrics.csv"), X_hat,
                             data, side.Y, args.lam, args.gamma, A_true)
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in metrics.items()))
    return 0


def _cmd_eval(args) -> int:
    data = load_partial(args.data)
    side = SideInfo(Y=load_dense_csv(args.side_info))
    U = load_dense_csv(os.path.join(args.out, "U.csv"))
    V = load_dense_csv(os.path.join(args.out, "V.csv"))
    if U.shape[0] != data.n or V.shape[0] != data.m or U.shape[1] != V.shape[1]:
        raise ParameterError("factor shapes do not match the data")
    X_hat = U @ V.T
    A_true = load_dense_csv(args.truth) if args.truth else None
    metrics = _write_metrics(os.path.join(args.out, "metrics.csv"), X_hat,
                             data, side.Y, args.lam, args.gamma, A_true)
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in metrics.items()))
    return 0


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise ParameterError(f"not a boolean: {text!r}")


def parse_sweep_config(path) -> tuple:
    """Parse a flat key=value sweep config; returns (SweepConfig, out path)."""
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", line=lineno)
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()

    try:
        vary = raw["vary"]
        values = [int(x) for x in raw["values"].split(",") if x.strip()]
        fixed = {key: int(raw[key]) for key in ("n", "m", "k", "d")}
        hyper = Hyperparams(
            k=fixed["k"],
            lam=float(raw.get("lambda", 1.0)),
            gamma=float(raw.get("gamma", 1.0)),
            rho1=float(raw.get("rho1", 10.0)),
            rho2=float(raw.get("rho2", 10.0)),
            eps=float(raw.get("tol", 1e-6)),
            max_iters=int(raw.get("max_iter", 20)),
            threads=int(raw.get("threads", DEFAULT_THREADS)),
            seed=int(raw.get("base_seed", 0)),
        )
        config = SweepConfig(
            varying_parameter=vary,
            values=values,
            fixed=fixed,
            trials=int(raw.get("trials", 1)),
            methods=[s.strip() for s in
                     raw.get("methods", "admm").split(",") if s.strip()],
            hyper=hyper,
            miss_frac=float(raw.get("miss_frac", 0.9)),
            sigma=float(raw.get("sigma", 0.0)),
            base_seed=int(raw.get("base_seed", 0)),
            soft_impute_tau=float(raw.get("tau", 1.0)),
            record_timings=_parse_bool(raw.get("record_timings", "true")),
        )
    except KeyError as exc:
        raise ParameterError(f"sweep config missing key {exc}") from exc
    except ValueError as exc:
        raise ParameterError(f"bad sweep config value: {exc}") from exc
    return config, raw.get("out")


def _cmd_sweep(args) -> int:
    config, out = parse_sweep_config(args.config)
    out = args.out or out
    if not out:
        raise ParameterError("no output path: pass --out or set out= in "
                             "the config")
    summary = run_sweep(config, out)
    print(f"wrote {out} and {out}.summary.csv ({len(summary)} summary rows)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_eval(args)
    except (_CliError, ParameterError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ConvergenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
