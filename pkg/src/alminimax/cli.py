"""Config-driven runner: solve an instance, verify certificates, and emit
traces, counters, bound reports, and plot files.

Commands
--------
solve --config cfg.json [--out DIR] [--emit-plot-data] [--report-bounds]
bounds --config cfg.json [--out DIR]
problems list

Exit codes: 0 certified success, 1 invalid config, 2 solver failure
(iteration limit or a failed certificate check).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds as bounds_mod
from . import kkt, problems
from .alm import AlmConfig, schedule_length, solve_alm
from .core import TRACE_COLUMNS, SolveTrace
from .errors import (InvalidInput, InvalidParameter, IterationLimitExceeded,
                     MissingConstant, NotFound)
from .ncc import NccConfig, solve_ncc
from .scc import SafeguardLimits, solve_scc

ENV_OUT_DIR = "ALMINIMAX_OUT"

_KNOWN_KEYS = {
    "problem", "solver", "epsilon", "epsilon_bar", "epsilon_hat_0",
    "tau", "epsilon0", "lambda_cap", "start", "start_x", "start_y",
    "seed", "max_outer", "max_inner", "out_dir", "report_bounds",
    "emit_plot_data",
}


class ConfigError(InvalidInput):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    problem: str
    solver: str
    epsilon: Optional[float] = None
    epsilon_bar: Optional[float] = None
    epsilon_hat_0: Optional[float] = None
    tau: float = 0.5
    epsilon0: float = 1.0
    lambda_cap: float = 10.0
    start: str = "default"
    start_x: Optional[list] = None
    start_y: Optional[list] = None
    seed: int = 0
    max_outer: Optional[int] = None
    max_inner: Optional[int] = None
    out_dir: Optional[str] = None
    report_bounds: bool = False
    emit_plot_data: bool = False
    overrides: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    """Parse the flat-JSON config; dotted ``problem.<param>`` keys override
    instance parameters."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"unreadable config file: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")

    overrides = {}
    plain = {}
    for key, value in raw.items():
        if key.startswith("problem."):
            overrides[key.split(".", 1)[1]] = value
        elif key in _KNOWN_KEYS:
            plain[key] = value
        else:
            raise ConfigError(key, "unknown config key")
    for required in ("problem", "solver"):
        if required not in plain:
            raise ConfigError(required, "missing required key")
    cfg = RunConfig(overrides=overrides, **plain)

    if cfg.solver not in ("scc", "ncc", "alm"):
        raise ConfigError("solver", "must be one of scc, ncc, alm")
    if cfg.solver == "scc":
        if cfg.epsilon_bar is None or cfg.epsilon_bar <= 0:
            raise ConfigError("epsilon_bar", "scc needs epsilon_bar > 0")
    else:
        if cfg.epsilon is None or cfg.epsilon <= 0:
            raise ConfigError("epsilon", f"{cfg.solver} needs epsilon > 0")
    if cfg.solver == "ncc" and cfg.epsilon_hat_0 is not None:
        if not (0 < cfg.epsilon_hat_0 <= cfg.epsilon / 2):
            raise ConfigError("epsilon_hat_0",
                              "must satisfy 0 < epsilon_hat_0 <= epsilon/2")
    if cfg.solver == "alm":
        if not (0 < cfg.epsilon < 1):
            raise ConfigError("epsilon", "alm needs epsilon in (0, 1)")
        if not (0 < cfg.tau < 1):
            raise ConfigError("tau", "must lie in (0, 1)")
        if not (cfg.tau * cfg.epsilon < cfg.epsilon0 <= 1.0):
            raise ConfigError("epsilon0", "must lie in (tau*epsilon, 1]")
        if cfg.lambda_cap <= 0:
            raise ConfigError("lambda_cap", "must be positive")
    if cfg.start not in ("default", "random"):
        raise ConfigError("start", "must be 'default' or 'random'")
    return cfg


def _resolve_out_dir(cfg: RunConfig, cli_out: Optional[str]) -> Path:
    out = cli_out or cfg.out_dir or os.environ.get(ENV_OUT_DIR) \
        or "alminimax_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolve_start(cfg: RunConfig, inst):
    if cfg.start_x is not None or cfg.start_y is not None:
        if cfg.start_x is None or cfg.start_y is None:
            raise ConfigError("start_x", "start_x and start_y go together")
        x0 = np.asarray(cfg.start_x, dtype=float)
        y0 = np.asarray(cfg.start_y, dtype=float)
    elif cfg.start == "random":
        rng = np.random.default_rng(cfg.seed)
        lo_x, hi_x = inst.box_x
        lo_y, hi_y = inst.box_y
        x0 = rng.uniform(lo_x, hi_x)
        y0 = rng.uniform(lo_y, hi_y)
    else:
        x0, y0 = inst.default_start
    p = inst.problem
    if x0.size != p.dim_x or y0.size != p.dim_y:
        raise ConfigError("start_x", "start dimensions do not match problem")
    return np.asarray(x0, float), np.asarray(y0, float)


def _floats(arr) -> list:
    return [float(v) for v in np.atleast_1d(arr)]


def _objective_report(inst, x, y) -> dict:
    """Objective value at the output; without value oracles for the
    nonsmooth terms only the smooth part is reported, and flagged so."""
    from .core import eval_objective
    prob = inst.problem
    has_values = prob.p_value is not None and prob.q_value is not None
    return {"value": eval_objective(prob, np.asarray(x), np.asarray(y)),
            "includes_nonsmooth_terms": bool(has_values)}


def write_trace_csv(trace: SolveTrace, path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            writer.writerow(["" if v is None else repr(v)
                             if isinstance(v, float) else v
                             for v in row.astuple()])


def write_plot_outputs(trace: SolveTrace, out_dir: Path) -> list[str]:
    """Residual-vs-operation-count series as CSV plus a rendered figure."""
    rows = [r for r in trace.rows if r.residual_cert is not None]
    plot_csv = out_dir / "plot_data.csv"
    with open(plot_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["total_oracle_evals", "n_grad_f", "n_grad_c",
                         "n_grad_d", "n_prox_p", "n_prox_q",
                         "residual_cert", "phase", "outer_iter"])
        for r in rows:
            total = r.n_grad_f + r.n_grad_c + r.n_grad_d \
                + r.n_prox_p + r.n_prox_q
            writer.writerow([total, r.n_grad_f, r.n_grad_c, r.n_grad_d,
                             r.n_prox_p, r.n_prox_q, repr(r.residual_cert),
                             r.phase, r.outer_iter])

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for phase, color in (("scc", "tab:blue"), ("ncc", "tab:orange"),
                         ("alm", "tab:red")):
        xs = [r.n_grad_f + r.n_grad_c + r.n_grad_d + r.n_prox_p + r.n_prox_q
              for r in rows if r.phase == phase]
        ys = [r.residual_cert for r in rows if r.phase == phase]
        if xs:
            ax.semilogy(xs, ys, ".", ms=3, color=color, label=phase)
    ax.set_xlabel("cumulative oracle evaluations")
    ax.set_ylabel("certified residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    plot_png = out_dir / "residual_vs_ops.png"
    fig.savefig(plot_png, dpi=130)
    plt.close(fig)
    return [str(plot_csv), str(plot_png)]


def _guards(cfg: RunConfig) -> SafeguardLimits:
    return SafeguardLimits(max_outer=cfg.max_outer, max_inner=cfg.max_inner)


def bound_report(cfg: RunConfig, inst, start_x) -> dict:
    """Evaluate the bound formulas for the configured solver layer; missing
    constants are listed and the rest of the report still emitted."""
    report: dict = {"solver": cfg.solver, "missing": []}
    consts = inst.problem.constants
    try:
        if cfg.solver == "scc":
            out = bounds_mod.scc_bounds(bounds_mod.SccBoundInputs(
                sigma_x=inst.sigma_x, sigma_y=inst.sigma_y,
                lip_grad=consts.L_grad_f, eps_bar=cfg.epsilon_bar,
                diam_x=consts.diam_x, diam_y=consts.diam_y,
                h_star=inst.h_star, h_low=inst.h_low))
            report["scc"] = {"delta": out.delta, "potential0": out.potential0,
                             "max_outer": out.max_outer,
                             "max_oracle": out.max_oracle}
        elif cfg.solver == "ncc":
            eps_hat0 = cfg.epsilon_hat_0 if cfg.epsilon_hat_0 is not None \
                else cfg.epsilon / 2
            h_start = None if inst.inner_max_value is None \
                else inst.inner_max_value(start_x)
            out = bounds_mod.ncc_bounds(bounds_mod.NccBoundInputs(
                lip_grad=consts.L_grad_f, eps=cfg.epsilon, eps_hat0=eps_hat0,
                diam_x=consts.diam_x, diam_y=consts.diam_y,
                h_start_max=h_start, h_star=inst.h_star, h_low=inst.h_low))
            report["ncc"] = {"alpha": out.alpha, "delta": out.delta,
                             "max_outer": out.max_outer,
                             "max_oracle": out.max_oracle}
        else:
            inp = bounds_mod.AlmBoundInputs(
                constants=consts, eps=cfg.epsilon, eps0=cfg.epsilon0,
                tau=cfg.tau, lam_cap=cfg.lambda_cap)
            out = bounds_mod.alm_bounds(inp)
            thresholds = bounds_mod.kkt_thresholds(
                consts, cfg.epsilon, cfg.epsilon0, cfg.lambda_cap)
            cond_ok = bounds_mod.check_eps_condition(inp)
            report["alm"] = {
                "lip": out.lip, "alpha": out.alpha, "delta": out.delta,
                "log_cap": out.log_cap, "log_cap_raw": out.log_cap_raw,
                "subproblem_cap": out.subproblem_cap,
                "outer_iters": out.outer_iters,
                "max_oracle": out.max_oracle,
                "dual_radius": out.dual_radius,
                "kkt_thresholds": thresholds.as_dict(),
                "eps_condition_ok": cond_ok,
            }
            if not cond_ok:
                report["advisory"] = ("epsilon too large: the KKT quality "
                                      "constants are not guaranteed")
    except MissingConstant as exc:
        report["missing"].append(exc.name)
    return report


def run(config_path, out_dir=None, emit_plot_data=False,
        report_bounds=False) -> int:
    """Execute a solve config; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        inst = problems.registry(cfg.problem, **cfg.overrides)
        x0, y0 = _resolve_start(cfg, inst)
    except (ConfigError, InvalidParameter, InvalidInput, NotFound,
            TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    out_path = _resolve_out_dir(cfg, out_dir)
    emit_plot_data = emit_plot_data or cfg.emit_plot_data
    report_bounds = report_bounds or cfg.report_bounds

    report: dict = {
        "problem": cfg.problem,
        "problem_params": inst.params,
        "solver": cfg.solver,
        "config": {k: v for k, v in vars(cfg).items() if k != "overrides"},
    }
    exit_code = 0
    trace = None
    try:
        if cfg.solver == "scc":
            result = _run_scc(cfg, inst, x0, y0, report)
        elif cfg.solver == "ncc":
            result = _run_ncc(cfg, inst, x0, y0, report)
        else:
            result = _run_alm(cfg, inst, x0, y0, report)
        trace = result
    except IterationLimitExceeded as exc:
        report["exit"] = "iteration_limit"
        report["message"] = str(exc)
        if exc.x is not None:
            report["point"] = {"x": _floats(exc.x),
                               "y": _floats(exc.y) if exc.y is not None else None}
        if exc.residual is not None:
            report["best_residual"] = float(exc.residual)
        trace = exc.trace
        exit_code = 2
    except (InvalidParameter, InvalidInput) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1

    if exit_code == 0 and not report.get("certified", False):
        report["exit"] = "not_certified"
        exit_code = 2
    elif exit_code == 0:
        report["exit"] = "certified"

    if report_bounds:
        report["bounds"] = bound_report(cfg, inst, x0)
    if trace is not None:
        report["counters"] = trace.counters.as_dict()
        write_trace_csv(trace, out_path / "trace.csv")
        if emit_plot_data:
            report["plots"] = write_plot_outputs(trace, out_path)
    with open(out_path / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"{cfg.solver} on {cfg.problem}: {report['exit']} "
          f"(outputs in {out_path})")
    return exit_code


def _run_scc(cfg, inst, x0, y0, report) -> SolveTrace:
    prob = inst.scc_problem()
    result = solve_scc(prob, cfg.epsilon_bar,
                       start=(-prob.sigma_x * x0, y0), guards=_guards(cfg))
    # re-verify the certificate from scratch at the stored points
    recomputed = _recompute_scc_residual(prob, result)
    certified = (result.residual <= cfg.epsilon_bar
                 and abs(recomputed - result.residual)
                 <= 1e-12 * max(1.0, result.residual))
    report.update({
        "point": {"x": _floats(result.x), "y": _floats(result.y)},
        "objective": _objective_report(inst, result.x, result.y),
        "pre_point": {"x": _floats(result.x_pre), "y": _floats(result.y_pre)},
        "residual": result.residual,
        "residual_recomputed": recomputed,
        "outer_iterations": result.outer_iters,
        "certified": bool(certified),
        "checks": {"residual_below_eps_bar": result.residual <= cfg.epsilon_bar,
                   "certificate_reproducible": abs(recomputed - result.residual)
                   <= 1e-12 * max(1.0, result.residual)},
    })
    return result.trace


def _recompute_scc_residual(prob, result) -> float:
    gx, gy = prob.grad(result.x_pre, result.y_pre)
    gxt, gyt = prob.grad(result.x, result.y)
    zeta_bar = min(prob.sigma_x, prob.sigma_y) / prob.lip_grad ** 2
    rx = (result.x_pre - result.x) / zeta_bar - (gx - gxt)
    ry = (result.y - result.y_pre) / zeta_bar - (gy - gyt)
    return math.hypot(float(np.linalg.norm(rx)), float(np.linalg.norm(ry)))


def _run_ncc(cfg, inst, x0, y0, report) -> SolveTrace:
    if inst.problem.num_c or inst.problem.num_d:
        raise InvalidParameter(
            "the ncc layer ignores constraints; run solver=alm instead")
    prob = inst.ncc_problem()
    ncc_cfg = NccConfig(eps=cfg.epsilon, eps_hat0=cfg.epsilon_hat_0,
                        max_outer=cfg.max_outer or 100_000,
                        scc_guards=SafeguardLimits(max_inner=cfg.max_inner))
    result = solve_ncc(prob, ncc_cfg, start=(x0, y0))
    cert = kkt.certify_stationarity(prob.grad, prob.prox_p, prob.prox_q,
                                    prob.lip_grad, result.x, result.y)
    threshold = cfg.epsilon / (4.0 * prob.lip_grad)
    certified = (cert.residual <= 3.0 * cfg.epsilon
                 and result.displacement <= threshold)
    report.update({
        "point": {"x": _floats(result.x), "y": _floats(result.y)},
        "objective": _objective_report(inst, result.x, result.y),
        "outer_iterations": result.outer_iters,
        "displacement": result.displacement,
        "displacement_threshold": threshold,
        "recertified_residual": cert.residual,
        "stationarity_bounds": {"x": result.stat_bound_x,
                                "y": result.stat_bound_y},
        "certified": bool(certified),
        "checks": {"displacement_rule": result.displacement <= threshold,
                   "recertified_within_3eps": cert.residual <= 3 * cfg.epsilon},
    })
    return result.trace


def _run_alm(cfg, inst, x0, y0, report) -> SolveTrace:
    alm_cfg = AlmConfig(eps=cfg.epsilon, tau=cfg.tau, eps0=cfg.epsilon0,
                        lam_cap=cfg.lambda_cap, start=(x0, y0),
                        x_nf=inst.default_x_nf,
                        scc_guards=SafeguardLimits(max_inner=cfg.max_inner))
    out = solve_alm(inst.problem, alm_cfg)
    consts = inst.problem.constants
    checks = {"outer_iterations_exact":
              out.outer_iters == schedule_length(cfg.epsilon, cfg.epsilon0,
                                                 cfg.tau) + 1,
              "stationarity_x": out.kkt.stat_x <= 3 * cfg.epsilon,
              "stationarity_y": out.kkt.stat_y <= 3 * cfg.epsilon}
    try:
        thr = bounds_mod.kkt_thresholds(consts, cfg.epsilon, cfg.epsilon0,
                                        cfg.lambda_cap)
        checks.update({
            "feasibility_c": out.kkt.feas_c <= thr.feas_c,
            "complementarity_c": out.kkt.comp_c <= thr.comp_c,
            "feasibility_d": out.kkt.feas_d <= thr.feas_d,
            "complementarity_d": out.kkt.comp_d <= thr.comp_d,
        })
        report["kkt_thresholds"] = thr.as_dict()
    except MissingConstant as exc:
        report["kkt_thresholds_missing"] = exc.name
    report.update({
        "point": {"x": _floats(out.x), "y": _floats(out.y)},
        "objective": _objective_report(inst, out.x, out.y),
        "multipliers": {"lam_x": _floats(out.lam_x),
                        "lam_y": _floats(out.lam_y),
                        "lam_x_certificate": _floats(out.tilde_lam_x)},
        "residuals": out.kkt.as_dict(),
        "outer_iterations": out.outer_iters,
        "eps_final": out.eps_final,
        "rho_final": out.rho_final,
        "certified": bool(all(checks.values())),
        "checks": checks,
    })
    return out.trace


def run_bounds(config_path, out_dir=None) -> int:
    try:
        cfg = load_config(config_path)
        inst = problems.registry(cfg.problem, **cfg.overrides)
        x0, _ = _resolve_start(cfg, inst)
    except (ConfigError, InvalidParameter, InvalidInput, NotFound,
            TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    report = bound_report(cfg, inst, x0)
    out_path = _resolve_out_dir(cfg, out_dir)
    with open(out_path / "bounds.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(json.dumps(report, indent=2))
    return 0


def list_problems() -> int:
    for name in problems.available():
        inst = problems.registry(name)
        p = inst.problem
        print(f"{name}: dim_x={p.dim_x} dim_y={p.dim_y} "
              f"num_c={p.num_c} num_d={p.num_d} - {inst.description}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alminimax",
        description="constrained minimax solves with certified residuals")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a solve from a config file")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--emit-plot-data", action="store_true")
    p_solve.add_argument("--report-bounds", action="store_true")

    p_bounds = sub.add_parser("bounds", help="evaluate the bound formulas")
    p_bounds.add_argument("--config", required=True)
    p_bounds.add_argument("--out", default=None)

    p_problems = sub.add_parser("problems", help="inspect the registry")
    p_problems.add_argument("action", choices=["list"])

    args = parser.parse_args(argv)
    if args.command == "solve":
        return run(args.config, out_dir=args.out,
                   emit_plot_data=args.emit_plot_data,
                   report_bounds=args.report_bounds)
    if args.command == "bounds":
        return run_bounds(args.config, out_dir=args.out)
    return list_problems()


if __name__ == "__main__":
    sys.exit(main())
