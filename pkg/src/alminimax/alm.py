"""First-order augmented Lagrangian outer loop with safeguarded multipliers.

Each iteration warm-starts from whichever of the current iterate and a
near-feasible anchor has the smaller x-part AL value, solves the AL saddle
subproblem with the ncc layer to tolerance eps_k, then updates the
multipliers: the c-multiplier is projected onto a bounded nonnegative ball
(the safeguard), the d-multiplier clipped to the nonnegative orthant.  The
schedule eps_k = eps0 * tau^k, rho_k = 1/eps_k stops at the first eps_k <=
eps, after exactly ceil_plus((log eps - log eps0)/log tau) + 1 iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (Array, ConstrainedMinimaxProblem, MultiplierPair,
                   OracleCounters, ProblemConstants, SolveTrace, as_vector,
                   eval_al_x, instrument)
from .errors import InvalidInput, InvalidParameter, IterationLimitExceeded
from .kkt import KktResiduals, kkt_residuals
from .ncc import (DEFAULT_MAX_OUTER as NCC_DEFAULT_MAX_OUTER, NccConfig,
                  NccProblem, solve_ncc)
from .prox import positive_part, project_nonneg_ball
from .scc import SafeguardLimits
from .structures import SaddleStructure


@dataclass
class AlmConfig:
    """Outer-loop schedule, dual safeguard, and start data.

    eps in (0,1) is the target; eps0 in (tau*eps, 1] and tau in (0,1) set
    the schedule.  lam_cap is the radius of the safeguard ball for the
    c-multiplier.  x_nf must satisfy ||[c(x_nf)]_+|| <= sqrt(eps); when
    omitted it is produced by the projected-gradient near-feasibility
    finder.
    """

    eps: float
    tau: float = 0.5
    eps0: float = 1.0
    lam_cap: float = 10.0
    start: Optional[tuple[Array, Array]] = None
    lam_x0: Optional[Array] = None
    lam_y0: Optional[Array] = None
    x_nf: Optional[Array] = None
    ncc_max_outer: int = NCC_DEFAULT_MAX_OUTER
    scc_guards: Optional[SafeguardLimits] = None
    trace_phases: tuple = ("scc", "ncc", "alm")

    def validate(self):
        if not (0.0 < self.eps < 1.0):
            raise InvalidParameter("epsilon must lie in (0, 1)")
        if not (0.0 < self.tau < 1.0):
            raise InvalidParameter("tau must lie in (0, 1)")
        if not (self.tau * self.eps < self.eps0 <= 1.0):
            raise InvalidParameter("epsilon0 must lie in (tau*epsilon, 1]")
        if self.lam_cap <= 0:
            raise InvalidParameter("lambda_cap must be positive")
        return self


@dataclass
class AlmOutput:
    x: Array
    y: Array
    lam_x: Array              # safeguarded multiplier, ||lam_x|| <= lam_cap
    lam_y: Array
    tilde_lam_x: Array        # unsafeguarded certificate multiplier
    kkt: KktResiduals         # evaluated with (tilde_lam_x, lam_y)
    outer_iters: int
    eps_final: float
    rho_final: float
    trace: SolveTrace
    counters: OracleCounters
    history: list = field(default_factory=list)


def choose_init(prob: ConstrainedMinimaxProblem, x_k: Array, x_nf: Array,
                y_k: Array, lam_x: Array, rho: float) -> Array:
    """Warm-start rule: keep x_k unless the near-feasible anchor has a
    strictly smaller x-part AL value (ties keep x_k)."""
    if eval_al_x(prob, x_k, y_k, lam_x, rho) \
            <= eval_al_x(prob, x_nf, y_k, lam_x, rho):
        return x_k
    return x_nf


def lipschitz_Lk(consts: ProblemConstants, rho: float,
                 norm_lam_x: float, norm_lam_y: float) -> float:
    """Smoothness constant of the AL subproblem's smooth part."""
    return (consts.L_grad_f
            + rho * consts.L_c ** 2
            + rho * consts.c_hi * consts.L_grad_c
            + norm_lam_x * consts.L_grad_c
            + rho * consts.L_d ** 2
            + rho * consts.d_hi * consts.L_grad_d
            + norm_lam_y * consts.L_grad_d)


def al_subproblem(prob: ConstrainedMinimaxProblem, lam_x: Array, lam_y: Array,
                  rho: float, lip: float) -> NccProblem:
    """The AL saddle subproblem as a nonconvex-concave oracle bundle.

    g_x = grad_x f + Jc^T [lam_x + rho c]_+ - Jd_x^T [lam_y + rho d]_+
    g_y = grad_y f - Jd_y^T [lam_y + rho d]_+
    """
    has_c = prob.num_c > 0
    has_d = prob.num_d > 0

    def grad(x, y):
        gx, gy = prob.grad_f(x, y)
        if has_c:
            mult = np.maximum(lam_x + rho * prob.c_value(x), 0.0)
            gx = gx + prob.jac_c_t_apply(x, mult)
        if has_d:
            mult = np.maximum(lam_y + rho * prob.d_value(x, y), 0.0)
            jx, jy = prob.jac_d_t_apply(x, y, mult)
            gx = gx - jx
            gy = gy - jy
        return gx, gy

    structure = None
    if prob.structure is not None:
        structure = SaddleStructure(quad=prob.structure,
                                    lam_x=np.asarray(lam_x, float).copy(),
                                    lam_y=np.asarray(lam_y, float).copy(),
                                    rho=float(rho))
    return NccProblem(grad=grad, prox_p=prob.prox_p, prox_q=prob.prox_q,
                      lip_grad=lip, diam_y=prob.constants.diam_y,
                      structure=structure)


def update_multipliers(lam_x: Array, lam_y: Array, c_val: Array, d_val: Array,
                       rho: float, radius: float) -> MultiplierPair:
    """Safeguarded dual update: project the c-multiplier onto the radius
    ball intersected with the orthant, clip the d-multiplier at zero."""
    new_x = project_nonneg_ball(lam_x + rho * c_val, radius) \
        if lam_x.size else lam_x
    new_y = positive_part(lam_y + rho * d_val) if lam_y.size else lam_y
    return MultiplierPair(lam_x=new_x, lam_y=new_y)


def schedule_length(eps: float, eps0: float, tau: float) -> int:
    """Smallest K >= 0 with eps0 * tau^K <= eps."""
    value = (math.log(eps) - math.log(eps0)) / math.log(tau)
    return max(0, math.ceil(value))


def solve_alm(prob: ConstrainedMinimaxProblem, cfg: AlmConfig) -> AlmOutput:
    """Run the full augmented Lagrangian loop and certify the output.

    Returns the final primal pair, the safeguarded and certificate
    multipliers, and the six KKT residuals evaluated with the certificate
    pair.  A failed inner solve aborts the loop (the guarantees assume every
    subproblem is solved to its tolerance) and propagates with the partial
    trace attached.
    """
    prob.validate()
    cfg.validate()
    consts = prob.constants
    if consts is None or consts.diam_y is None:
        raise InvalidParameter("solve_alm needs problem constants with diam_y")

    if cfg.start is None:
        raise InvalidParameter("alm config needs a start point")
    x = as_vector(cfg.start[0]).copy()
    y = as_vector(cfg.start[1]).copy()

    if prob.num_c and cfg.lam_x0 is not None:
        lam_x = as_vector(cfg.lam_x0).copy()
    else:
        lam_x = np.zeros(prob.num_c)
    if prob.num_d and cfg.lam_y0 is not None:
        lam_y = as_vector(cfg.lam_y0).copy()
    else:
        lam_y = np.zeros(prob.num_d)
    MultiplierPair(lam_x, lam_y).validate(radius=cfg.lam_cap)

    # the near-feasible anchor is found (or verified) before any counting
    if cfg.x_nf is None:
        from .problems import find_near_feasible
        x_nf = find_near_feasible(prob, math.sqrt(cfg.eps), x0=x)
    else:
        x_nf = as_vector(cfg.x_nf).copy()
    if prob.num_c > 0:
        viol = float(np.linalg.norm(positive_part(prob.c_value(x_nf))))
        if viol > math.sqrt(cfg.eps):
            raise InvalidInput(
                f"x_nf violates ||[c]_+|| <= sqrt(eps): {viol:g}")

    counters = OracleCounters()
    inst = instrument(prob, counters)
    trace = SolveTrace(counters=counters, phases=cfg.trace_phases)
    history = trace.meta.setdefault("alm_iterations", [])

    k = 0
    tilde_lam_x = lam_x.copy()
    while True:
        eps_k = cfg.eps0 * cfg.tau ** k
        rho_k = 1.0 / eps_k
        lip_k = lipschitz_Lk(consts, rho_k, float(np.linalg.norm(lam_x)),
                             float(np.linalg.norm(lam_y)))
        x_init = choose_init(inst, x, x_nf, y, lam_x, rho_k)
        sub = al_subproblem(inst, lam_x, lam_y, rho_k, lip_k)
        ncc_cfg = NccConfig(eps=eps_k,
                            eps_hat0=eps_k / (2.0 * math.sqrt(rho_k)),
                            max_outer=cfg.ncc_max_outer,
                            scc_guards=cfg.scc_guards)
        try:
            res = solve_ncc(sub, ncc_cfg, start=(x_init, y),
                            counters=counters, trace=trace)
        except IterationLimitExceeded as exc:
            exc.trace = trace
            raise
        x, y = res.x, res.y

        c_val = inst.c_value(x) if prob.num_c else np.zeros(0)
        d_val = inst.d_value(x, y) if prob.num_d else np.zeros(0)
        tilde_lam_x = positive_part(lam_x + rho_k * c_val) \
            if prob.num_c else lam_x
        pair = update_multipliers(lam_x, lam_y, c_val, d_val, rho_k,
                                  cfg.lam_cap)
        lam_x, lam_y = pair.lam_x, pair.lam_y

        feas_c = float(np.linalg.norm(positive_part(c_val)))
        feas_d = float(np.linalg.norm(positive_part(d_val)))
        comp_c = abs(float(tilde_lam_x @ c_val)) if prob.num_c else 0.0
        comp_d = abs(float(lam_y @ d_val)) if prob.num_d else 0.0
        trace.record("alm", k, inner_iter=res.outer_iters, eps_k=eps_k,
                     rho_k=rho_k, residual_cert=res.residual,
                     feas_c=feas_c, feas_d=feas_d,
                     comp_c=comp_c, comp_d=comp_d)
        history.append({
            "outer_iter": k, "eps_k": eps_k, "rho_k": rho_k,
            "lip_k": lip_k,
            "norm_lam_x": float(np.linalg.norm(lam_x)),
            "min_lam_y": float(lam_y.min()) if lam_y.size else 0.0,
            "ncc_iters": res.outer_iters,
        })
        if eps_k <= cfg.eps:
            break
        k += 1

    bundle = kkt_residuals(inst, x, y, tilde_lam_x, lam_y)
    return AlmOutput(x=x, y=y, lam_x=lam_x, lam_y=lam_y,
                     tilde_lam_x=tilde_lam_x, kkt=bundle, outer_iters=k + 1,
                     eps_final=cfg.eps0 * cfg.tau ** k,
                     rho_final=1.0 / (cfg.eps0 * cfg.tau ** k),
                     trace=trace, counters=counters, history=history)
