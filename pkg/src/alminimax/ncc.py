"""Perturbation plus inexact proximal point for nonconvex-concave saddles.

The y-block gets a strong-concavity perturbation anchored at the start, the
x-block a prox-point regularization recentered every iteration; each
regularized subproblem is strongly convex-concave and is solved by the scc
layer to a shrinking tolerance.  The loop stops at the first iteration whose
primal displacement falls below eps / (4 * lip_grad).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .core import Array, OracleCounters, SolveTrace, as_vector
from .errors import InvalidParameter, IterationLimitExceeded, NumericalFailure
from .scc import SafeguardLimits, SccProblem, solve_scc
from .structures import FusedSaddle, SaddleStructure

DEFAULT_MAX_OUTER = 100_000


@dataclass
class NccProblem:
    """Smooth coupling oracle, concave in y, with declared smoothness.

    ``diam_y`` is the diameter of dom q; it scales the concavity
    perturbation and must be supplied (for box domains it is the diagonal).
    """

    grad: Callable[[Array, Array], tuple[Array, Array]]
    prox_p: Callable[[float, Array], Array]
    prox_q: Callable[[float, Array], Array]
    lip_grad: float
    diam_y: float
    structure: Optional[SaddleStructure] = None   # compiled-path description

    def validate(self):
        if self.lip_grad <= 0:
            raise InvalidParameter("lip_grad must be positive")
        if self.diam_y <= 0:
            raise InvalidParameter("diam_y must be positive")
        return self

    def instrumented(self, counters: OracleCounters) -> "NccProblem":
        grad, prox_p, prox_q = self.grad, self.prox_p, self.prox_q

        def counted_grad(x, y):
            counters.n_grad_f += 1
            return grad(x, y)

        def counted_prox_p(gamma, v):
            counters.n_prox_p += 1
            return prox_p(gamma, v)

        def counted_prox_q(gamma, v):
            counters.n_prox_q += 1
            return prox_q(gamma, v)

        return replace(self, grad=counted_grad, prox_p=counted_prox_p,
                       prox_q=counted_prox_q)


@dataclass
class NccConfig:
    """Target tolerance and subproblem schedule.

    eps_hat0 defaults to eps/2 and must lie in (0, eps/2]; subproblem k is
    solved to eps_hat0 / (k+1).  The anchor defaults to the start y.
    """

    eps: float
    eps_hat0: Optional[float] = None
    anchor: Optional[Array] = None
    max_outer: int = DEFAULT_MAX_OUTER
    scc_guards: Optional[SafeguardLimits] = None

    def validate(self):
        if self.eps <= 0:
            raise InvalidParameter("epsilon must be positive")
        if self.eps_hat0 is not None and not (0 < self.eps_hat0 <= self.eps / 2):
            raise InvalidParameter(
                "epsilon_hat_0 must lie in (0, epsilon/2]")
        return self

    def resolved_eps_hat0(self) -> float:
        return self.eps / 2.0 if self.eps_hat0 is None else self.eps_hat0


@dataclass
class NccResult:
    x: Array
    y: Array
    residual: float            # certificate of the final subproblem
    outer_iters: int
    displacement: float        # ||x_last - x_prev|| at termination
    eps_hat_last: float
    stat_bound_x: float        # eps_hat + 2 L ||dx||, valid x-residual bound
    stat_bound_y: float        # eps_hat + eps ||y - anchor|| / (2 diam_y)
    trace: SolveTrace
    counters: OracleCounters


def build_subproblem(prob: NccProblem, x_k: Array, anchor: Array,
                     eps: float) -> SccProblem:
    """Regularized saddle subproblem recentered at x_k.

    Adds lip_grad * ||x - x_k||^2 to the x-block and subtracts
    eps * ||y - anchor||^2 / (4 diam_y) from the y-block, giving curvature
    (lip_grad, eps/(2 diam_y)) and smoothness 3*lip_grad + eps/(2 diam_y).
    """
    lip = prob.lip_grad
    sigma_y = eps / (2.0 * prob.diam_y)
    base = prob.grad

    def grad(x, y):
        gx, gy = base(x, y)
        return gx + 2.0 * lip * (x - x_k), gy - sigma_y * (y - anchor)

    fused = None
    if prob.structure is not None:
        fused = FusedSaddle(saddle=prob.structure, shift_coef=2.0 * lip,
                            x_center=np.asarray(x_k, dtype=float).copy(),
                            pert_coef=sigma_y,
                            anchor=np.asarray(anchor, dtype=float).copy())
    return SccProblem(grad=grad, prox_p=prob.prox_p, prox_q=prob.prox_q,
                      sigma_x=lip, sigma_y=sigma_y,
                      lip_grad=3.0 * lip + sigma_y,
                      dim_x=x_k.size, dim_y=anchor.size, fused=fused)


def solve_ncc(prob: NccProblem, cfg: NccConfig, start: tuple[Array, Array],
              counters: Optional[OracleCounters] = None,
              trace: Optional[SolveTrace] = None) -> NccResult:
    """Drive the proximal-point loop to an eps-stationary point.

    Each subproblem is warm-started at the scaled previous iterate,
    z0 = -lip_grad * x_k (bit-identical scaling), y0 = y_k.  Raises
    IterationLimitExceeded with the best iterate when the outer cap hits.
    """
    prob.validate()
    cfg.validate()
    if counters is None:
        counters = OracleCounters()
        prob = prob.instrumented(counters)
    if trace is None:
        trace = SolveTrace(counters=counters)

    x = as_vector(start[0]).copy()
    y = as_vector(start[1]).copy()
    anchor = y.copy() if cfg.anchor is None else as_vector(cfg.anchor).copy()
    eps = cfg.eps
    eps_hat0 = cfg.resolved_eps_hat0()
    threshold = eps / (4.0 * prob.lip_grad)
    sub_log = trace.meta.setdefault("ncc_subproblems", [])

    last = None
    for k in range(cfg.max_outer):
        sub = build_subproblem(prob, x, anchor, eps)
        eps_hat_k = eps_hat0 / (k + 1.0)
        z0 = -sub.sigma_x * x
        res = solve_scc(sub, eps_hat_k, start=(z0, y),
                        guards=cfg.scc_guards, counters=counters, trace=trace)
        displacement = float(np.linalg.norm(res.x - x))
        sub_log.append({
            "outer_iter": k, "eps_hat": eps_hat_k, "z0": z0,
            "x_center": x.copy(), "x": res.x.copy(), "y": res.y.copy(),
            "scc_iters": res.outer_iters, "displacement": displacement,
            "residual": res.residual,
        })
        trace.record("ncc", k, inner_iter=res.outer_iters, eps_k=eps_hat_k,
                     residual_cert=res.residual)
        x, y = res.x, res.y
        last = res
        if displacement <= threshold:
            bound_x = eps_hat_k + 2.0 * prob.lip_grad * displacement
            bound_y = eps_hat_k + eps * float(np.linalg.norm(y - anchor)) \
                / (2.0 * prob.diam_y)
            # guaranteed by the termination rule and eps_hat0 <= eps/2;
            # a violation points at a wrong lip_grad or diam_y
            if bound_x > eps * (1.0 + 1e-9) or bound_y > eps * (1.0 + 1e-9):
                raise NumericalFailure(
                    "stationarity decomposition exceeded epsilon; "
                    "check lip_grad and diam_y")
            return NccResult(x=x, y=y, residual=res.residual,
                             outer_iters=k + 1, displacement=displacement,
                             eps_hat_last=eps_hat_k, stat_bound_x=bound_x,
                             stat_bound_y=bound_y, trace=trace,
                             counters=counters)
    raise IterationLimitExceeded(
        f"no displacement below {threshold:g} within {cfg.max_outer} "
        "outer iterations",
        x=x, y=y, residual=None if last is None else last.residual,
        trace=trace)
