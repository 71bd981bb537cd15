"""Saddle solver for strongly-convex-strongly-concave problems.

An accelerated dual-extrapolation scheme: each outer iteration solves a
regularized prox-point inclusion by an inner extrapolated splitting loop,
then takes momentum steps in the scaled dual variable z = -sigma_x * x and
in y.  Every outer iteration ends with a forward-backward splitting step
whose displacement yields a certified upper bound on the subdifferential
distance at the candidate output; the solver stops as soon as that
certificate reaches the target eps_bar.

Oracle accounting: with T inner-loop condition evaluations in an outer
iteration, the gradient oracle is invoked exactly 2T + 3 times (one anchor
evaluation, one per condition check, one per executed loop body, one for the
averaged dual update, and two for the termination certificate); the prox
pair is invoked T + 1 times each.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .core import Array, OracleCounters, SolveTrace, TraceRow, as_vector
from .errors import InvalidParameter, IterationLimitExceeded, NumericalFailure
from .structures import FusedSaddle

GradFn = Callable[[Array, Array], tuple[Array, Array]]

# per-solve cap on recorded rows for the compiled path; reachable only by
# pathological safeguard settings
_FUSED_ROWS_CAP = 1 << 18


@dataclass
class SccProblem:
    """Smooth saddle oracle with declared curvature and smoothness.

    ``grad`` returns both partial gradients of the smooth coupling; the
    nonsmooth terms enter through the prox oracles only.
    """

    grad: GradFn
    prox_p: Callable[[float, Array], Array]
    prox_q: Callable[[float, Array], Array]
    sigma_x: float          # strong convexity modulus in x
    sigma_y: float          # strong concavity modulus in y
    lip_grad: float         # smoothness constant of the coupling
    dim_x: Optional[int] = None   # only needed for the default start
    dim_y: Optional[int] = None
    fused: Optional[FusedSaddle] = None   # enables the compiled solver path

    def validate(self):
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise InvalidParameter("curvature moduli must be positive")
        if self.lip_grad < max(self.sigma_x, self.sigma_y):
            raise InvalidParameter(
                "smoothness constant must dominate the curvature moduli")
        return self

    def instrumented(self, counters: OracleCounters) -> "SccProblem":
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


@dataclass(frozen=True)
class SccParams:
    """Derived step and momentum constants.

    alpha    = min{1, sqrt(8 sigma_y / sigma_x)}
    eta_z    = sigma_x / 2
    eta_y    = min{1/(2 sigma_y), 4/(alpha sigma_x)}
    zeta     = 1 / (2 sqrt5 (1 + 8 L / sigma_x))
    gamma_x  = gamma_y = 8 / sigma_x
    zeta_bar = min{sigma_x, sigma_y} / L^2      (certificate step size)
    beta_t   = 2 / (t + 3)
    """

    alpha: float
    eta_z: float
    eta_y: float
    zeta: float
    gamma_x: float
    gamma_y: float
    zeta_bar: float

    @staticmethod
    def beta(t: int) -> float:
        return 2.0 / (t + 3.0)


def make_params(sigma_x: float, sigma_y: float, lip_grad: float) -> SccParams:
    if sigma_x <= 0 or sigma_y <= 0 or lip_grad <= 0:
        raise InvalidParameter("moduli and smoothness must be positive")
    alpha = min(1.0, math.sqrt(8.0 * sigma_y / sigma_x))
    return SccParams(
        alpha=alpha,
        eta_z=sigma_x / 2.0,
        eta_y=min(1.0 / (2.0 * sigma_y), 4.0 / (alpha * sigma_x)),
        zeta=1.0 / (2.0 * math.sqrt(5.0) * (1.0 + 8.0 * lip_grad / sigma_x)),
        gamma_x=8.0 / sigma_x,
        gamma_y=8.0 / sigma_x,
        zeta_bar=min(sigma_x, sigma_y) / lip_grad ** 2,
    )


@dataclass
class SafeguardLimits:
    """Iteration caps; the analysis loops are unbounded in code terms.

    None picks generous defaults derived from the problem constants: the
    inner cap is ten times the worst-case inner-loop length, the outer cap
    ten times a contraction-count estimate with unit initial potential.
    """

    max_outer: Optional[int] = None
    max_inner: Optional[int] = None

    def resolved(self, prob: SccProblem, params: SccParams,
                 eps_bar: float) -> tuple[int, int]:
        max_inner = self.max_inner
        if max_inner is None:
            max_inner = 10 * math.ceil(
                96.0 * math.sqrt(2.0) * (1.0 + 8.0 * prob.lip_grad / prob.sigma_x))
        max_outer = self.max_outer
        if max_outer is None:
            rate = max(2.0 / params.alpha,
                       params.alpha * prob.sigma_x / (4.0 * prob.sigma_y))
            scale = 4.0 * max(params.eta_z / prob.sigma_x ** 2, params.eta_y) \
                * (1.0 / params.zeta_bar + prob.lip_grad) ** 2
            log_term = max(1.0, math.log(max(scale, 1.0)) + 2.0 * math.log(max(1.0, 1.0 / eps_bar)))
            max_outer = 10 * (math.ceil(rate * log_term) + 10)
        return int(max_outer), int(max_inner)


@dataclass
class SccState:
    """Outer-loop state; z tracks the scaled dual variable -sigma_x * x."""

    k: int
    z: Array
    y: Array
    z_f: Array
    y_f: Array


@dataclass
class SccResult:
    x: Array                 # certified output point (post-FBS)
    y: Array
    x_pre: Array             # the pre-FBS pair the certificate was formed at
    y_pre: Array
    residual: float          # certified stationarity residual at (x, y)
    outer_iters: int
    trace: SolveTrace
    counters: OracleCounters


def hat_grad(prob: SccProblem, x: Array, y: Array) -> tuple[Array, Array]:
    """Gradient of the de-regularized coupling: subtract the curvature terms."""
    gx, gy = prob.grad(x, y)
    return gx - prob.sigma_x * x, gy + prob.sigma_y * y


def a_field(prob: SccProblem, params: SccParams, z_g: Array, y_g: Array,
            x: Array, y: Array) -> tuple[Array, Array]:
    """The regularized prox-point field anchored at (z_g, y_g)."""
    hx, hy = hat_grad(prob, x, y)
    if not (np.all(np.isfinite(hx)) and np.all(np.isfinite(hy))):
        raise NumericalFailure("non-finite gradient in saddle field")
    ax = hx + prob.sigma_x * (x - z_g / prob.sigma_x) / 2.0
    ay = -hy + prob.sigma_y * y + prob.sigma_x * (y - y_g) / 8.0
    return ax, ay


def inner_loop_done(params: SccParams, ax, bx, ay, by,
                    x, y, x_anchor, y_anchor) -> bool:
    """True when the inner loop may stop (the continue-condition fails).

    The loop continues while the weighted field residual strictly exceeds
    the weighted displacement from the anchor; ties stop the loop.
    """
    rx = ax + bx
    ry = ay + by
    lhs = params.gamma_x * float(rx @ rx) + params.gamma_y * float(ry @ ry)
    dx = x - x_anchor
    dy = y - y_anchor
    rhs = float(dx @ dx) / params.gamma_x + float(dy @ dy) / params.gamma_y
    return not (lhs > rhs)


_EPS_FLOOR = (64.0 * np.finfo(float).eps) ** 2


def _below_roundoff_floor(params: SccParams, ax, bx, ay, by,
                          x, y, x_a, y_a, sx, sy) -> bool:
    """True when the weighted field residual sits below the cancellation
    noise of the quantities it was assembled from."""
    rx = ax + bx
    ry = ay + by
    lhs = params.gamma_x * float(rx @ rx) + params.gamma_y * float(ry @ ry)
    scale_x = (float(np.linalg.norm(x)) + float(np.linalg.norm(x_a))) / sx \
        + float(np.linalg.norm(ax)) + float(np.linalg.norm(bx))
    scale_y = (float(np.linalg.norm(y)) + float(np.linalg.norm(y_a))) / sy \
        + float(np.linalg.norm(ay)) + float(np.linalg.norm(by))
    floor = _EPS_FLOOR * (params.gamma_x * scale_x ** 2
                          + params.gamma_y * scale_y ** 2)
    return lhs <= floor


def _certificate(prob: SccProblem, zeta_bar: float, x: Array, y: Array):
    """FBS step at (x, y) plus the displacement-based residual bound."""
    gx, gy = prob.grad(x, y)
    x_t = prob.prox_p(zeta_bar, x - zeta_bar * gx)
    y_t = prob.prox_q(zeta_bar, y + zeta_bar * gy)
    gxt, gyt = prob.grad(x_t, y_t)
    rx = (x - x_t) / zeta_bar - (gx - gxt)
    ry = (y_t - y) / zeta_bar - (gy - gyt)
    residual = math.sqrt(float(rx @ rx) + float(ry @ ry))
    return x_t, y_t, residual


def outer_step(state: SccState, prob: SccProblem, params: SccParams,
               max_inner: int) -> tuple[SccState, Array, int]:
    """One outer iteration: inner splitting loop plus the momentum updates.

    Returns the new state, the primal candidate x^{k+1} = -z^{k+1}/sigma_x,
    and the number of inner-loop condition evaluations.
    """
    sigma_x = prob.sigma_x
    sigma_y = prob.sigma_y
    alpha = params.alpha
    sx = params.zeta * params.gamma_x
    sy = params.zeta * params.gamma_y

    z_g = alpha * state.z + (1.0 - alpha) * state.z_f
    y_g = alpha * state.y + (1.0 - alpha) * state.y_f

    # anchor point and the initial prox pair with its implicit subgradients
    x_a = -z_g / sigma_x
    y_a = y_g
    ax, ay = a_field(prob, params, z_g, y_g, x_a, y_a)
    x0 = prob.prox_p(sx, x_a - sx * ax)
    y0 = prob.prox_q(sy, y_a - sy * ay)
    bx = (x_a - sx * ax - x0) / sx
    by = (y_a - sy * ay - y0) / sy

    x_t, y_t = x0, y0
    t = 0
    checks = 0
    while True:
        ax, ay = a_field(prob, params, z_g, y_g, x_t, y_t)
        checks += 1
        if inner_loop_done(params, ax, bx, ay, by, x_t, y_t, x_a, y_a):
            break
        if _below_roundoff_floor(params, ax, bx, ay, by, x_t, y_t,
                                 x_a, y_a, sx, sy):
            # the strict test can stall in finite precision at a clipped
            # fixed point: the field residual bottoms out at cancellation
            # noise while the displacement is exactly zero; once the
            # residual is below the noise floor of its own computation no
            # further digits are obtainable, so stop
            break
        if t >= max_inner:
            raise IterationLimitExceeded(
                f"inner loop exceeded {max_inner} iterations", x=x_t, y=y_t)
        beta = params.beta(t)
        xe = x_t + beta * (x0 - x_t)
        ye = y_t + beta * (y0 - y_t)
        x_half = xe - sx * (ax + bx)
        y_half = ye - sy * (ay + by)
        axh, ayh = a_field(prob, params, z_g, y_g, x_half, y_half)
        x_t = prob.prox_p(sx, xe - sx * axh)
        y_t = prob.prox_q(sy, ye - sy * ayh)
        bx = (xe - sx * axh - x_t) / sx
        by = (ye - sy * ayh - y_t) / sy
        t += 1

    # averaged dual pair from the final inner point, then momentum updates
    hgx, hgy = hat_grad(prob, x_t, y_t)
    z_f = hgx + bx
    w_f = -hgy + by
    z = state.z + (params.eta_z / sigma_x) * (z_f - state.z) \
        - params.eta_z * (x_t + z_f / sigma_x)
    y = state.y + params.eta_y * sigma_y * (y_t - state.y) \
        - params.eta_y * (w_f + sigma_y * y_t)
    new_state = SccState(k=state.k + 1, z=z, y=y, z_f=z_f, y_f=y_t)
    return new_state, -z / sigma_x, checks


def solve_scc(prob: SccProblem, eps_bar: float,
              start: Optional[tuple[Array, Array]] = None,
              guards: Optional[SafeguardLimits] = None,
              counters: Optional[OracleCounters] = None,
              trace: Optional[SolveTrace] = None) -> SccResult:
    """Drive the saddle solver to a certified eps_bar-stationary point.

    Parameters
    ----------
    prob : SccProblem
        Oracle bundle.  When ``counters`` is given the oracles are assumed to
        be instrumented already; otherwise fresh counters are attached here.
    eps_bar : float
        Target for the certified stationarity residual.
    start : (z0, y0), optional
        Initial scaled-dual pair with z0 in -sigma_x * dom p and y0 in dom q.
        Defaults to z0 = -sigma_x * prox_p(1, 0), y0 = prox_q(1, 0).
    guards : SafeguardLimits, optional
        Outer/inner iteration caps; exceeded caps raise
        IterationLimitExceeded carrying the best certified point so far.

    Returns
    -------
    SccResult with the certified point, its residual, and the solve trace.
    """
    prob.validate()
    if eps_bar <= 0:
        raise InvalidParameter("eps_bar must be positive")
    if counters is None:
        counters = OracleCounters()
        prob = prob.instrumented(counters)
    if trace is None:
        trace = SolveTrace(counters=counters)
    params = make_params(prob.sigma_x, prob.sigma_y, prob.lip_grad)
    max_outer, max_inner = (guards or SafeguardLimits()).resolved(
        prob, params, eps_bar)

    if start is None:
        if prob.dim_x is None or prob.dim_y is None:
            raise InvalidParameter(
                "default start needs dim_x/dim_y on the problem")
        # membership in -sigma_x*dom p and dom q guaranteed by the prox
        z0 = -prob.sigma_x * prob.prox_p(1.0, np.zeros(prob.dim_x))
        y0 = prob.prox_q(1.0, np.zeros(prob.dim_y))
    else:
        z0, y0 = start
    z0 = as_vector(z0).copy()
    y0 = as_vector(y0).copy()

    if prob.fused is not None and _kernels.HAVE_NUMBA:
        return _solve_scc_fused(prob, eps_bar, z0, y0, max_outer, max_inner,
                                counters, trace)

    state = SccState(k=0, z=z0, y=y0, z_f=z0.copy(), y_f=y0.copy())
    best = None
    for k in range(max_outer):
        try:
            state, x_next, checks = outer_step(state, prob, params, max_inner)
        except IterationLimitExceeded as exc:
            exc.trace = trace
            if best is not None:
                exc.x, exc.y, exc.residual = best
            raise
        x_tilde, y_tilde, residual = _certificate(
            prob, params.zeta_bar, x_next, state.y)
        trace.record("scc", k, inner_iter=checks, eps_k=eps_bar,
                     residual_cert=residual)
        if best is None or residual < best[2]:
            best = (x_tilde, y_tilde, residual)
        if residual <= eps_bar:
            return SccResult(x=x_tilde, y=y_tilde, x_pre=x_next,
                             y_pre=state.y, residual=residual,
                             outer_iters=k + 1, trace=trace,
                             counters=counters)
    raise IterationLimitExceeded(
        f"no certified point within {max_outer} outer iterations",
        x=best[0], y=best[1], residual=best[2], trace=trace)


def _solve_scc_fused(prob: SccProblem, eps_bar: float, z0: Array, y0: Array,
                     max_outer: int, max_inner: int,
                     counters: OracleCounters, trace: SolveTrace) -> SccResult:
    """Run the compiled kernel and replay its accounting into the shared
    counters and trace, reproducing the generic path's bookkeeping."""
    rows_cap = _FUSED_ROWS_CAP if "scc" in trace.phases else 0
    (status, outers, total_checks, checks, resid,
     x_out, y_out, xpre, ypre, best_res, final_res) = _kernels.run_fused_scc(
        prob.fused, prob.sigma_x, prob.sigma_y, prob.lip_grad,
        z0, y0, eps_bar, max_outer, max_inner, rows_cap)

    completed = outers - (1 if status == _kernels.STATUS_INNER_LIMIT else 0)
    grads = 2 * total_checks + 3 * completed
    proxes = total_checks + completed
    quad = prob.fused.saddle.quad
    counters.n_grad_f += grads
    if quad.num_c > 0:
        counters.n_grad_c += grads
    if quad.num_d > 0:
        counters.n_grad_d += grads
    counters.n_prox_p += proxes
    counters.n_prox_q += proxes

    if rows_cap:
        # rebuild per-iteration rows with cumulative counters from the
        # structural accounting: 2T+3 gradients and T+1 proxes per outer
        base_f = counters.n_grad_f - grads
        base_c = counters.n_grad_c - (grads if quad.num_c > 0 else 0)
        base_p = counters.n_prox_p - proxes
        base_q = counters.n_prox_q - proxes
        base_d = counters.n_grad_d - (grads if quad.num_d > 0 else 0)
        cum_checks = 0
        now = (time.perf_counter() - trace.started) * 1e3
        for k in range(min(completed, checks.size)):
            cum_checks += int(checks[k])
            g = 2 * cum_checks + 3 * (k + 1)
            p = cum_checks + (k + 1)
            trace.rows.append(TraceRow(
                "scc", k, int(checks[k]), eps_bar, None, float(resid[k]),
                None, None, None, None,
                base_f + g, base_c + (g if quad.num_c else 0),
                base_d + (g if quad.num_d else 0),
                base_p + p, base_q + p, now))

    if status == _kernels.STATUS_CONVERGED:
        return SccResult(x=x_out, y=y_out, x_pre=xpre, y_pre=ypre,
                         residual=final_res, outer_iters=outers,
                         trace=trace, counters=counters)
    if status == _kernels.STATUS_INNER_LIMIT:
        raise IterationLimitExceeded(
            f"inner loop exceeded {max_inner} iterations",
            x=x_out, y=y_out,
            residual=best_res if math.isfinite(best_res) else None,
            trace=trace)
    raise IterationLimitExceeded(
        f"no certified point within {max_outer} outer iterations",
        x=x_out, y=y_out, residual=best_res, trace=trace)
