"""Closed-form complexity constants and advisory iteration/operation caps.

Every formula is evaluated literally from user-supplied constants; nothing
is estimated.  Ceilings clamp at zero (a log of a nonpositive argument is
treated as -inf and clamps the whole ceiling to 0), matching the role of
these quantities as nonnegative iteration caps.  Natural logarithms
throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import MissingConstant, NumericalFailure
from .core import ProblemConstants
from .scc import make_params


def ceil_plus(value: float) -> int:
    """max(0, ceil(value)); -inf clamps to 0."""
    if math.isnan(value):
        raise NumericalFailure("ceil_plus of nan")
    if value == -math.inf:
        return 0
    return max(0, math.ceil(value))


def pos_part(value: float) -> float:
    return max(0.0, value)


def _log(value: float) -> float:
    """Natural log extended by log(v) = -inf for v <= 0."""
    if value <= 0.0:
        return -math.inf
    return math.log(value)


def _need(obj, *names):
    for name in names:
        if getattr(obj, name) is None:
            raise MissingConstant(name)


# ---------------------------------------------------------------------------
# strongly-convex-strongly-concave layer
# ---------------------------------------------------------------------------

@dataclass
class SccBoundInputs:
    sigma_x: Optional[float] = None
    sigma_y: Optional[float] = None
    lip_grad: Optional[float] = None
    eps_bar: Optional[float] = None
    diam_x: Optional[float] = None
    diam_y: Optional[float] = None
    h_star: Optional[float] = None    # optimal saddle value
    h_low: Optional[float] = None     # min of the coupling over the domain


@dataclass
class SccBounds:
    delta: float          # domain-size term of the initial potential
    potential0: float     # computable bound on the initial potential
    max_outer: int        # iteration cap
    max_oracle: int       # cap on each oracle family (gradient, each prox)


def scc_bounds(inp: SccBoundInputs) -> SccBounds:
    """Iteration and operation caps for the scc solver."""
    _need(inp, "sigma_x", "sigma_y", "lip_grad", "eps_bar", "diam_x",
          "diam_y", "h_star", "h_low")
    sx, sy, lip = inp.sigma_x, inp.sigma_y, inp.lip_grad
    params = make_params(sx, sy, lip)
    alpha = params.alpha
    delta = (2.0 + 1.0 / alpha) * sx * inp.diam_x ** 2 \
        + max(2.0 * sy, alpha * sx / 4.0) * inp.diam_y ** 2
    potential0 = delta + (2.0 / alpha) * (inp.h_star - inp.h_low)

    amplification = (1.0 / params.zeta_bar + lip) ** 2
    rate_outer = max(2.0 / alpha, alpha * sx / (4.0 * sy))
    arg_outer = 4.0 * max(params.eta_z / sx ** 2, params.eta_y) \
        * potential0 * amplification / inp.eps_bar ** 2
    max_outer = ceil_plus(rate_outer * _log(arg_outer))

    rate_oracle = max(2.0, math.sqrt(sx / (2.0 * sy)))
    arg_oracle = 4.0 * max(1.0 / (2.0 * sx), params.eta_y) \
        * potential0 * amplification / inp.eps_bar ** 2
    per_outer = math.ceil(96.0 * math.sqrt(2.0) * (1.0 + 8.0 * lip / sx)) + 2
    max_oracle = ceil_plus(rate_oracle * _log(arg_oracle)) * per_outer
    return SccBounds(delta=delta, potential0=potential0,
                     max_outer=max_outer, max_oracle=max_oracle)


# ---------------------------------------------------------------------------
# nonconvex-concave layer
# ---------------------------------------------------------------------------

@dataclass
class NccBoundInputs:
    lip_grad: Optional[float] = None
    eps: Optional[float] = None
    eps_hat0: Optional[float] = None
    diam_x: Optional[float] = None
    diam_y: Optional[float] = None
    h_start_max: Optional[float] = None   # max_y of the coupling at the start x
    h_star: Optional[float] = None        # minimax value
    h_low: Optional[float] = None         # min over the whole domain


@dataclass
class NccBounds:
    alpha: float
    delta: float
    max_outer: int        # cap on proximal-point iterations, minus one
    max_oracle: float


def ncc_bounds(inp: NccBoundInputs) -> NccBounds:
    """Iteration cap T (loop runs at most T+1) and oracle cap for ncc."""
    _need(inp, "lip_grad", "eps", "eps_hat0", "diam_x", "diam_y",
          "h_start_max", "h_star", "h_low")
    lip, eps, eh0 = inp.lip_grad, inp.eps, inp.eps_hat0
    dx, dy = inp.diam_x, inp.diam_y
    alpha = min(1.0, math.sqrt(4.0 * eps / (dy * lip)))
    delta = (2.0 + 1.0 / alpha) * lip * dx ** 2 \
        + max(eps / dy, alpha * lip / 4.0) * dy ** 2
    max_outer = ceil_plus(
        16.0 * (inp.h_start_max - inp.h_star + eps * dy / 4.0) * lip / eps ** 2
        + 32.0 * eh0 ** 2 * (1.0 + 4.0 * dy ** 2 * lip ** 2 / eps ** 2)
        / eps ** 2
        - 1.0)

    s = eps / (2.0 * dy)
    smooth = 3.0 * lip + s
    amplification = (smooth ** 2 / min(lip, s) + smooth) ** 2
    arg = 4.0 * max(1.0 / (2.0 * lip), min(dy / eps, 4.0 / (alpha * lip))) \
        * (delta + (2.0 / alpha) * (inp.h_star - inp.h_low + eps * dy / 4.0
                                    + lip * dx ** 2)) \
        * amplification / eh0 ** 2
    per_outer = math.ceil(
        96.0 * math.sqrt(2.0) * (1.0 + (24.0 * lip + 4.0 * eps / dy) / lip)) + 2
    rate = max(2.0, math.sqrt(dy * lip / eps))
    t = max_outer
    max_oracle = per_outer * rate \
        * ((t + 1.0) * pos_part(_log(arg)) + t + 1.0
           + 2.0 * t * math.log(t + 1.0))
    return NccBounds(alpha=alpha, delta=delta, max_outer=max_outer,
                     max_oracle=max_oracle)


# ---------------------------------------------------------------------------
# augmented Lagrangian layer
# ---------------------------------------------------------------------------

@dataclass
class AlmBoundInputs:
    constants: Optional[ProblemConstants] = None
    eps: Optional[float] = None
    eps0: Optional[float] = None
    tau: Optional[float] = None
    lam_cap: Optional[float] = None
    lam_y0_norm: float = 0.0


@dataclass
class AlmBounds:
    lip: float                  # schedule-uniform smoothness constant
    alpha: float
    delta: float
    log_cap: float              # the argument whose positive log enters the
                                # oracle cap (k-free form)
    log_cap_raw: float          # literal form, evaluated at the final penalty
    subproblem_cap: int         # cap on proximal-point iterations per call
    outer_iters: int            # exact smallest K with eps0*tau^K <= eps
    max_oracle: float           # cap on each oracle family over the solve
    dual_radius: float          # radius bounding the optimal d-multipliers


_ALM_CONSTS = ("L_F", "L_grad_f", "L_c", "L_grad_c", "L_d", "L_grad_d",
               "diam_x", "diam_y", "c_hi", "d_hi", "slater_margin",
               "F_hi", "F_low", "opt_value_low")


def alm_bounds(inp: AlmBoundInputs) -> AlmBounds:
    """All schedule-level constants of the AL complexity analysis.

    ``log_cap`` uses the k-free coefficient on d_hi^2; ``log_cap_raw`` keeps
    the literal rho_k factor, evaluated at the final (largest) penalty
    rho_K, and is reported for comparison only.
    """
    _need(inp, "constants", "eps", "eps0", "tau", "lam_cap")
    c = inp.constants
    _need(c, *_ALM_CONSTS)
    eps, eps0, tau, cap = inp.eps, inp.eps0, inp.tau, inp.lam_cap
    ly0 = inp.lam_y0_norm
    dx, dy = c.diam_x, c.diam_y

    gap = c.F_hi - c.opt_value_low + dy * eps0
    lip = (c.L_grad_f + c.L_c ** 2 + c.c_hi * c.L_grad_c + cap * c.L_grad_c
           + c.L_d ** 2 + c.d_hi * c.L_grad_d
           + c.L_grad_d * math.sqrt(ly0 ** 2 + 2.0 * gap / (1.0 - tau)))
    alpha = min(1.0, math.sqrt(4.0 / (dy * lip)))
    delta = (2.0 + 1.0 / alpha) * lip * dx ** 2 \
        + max(1.0 / dy, lip / 4.0) * dy ** 2

    outer_iters = ceil_plus((math.log(eps) - math.log(eps0)) / math.log(tau))
    rho_final = 1.0 / (eps0 * tau ** outer_iters)

    smooth = 3.0 * lip + 1.0 / (2.0 * dy)
    amplification = (smooth ** 2 / min(c.L_c ** 2, 1.0 / (2.0 * dy))
                     + smooth) ** 2
    front = 16.0 * max(1.0 / (2.0 * c.L_c ** 2), 4.0 / (alpha * c.L_c ** 2)) \
        * amplification

    def bracket(dhi_coeff: float) -> float:
        return delta + (2.0 / alpha) * (
            c.F_hi - c.F_low + cap ** 2 / 2.0 + 1.5 * ly0 ** 2
            + 3.0 * gap / (1.0 - tau) + dhi_coeff * c.d_hi ** 2
            + dy / 4.0 + lip * dx ** 2)

    log_cap = front * bracket(1.0)
    log_cap_raw = front * bracket(rho_final)

    subproblem_cap = ceil_plus(
        16.0 * (c.L_F * dy + c.F_hi - c.opt_value_low + cap
                + 0.5 * (1.0 / tau + ly0 ** 2) + gap / (1.0 - tau)
                + cap ** 2 / 2.0 + dy / 4.0) * lip
        + 8.0 * (1.0 + 4.0 * dy ** 2 * lip ** 2))

    per_outer = math.ceil(
        96.0 * math.sqrt(2.0)
        * (1.0 + (24.0 * lip + 4.0 / dy) / c.L_c ** 2)) + 2
    max_oracle = (per_outer * max(2.0, math.sqrt(dy * lip))
                  * subproblem_cap / (1.0 - tau ** 4) / (tau * eps) ** 4
                  * (28.0 * outer_iters * math.log(1.0 / tau)
                     + 28.0 * math.log(1.0 / eps0)
                     + 2.0 * pos_part(_log(log_cap)) + 2.0
                     + 2.0 * math.log(2.0 * subproblem_cap)))

    dual_radius = 2.0 * (eps0 + c.L_F) * dy / c.slater_margin
    return AlmBounds(lip=lip, alpha=alpha, delta=delta, log_cap=log_cap,
                     log_cap_raw=log_cap_raw, subproblem_cap=subproblem_cap,
                     outer_iters=outer_iters, max_oracle=max_oracle,
                     dual_radius=dual_radius)


def check_eps_condition(inp: AlmBoundInputs) -> bool:
    """Advisory check that the target eps is small enough for the KKT
    quality guarantees (never enforced as a precondition)."""
    _need(inp, "constants", "eps", "eps0", "tau", "lam_cap")
    c = inp.constants
    _need(c, "L_F", "L_c", "diam_y", "cq_active_margin", "cq_feas_margin",
          "slater_margin", "F_hi", "opt_value_low")
    eps, eps0, tau, cap = inp.eps, inp.eps0, inp.tau, inp.lam_cap
    ly0 = inp.lam_y0_norm
    dy = c.diam_y
    gap = c.F_hi - c.opt_value_low + dy * eps0
    lip = alm_bounds(inp).lip
    threshold = max(
        1.0,
        cap / c.cq_active_margin,
        (2.0 * c.L_F * dy + 2.0 * c.F_hi - 2.0 * c.opt_value_low + 2.0 * cap
         + 1.0 / tau + ly0 ** 2 + 2.0 * gap / (1.0 - tau)
         + eps0 * dy / 2.0 + 1.0 / c.L_c ** 2 + 4.0 * dy ** 2 * lip
         + cap ** 2) / c.cq_feas_margin ** 2,
        4.0 * ly0 ** 2 / (c.slater_margin ** 2 * tau)
        + 8.0 * gap / (c.slater_margin ** 2 * tau * (1.0 - tau)),
    )
    return 1.0 / eps >= threshold


@dataclass
class KktThresholds:
    """The explicit feasibility/complementarity caps of the output
    guarantee, scaled by the target eps."""

    feas_c: float
    comp_c: float
    feas_d: float
    comp_d: float

    def as_dict(self) -> dict:
        return {"feas_c": self.feas_c, "comp_c": self.comp_c,
                "feas_d": self.feas_d, "comp_d": self.comp_d}


def kkt_thresholds(constants: ProblemConstants, eps: float, eps0: float,
                   lam_cap: float, lam_y0_norm: float = 0.0) -> KktThresholds:
    _need(constants, "L_F", "L_d", "diam_y", "cq_slope", "slater_margin")
    c = constants
    base_d = 2.0 * (eps0 + c.L_F) * c.diam_y / c.slater_margin
    base_c = (c.L_F + c.L_d * base_d + eps0) / c.cq_slope
    return KktThresholds(
        feas_c=eps * base_c,
        comp_c=eps * base_c * max(base_c, lam_cap),
        feas_d=eps * base_d,
        comp_d=eps * base_d * max(base_d, lam_y0_norm),
    )
