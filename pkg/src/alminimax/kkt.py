"""Computable stationarity certificates and KKT residual bundles.

Subdifferential distances of prox-defined nonsmooth terms are not directly
computable, so stationarity is certified through a forward-backward
splitting step: the returned residual is a provably valid upper bound on
dist(0, subdifferential) at the FBS image point.  Feasibility and
complementarity residuals are computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Array, ConstrainedMinimaxProblem
from .errors import InvalidInput, MissingConstant, NumericalFailure
from .prox import positive_part


@dataclass
class StationarityCertificate:
    """An FBS image point plus a valid bound on its subdifferential distance."""

    x: Array
    y: Array
    residual: float          # bounds sqrt(dist_x^2 + dist_y^2)
    residual_x: float        # bounds dist(0, d_x) alone
    residual_y: float
    gamma: float


@dataclass
class KktResiduals:
    """The six-residual bundle of an approximate KKT point."""

    stat_x: float     # certified bound on dist(0, d_x Lagrangian)
    stat_y: float
    feas_c: float     # ||[c(x)]_+||
    feas_d: float     # ||[d(x,y)]_+||
    comp_c: float     # |<lam_x, c(x)>|
    comp_d: float     # |<lam_y, d(x,y)>|

    def as_dict(self) -> dict:
        return {"stat_x": self.stat_x, "stat_y": self.stat_y,
                "feas_c": self.feas_c, "feas_d": self.feas_d,
                "comp_c": self.comp_c, "comp_d": self.comp_d}

    def max_residual(self) -> float:
        return max(self.as_dict().values())


def certify_stationarity(grad, prox_p, prox_q, lip: float, x: Array, y: Array,
                         moduli: tuple[float, float] | None = None,
                         ) -> StationarityCertificate:
    """Certify stationarity of the saddle function at the FBS image of (x, y).

    Takes one forward-backward splitting step with step size
    gamma = min(moduli)/lip^2 when curvature moduli are given, else 1/lip,
    and returns the displacement-based residual

        || (x - x~)/gamma - (g(x,y) - g(x~,y~)) ||   (x-block; y analogous)

    which upper-bounds the subdifferential distances at (x~, y~).
    """
    if lip <= 0:
        raise InvalidInput("smoothness constant must be positive")
    if moduli is not None:
        gamma = min(moduli) / lip ** 2
    else:
        gamma = 1.0 / lip
    gx, gy = grad(x, y)
    x_t = prox_p(gamma, x - gamma * gx)
    y_t = prox_q(gamma, y + gamma * gy)
    gxt, gyt = grad(x_t, y_t)
    rx = (x - x_t) / gamma - (gx - gxt)
    ry = (y_t - y) / gamma - (gy - gyt)
    if not (np.all(np.isfinite(rx)) and np.all(np.isfinite(ry))):
        raise NumericalFailure("non-finite certificate residual")
    res_x = float(np.linalg.norm(rx))
    res_y = float(np.linalg.norm(ry))
    return StationarityCertificate(
        x=x_t, y=y_t, residual=math.hypot(res_x, res_y),
        residual_x=res_x, residual_y=res_y, gamma=gamma)


def lagrangian_grad(prob: ConstrainedMinimaxProblem, lam_x: Array,
                    lam_y: Array):
    """Gradient oracle of the smooth part of the fixed-multiplier Lagrangian.

    g_x = grad_x f + Jc(x)^T lam_x - Jd_x(x,y)^T lam_y
    g_y = grad_y f - Jd_y(x,y)^T lam_y
    """
    def grad(x, y):
        gx, gy = prob.grad_f(x, y)
        if prob.num_c > 0 and lam_x.size:
            gx = gx + prob.jac_c_t_apply(x, lam_x)
        if prob.num_d > 0 and lam_y.size:
            jx, jy = prob.jac_d_t_apply(x, y, lam_y)
            gx = gx - jx
            gy = gy - jy
        return gx, gy

    return grad


def lagrangian_smoothness(prob: ConstrainedMinimaxProblem, lam_x: Array,
                          lam_y: Array) -> float:
    """Smoothness constant of the fixed-multiplier Lagrangian.

    The fixed-multiplier Lagrangian has no penalty curvature, so only the
    multiplier-weighted constraint smoothness enters.
    """
    consts = prob.constants
    if consts is None or consts.L_grad_f is None:
        raise MissingConstant("L_grad_f")
    lip = consts.L_grad_f
    if prob.num_c > 0:
        if consts.L_grad_c is None:
            raise MissingConstant("L_grad_c")
        lip += float(np.linalg.norm(lam_x)) * consts.L_grad_c
    if prob.num_d > 0:
        if consts.L_grad_d is None:
            raise MissingConstant("L_grad_d")
        lip += float(np.linalg.norm(lam_y)) * consts.L_grad_d
    return lip


def kkt_residuals(prob: ConstrainedMinimaxProblem, x: Array, y: Array,
                  lam_x: Array, lam_y: Array) -> KktResiduals:
    """Evaluate the six KKT residuals at (x, y) with the given multipliers.

    Feasibility and complementarity are exact; the stationarity entries are
    certified FBS bounds for the fixed-multiplier Lagrangian, using the p and
    q prox oracles.
    """
    lam_x = np.atleast_1d(np.asarray(lam_x, dtype=float))
    lam_y = np.atleast_1d(np.asarray(lam_y, dtype=float))
    if np.any(lam_x < 0) or np.any(lam_y < 0):
        raise InvalidInput("multipliers must be nonnegative")

    if prob.num_c > 0:
        c_val = prob.c_value(x)
        feas_c = float(np.linalg.norm(positive_part(c_val)))
        comp_c = abs(float(lam_x @ c_val))
    else:
        feas_c = comp_c = 0.0
    if prob.num_d > 0:
        d_val = prob.d_value(x, y)
        feas_d = float(np.linalg.norm(positive_part(d_val)))
        comp_d = abs(float(lam_y @ d_val))
    else:
        feas_d = comp_d = 0.0

    cert = certify_stationarity(
        lagrangian_grad(prob, lam_x, lam_y), prob.prox_p, prob.prox_q,
        lagrangian_smoothness(prob, lam_x, lam_y), x, y)
    return KktResiduals(stat_x=cert.residual_x, stat_y=cert.residual_y,
                        feas_c=feas_c, feas_d=feas_d,
                        comp_c=comp_c, comp_d=comp_d)
