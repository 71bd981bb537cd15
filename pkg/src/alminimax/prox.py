"""Proximal operators, projections, and the forward-backward splitting step."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter, NumericalFailure


def positive_part(v):
    """Componentwise max with zero."""
    return np.maximum(v, 0.0)


def project_nonneg_ball(v, radius: float):
    """Euclidean projection onto {u >= 0 : ||u|| <= radius}.

    Clip to the nonnegative orthant, then scale radially; the two projections
    compose because the orthant is a cone and the ball is centered at the
    origin.  A zero vector after clipping is returned as-is (it is already
    the projection).
    """
    if radius <= 0:
        raise InvalidParameter("ball radius must be positive")
    w = np.maximum(v, 0.0)
    norm = float(np.linalg.norm(w))
    if norm <= radius or norm == 0.0:
        return w
    return w * (radius / norm)


def prox_zero(gamma, v):
    """Prox of the zero function: the identity."""
    return v


def prox_box(lo, hi):
    """Prox of the indicator of the box [lo, hi]: componentwise clamp."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InvalidParameter("box requires lo <= hi componentwise")

    def apply(gamma, v):
        return np.clip(v, lo, hi)

    return apply


def prox_l1(weights):
    """Prox of the weighted l1-norm: componentwise soft threshold."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise InvalidParameter("l1 weights must be nonnegative")

    def apply(gamma, v):
        return np.sign(v) * np.maximum(np.abs(v) - gamma * w, 0.0)

    return apply


def fbs_step(grad, prox_p, prox_q, gamma: float, x, y):
    """One forward-backward splitting step of the saddle field.

    Gradient descent in x, ascent in y, each followed by the matching prox:
    x' = prox_p(gamma, x - gamma*g_x), y' = prox_q(gamma, y + gamma*g_y).
    """
    if gamma <= 0:
        raise InvalidParameter("step gamma must be positive")
    gx, gy = grad(x, y)
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise NumericalFailure("non-finite gradient in fbs_step")
    return prox_p(gamma, x - gamma * gx), prox_q(gamma, y + gamma * gy)
