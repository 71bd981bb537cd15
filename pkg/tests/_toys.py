"""Shared builders and independent oracles for the test suite.

The oracles here intentionally avoid the library's own computation paths:
projections by exhaustive active-set enumeration, stationary sets by dense
grids, derivatives by central differences.
"""

import numpy as np

from alminimax import ConstrainedMinimaxProblem, ProblemConstants, prox_zero


def vec(*vals):
    return np.asarray(vals, dtype=float)


def toy_problem(f, grad_f, num_c=0, c=None, jac_c=None,
                num_d=0, d=None, jac_d=None, dim_x=1, dim_y=1,
                prox_p=prox_zero, prox_q=prox_zero, constants=None,
                p_value=None, q_value=None):
    return ConstrainedMinimaxProblem(
        dim_x=dim_x, dim_y=dim_y, num_c=num_c, num_d=num_d,
        f_value=f, grad_f=grad_f, prox_p=prox_p, prox_q=prox_q,
        c_value=c, jac_c_t_apply=jac_c, d_value=d, jac_d_t_apply=jac_d,
        p_value=p_value, q_value=q_value,
        constants=constants or ProblemConstants())


def bilinear_problem():
    """f(x, y) = x*y in one dimension, free domains."""
    return toy_problem(
        f=lambda x, y: float(x[0] * y[0]),
        grad_f=lambda x, y: (y.copy(), x.copy()),
    )


def brute_force_project_nonneg_ball(v, radius):
    """Projection onto {u >= 0, ||u|| <= radius} by exhaustive active-set
    enumeration (dimension <= 20 or so)."""
    v = np.asarray(v, dtype=float)
    d = v.size
    best = None
    best_dist = np.inf
    for mask in range(2 ** d):
        free = np.array([not (mask >> i) & 1 for i in range(d)])
        for ball_active in (False, True):
            u = np.zeros(d)
            if free.any():
                vf = v[free]
                if ball_active:
                    norm = np.linalg.norm(vf)
                    if norm == 0.0:
                        continue
                    u[free] = radius * vf / norm
                else:
                    u[free] = vf
            if np.any(u < -1e-13):
                continue
            if np.linalg.norm(u) > radius * (1 + 1e-12):
                continue
            dist = np.linalg.norm(u - v)
            if dist < best_dist:
                best_dist = dist
                best = u
    return best


def central_diff_gradient(fun, x, h=1e-6):
    """Central differences of a scalar function of one vector."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def grid_stationary_points(grad, lo, hi, n=801, gamma=0.1, tol=None):
    """Locate approximate saddle-stationary points of a 1x1 box problem by
    scanning the projected-step displacement on a dense grid."""
    xs = np.linspace(lo, hi, n)
    ys = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    gx, gy = grad(X, Y)
    px = np.clip(X - gamma * gx, lo, hi)
    py = np.clip(Y + gamma * gy, lo, hi)
    measure = np.hypot(X - px, Y - py) / gamma
    if tol is None:
        tol = 3.0 * max(abs(hi - lo) / (n - 1), 1e-12)
    mask = measure <= tol
    return np.stack([X[mask], Y[mask]], axis=1)
