"""Compiled inner-solver kernel for structured (quadratic/affine) problems.

Mirrors the callback-based saddle solver step for step, including the
oracle accounting (2T+3 gradient and T+1 prox evaluations per outer
iteration with T condition checks) and the roundoff stall floor.  Compiled
lazily; problems without a structure never touch this module.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:          # pragma: no cover - numba is a hard dependency
    njit = None

HAVE_NUMBA = njit is not None

STATUS_CONVERGED = 0
STATUS_INNER_LIMIT = 1
STATUS_OUTER_LIMIT = 2


if HAVE_NUMBA:

    @njit(cache=True)
    def _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y, d_off,
                   lam_x, lam_y, rho, shift_coef, x_center, pert_coef,
                   anchor, x, y, gx, gy):
        n = x.size
        m = y.size
        for i in range(n):
            s = fa[i]
            for j in range(n):
                s += P[i, j] * x[j]
            for j in range(m):
                s += Q[i, j] * y[j]
            gx[i] = s
        for i in range(m):
            s = fb[i]
            for j in range(n):
                s += Q[j, i] * x[j]
            for j in range(m):
                s -= R[i, j] * y[j]
            gy[i] = s
        nc = c_off.size
        for k in range(nc):
            val = c_off[k]
            for i in range(n):
                row = 0.0
                for j in range(n):
                    row += c_quad[k, i, j] * x[j]
                val += (0.5 * row + c_lin[k, i]) * x[i]
            mult = lam_x[k] + rho * val
            if mult > 0.0:
                for i in range(n):
                    row = 0.0
                    for j in range(n):
                        row += c_quad[k, i, j] * x[j]
                    gx[i] += mult * (row + c_lin[k, i])
        nd = d_off.size
        for k in range(nd):
            val = d_off[k]
            for i in range(n):
                val += d_x[k, i] * x[i]
            for i in range(m):
                val += d_y[k, i] * y[i]
            mult = lam_y[k] + rho * val
            if mult > 0.0:
                for i in range(n):
                    gx[i] -= mult * d_x[k, i]
                for i in range(m):
                    gy[i] -= mult * d_y[k, i]
        if shift_coef != 0.0:
            for i in range(n):
                gx[i] += shift_coef * (x[i] - x_center[i])
        if pert_coef != 0.0:
            for i in range(m):
                gy[i] -= pert_coef * (y[i] - anchor[i])

    @njit(cache=True)
    def _solve_kernel(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y, d_off,
                      lam_x, lam_y, rho, shift_coef, x_center, pert_coef,
                      anchor, lo_x, hi_x, lo_y, hi_y,
                      sigma_x, sigma_y, lip, z_init, y_init, eps_bar,
                      max_outer, max_inner, checks_out, resid_out,
                      x_out, y_out, xpre_out, ypre_out, best_out):
        n = z_init.size
        m = y_init.size
        alpha = min(1.0, math.sqrt(8.0 * sigma_y / sigma_x))
        eta_z = sigma_x / 2.0
        eta_y = min(1.0 / (2.0 * sigma_y), 4.0 / (alpha * sigma_x))
        zeta = 1.0 / (2.0 * math.sqrt(5.0) * (1.0 + 8.0 * lip / sigma_x))
        gamma = 8.0 / sigma_x
        zeta_bar = min(sigma_x, sigma_y) / (lip * lip)
        sx = zeta * gamma
        sy = zeta * gamma
        floor_coef = (64.0 * 2.220446049250313e-16) ** 2

        z = z_init.copy()
        yk = y_init.copy()
        z_f = z_init.copy()
        y_f = y_init.copy()
        z_g = np.empty(n)
        y_g = np.empty(m)
        x_a = np.empty(n)
        x0 = np.empty(n)
        y0 = np.empty(m)
        x_t = np.empty(n)
        y_t = np.empty(m)
        bx = np.empty(n)
        by = np.empty(m)
        gx = np.empty(n)
        gy = np.empty(m)
        ax = np.empty(n)
        ay = np.empty(m)
        xe = np.empty(n)
        ye = np.empty(m)
        xh = np.empty(n)
        yh = np.empty(m)
        gx2 = np.empty(n)
        gy2 = np.empty(m)
        xt2 = np.zeros(n)
        yt2 = np.zeros(m)
        best_x = np.zeros(n)
        best_y = np.zeros(m)

        rows_cap = checks_out.size
        total_checks = 0
        best_res = math.inf
        best_out[0] = math.inf
        outer_done = 0

        for k in range(max_outer):
            for i in range(n):
                z_g[i] = alpha * z[i] + (1.0 - alpha) * z_f[i]
                x_a[i] = -z_g[i] / sigma_x
            for i in range(m):
                y_g[i] = alpha * yk[i] + (1.0 - alpha) * y_f[i]

            # anchor field and initial prox pair
            _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                       d_off, lam_x, lam_y, rho, shift_coef, x_center,
                       pert_coef, anchor, x_a, y_g, gx, gy)
            for i in range(n):
                ax[i] = (gx[i] - sigma_x * x_a[i]) \
                    + 0.5 * sigma_x * (x_a[i] - z_g[i] / sigma_x)
            for i in range(m):
                ay[i] = -(gy[i] + sigma_y * y_g[i]) + sigma_y * y_g[i] \
                    + sigma_x * (y_g[i] - y_g[i]) / 8.0
            for i in range(n):
                v = x_a[i] - sx * ax[i]
                p = min(max(v, lo_x[i]), hi_x[i])
                x0[i] = p
                bx[i] = (v - p) / sx
                x_t[i] = p
            for i in range(m):
                v = y_g[i] - sy * ay[i]
                p = min(max(v, lo_y[i]), hi_y[i])
                y0[i] = p
                by[i] = (v - p) / sy
                y_t[i] = p

            t = 0
            checks = 0
            inner_failed = False
            while True:
                _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                           d_off, lam_x, lam_y, rho, shift_coef, x_center,
                           pert_coef, anchor, x_t, y_t, gx, gy)
                for i in range(n):
                    ax[i] = (gx[i] - sigma_x * x_t[i]) \
                        + 0.5 * sigma_x * (x_t[i] - z_g[i] / sigma_x)
                for i in range(m):
                    ay[i] = -(gy[i] + sigma_y * y_t[i]) + sigma_y * y_t[i] \
                        + sigma_x * (y_t[i] - y_g[i]) / 8.0
                checks += 1
                lhs = 0.0
                rhs = 0.0
                nax = 0.0
                nbx = 0.0
                nx = 0.0
                nxa = 0.0
                for i in range(n):
                    rxi = ax[i] + bx[i]
                    lhs += gamma * rxi * rxi
                    dxi = x_t[i] - x_a[i]
                    rhs += dxi * dxi / gamma
                    nax += ax[i] * ax[i]
                    nbx += bx[i] * bx[i]
                    nx += x_t[i] * x_t[i]
                    nxa += x_a[i] * x_a[i]
                nay = 0.0
                nby = 0.0
                ny = 0.0
                nya = 0.0
                for i in range(m):
                    ryi = ay[i] + by[i]
                    lhs += gamma * ryi * ryi
                    dyi = y_t[i] - y_g[i]
                    rhs += dyi * dyi / gamma
                    nay += ay[i] * ay[i]
                    nby += by[i] * by[i]
                    ny += y_t[i] * y_t[i]
                    nya += y_g[i] * y_g[i]
                if not lhs > rhs:
                    break
                scale_x = (math.sqrt(nx) + math.sqrt(nxa)) / sx \
                    + math.sqrt(nax) + math.sqrt(nbx)
                scale_y = (math.sqrt(ny) + math.sqrt(nya)) / sy \
                    + math.sqrt(nay) + math.sqrt(nby)
                if lhs <= floor_coef * (gamma * scale_x * scale_x
                                        + gamma * scale_y * scale_y):
                    break
                if t >= max_inner:
                    inner_failed = True
                    break
                beta = 2.0 / (t + 3.0)
                for i in range(n):
                    xe[i] = x_t[i] + beta * (x0[i] - x_t[i])
                    xh[i] = xe[i] - sx * (ax[i] + bx[i])
                for i in range(m):
                    ye[i] = y_t[i] + beta * (y0[i] - y_t[i])
                    yh[i] = ye[i] - sy * (ay[i] + by[i])
                _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                           d_off, lam_x, lam_y, rho, shift_coef, x_center,
                           pert_coef, anchor, xh, yh, gx, gy)
                for i in range(n):
                    axi = (gx[i] - sigma_x * xh[i]) \
                        + 0.5 * sigma_x * (xh[i] - z_g[i] / sigma_x)
                    v = xe[i] - sx * axi
                    p = min(max(v, lo_x[i]), hi_x[i])
                    x_t[i] = p
                    bx[i] = (v - p) / sx
                for i in range(m):
                    ayi = -(gy[i] + sigma_y * yh[i]) + sigma_y * yh[i] \
                        + sigma_x * (yh[i] - y_g[i]) / 8.0
                    v = ye[i] - sy * ayi
                    p = min(max(v, lo_y[i]), hi_y[i])
                    y_t[i] = p
                    by[i] = (v - p) / sy
                t += 1

            total_checks += checks
            if inner_failed:
                outer_done = k + 1
                # report the best certified point when one exists, else the
                # stuck inner iterate
                if best_res < math.inf:
                    for i in range(n):
                        x_out[i] = best_x[i]
                    for i in range(m):
                        y_out[i] = best_y[i]
                else:
                    for i in range(n):
                        x_out[i] = x_t[i]
                    for i in range(m):
                        y_out[i] = y_t[i]
                if k < rows_cap:
                    checks_out[k] = checks
                    resid_out[k] = math.nan
                return STATUS_INNER_LIMIT, outer_done, total_checks

            # averaged dual pair and the momentum updates
            _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                       d_off, lam_x, lam_y, rho, shift_coef, x_center,
                       pert_coef, anchor, x_t, y_t, gx, gy)
            for i in range(n):
                zf_new = (gx[i] - sigma_x * x_t[i]) + bx[i]
                z[i] = z[i] + (eta_z / sigma_x) * (zf_new - z[i]) \
                    - eta_z * (x_t[i] + zf_new / sigma_x)
                z_f[i] = zf_new
            for i in range(m):
                wf = -(gy[i] + sigma_y * y_t[i]) + by[i]
                yk[i] = yk[i] + eta_y * sigma_y * (y_t[i] - yk[i]) \
                    - eta_y * (wf + sigma_y * y_t[i])
                y_f[i] = y_t[i]
            for i in range(n):
                xpre_out[i] = -z[i] / sigma_x

            # termination certificate
            _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                       d_off, lam_x, lam_y, rho, shift_coef, x_center,
                       pert_coef, anchor, xpre_out, yk, gx, gy)
            for i in range(n):
                v = xpre_out[i] - zeta_bar * gx[i]
                xt2[i] = min(max(v, lo_x[i]), hi_x[i])
            for i in range(m):
                v = yk[i] + zeta_bar * gy[i]
                yt2[i] = min(max(v, lo_y[i]), hi_y[i])
            _grad_eval(P, Q, R, fa, fb, c_quad, c_lin, c_off, d_x, d_y,
                       d_off, lam_x, lam_y, rho, shift_coef, x_center,
                       pert_coef, anchor, xt2, yt2, gx2, gy2)
            acc = 0.0
            for i in range(n):
                ri = (xpre_out[i] - xt2[i]) / zeta_bar - (gx[i] - gx2[i])
                acc += ri * ri
            for i in range(m):
                ri = (yt2[i] - yk[i]) / zeta_bar - (gy[i] - gy2[i])
                acc += ri * ri
            residual = math.sqrt(acc)

            if k < rows_cap:
                checks_out[k] = checks
                resid_out[k] = residual
            if residual < best_res:
                best_res = residual
                best_out[0] = residual
                for i in range(n):
                    best_x[i] = xt2[i]
                for i in range(m):
                    best_y[i] = yt2[i]
            outer_done = k + 1
            if residual <= eps_bar:
                best_out[1] = residual
                for i in range(n):
                    x_out[i] = xt2[i]
                for i in range(m):
                    y_out[i] = yt2[i]
                    ypre_out[i] = yk[i]
                return STATUS_CONVERGED, outer_done, total_checks

        for i in range(n):
            x_out[i] = best_x[i]
        for i in range(m):
            y_out[i] = best_y[i]
            ypre_out[i] = yk[i]
        return STATUS_OUTER_LIMIT, outer_done, total_checks


def run_fused_scc(fused, sigma_x, sigma_y, lip, z0, y0, eps_bar,
                  max_outer, max_inner, rows_cap):
    """Invoke the compiled kernel; returns the same artifacts the generic
    loop produces plus per-outer (checks, residual) arrays for the trace."""
    quad = fused.saddle.quad
    lam_x, lam_y = fused.saddle.resolved_multipliers()
    x_center, anchor = fused.resolved_shifts()
    rows = int(min(max_outer, rows_cap))
    checks_out = np.zeros(rows, dtype=np.int64)
    resid_out = np.zeros(rows)
    n, m = quad.dim_x, quad.dim_y
    x_out = np.zeros(n)
    y_out = np.zeros(m)
    xpre_out = np.zeros(n)
    ypre_out = np.zeros(m)
    best_out = np.zeros(2)
    status, outers, total_checks = _solve_kernel(
        quad.P, quad.Q, quad.R, quad.a, quad.b,
        quad.c_quad, quad.c_lin, quad.c_off,
        quad.d_x, quad.d_y, quad.d_off,
        lam_x, lam_y, float(fused.saddle.rho),
        float(fused.shift_coef), x_center, float(fused.pert_coef), anchor,
        quad.lo_x, quad.hi_x, quad.lo_y, quad.hi_y,
        float(sigma_x), float(sigma_y), float(lip),
        np.ascontiguousarray(z0, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        float(eps_bar), int(max_outer), int(max_inner),
        checks_out, resid_out, x_out, y_out, xpre_out, ypre_out, best_out)
    return (status, int(outers), int(total_checks), checks_out, resid_out,
            x_out, y_out, xpre_out, ypre_out,
            float(best_out[0]), float(best_out[1]))
