"""Structured problem descriptions enabling the compiled solver path.

Problems whose objective is quadratic, whose x-constraints are quadratic,
and whose joint constraints are affine, all on box domains, can be handed
to the solvers as plain arrays; the inner saddle solve then runs in a
compiled kernel instead of through Python callback oracles.  The numpy
evaluators here are the single source of truth: the built-in instances
derive their callback oracles from them, and the kernel mirrors them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Array


@dataclass
class QuadraticStructure:
    """f(x,y) = x'Px/2 + x'Qy - y'Ry/2 + a'x + b'y + const on a box pair,
    with quadratic rows c_i(x) = x'C_i x/2 + u_i'x + r_i and affine rows
    d_j(x,y) = s_j'x + t_j'y + w_j."""

    P: Array
    Q: Array
    R: Array
    a: Array
    b: Array
    f_const: float
    c_quad: Array     # (nc, n, n)
    c_lin: Array      # (nc, n)
    c_off: Array      # (nc,)
    d_x: Array        # (nd, n)
    d_y: Array        # (nd, m)
    d_off: Array      # (nd,)
    lo_x: Array
    hi_x: Array
    lo_y: Array
    hi_y: Array

    @property
    def dim_x(self) -> int:
        return self.a.size

    @property
    def dim_y(self) -> int:
        return self.b.size

    @property
    def num_c(self) -> int:
        return self.c_off.size

    @property
    def num_d(self) -> int:
        return self.d_off.size

    # numpy reference evaluators -------------------------------------------

    def f_value(self, x, y) -> float:
        return float(0.5 * x @ (self.P @ x) + x @ (self.Q @ y)
                     - 0.5 * y @ (self.R @ y) + self.a @ x + self.b @ y
                     + self.f_const)

    def grad_f(self, x, y):
        return (self.P @ x + self.Q @ y + self.a,
                self.Q.T @ x - self.R @ y + self.b)

    def c_value(self, x) -> Array:
        return 0.5 * np.einsum("kij,i,j->k", self.c_quad, x, x) \
            + self.c_lin @ x + self.c_off

    def jac_c_t_apply(self, x, v) -> Array:
        return np.einsum("kij,j,k->i", self.c_quad, x, v) + self.c_lin.T @ v

    def d_value(self, x, y) -> Array:
        return self.d_x @ x + self.d_y @ y + self.d_off

    def jac_d_t_apply(self, x, y, v):
        return self.d_x.T @ v, self.d_y.T @ v

    def plain(self) -> "QuadraticStructure":
        """Copy with the constraint blocks stripped: the bare coupling view
        used when a solver runs on f + p - q alone."""
        n, m = self.dim_x, self.dim_y
        return QuadraticStructure(
            P=self.P, Q=self.Q, R=self.R, a=self.a, b=self.b,
            f_const=self.f_const,
            c_quad=np.zeros((0, n, n)), c_lin=np.zeros((0, n)),
            c_off=np.zeros(0),
            d_x=np.zeros((0, n)), d_y=np.zeros((0, m)), d_off=np.zeros(0),
            lo_x=self.lo_x, hi_x=self.hi_x, lo_y=self.lo_y, hi_y=self.hi_y)


def quadratic_structure(P, Q, R, a, b, f_const, lo_x, hi_x, lo_y, hi_y,
                        c_quad=None, c_lin=None, c_off=None,
                        d_x=None, d_y=None, d_off=None) -> QuadraticStructure:
    """Assemble a structure with float64 arrays and empty constraint blocks
    defaulting to zero rows."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n, m = a.size, b.size
    if c_off is None:
        c_quad = np.zeros((0, n, n))
        c_lin = np.zeros((0, n))
        c_off = np.zeros(0)
    if d_off is None:
        d_x = np.zeros((0, n))
        d_y = np.zeros((0, m))
        d_off = np.zeros(0)
    return QuadraticStructure(
        P=P, Q=Q, R=R, a=a, b=b, f_const=float(f_const),
        c_quad=np.asarray(c_quad, dtype=float),
        c_lin=np.asarray(c_lin, dtype=float),
        c_off=np.asarray(c_off, dtype=float).ravel(),
        d_x=np.asarray(d_x, dtype=float),
        d_y=np.asarray(d_y, dtype=float),
        d_off=np.asarray(d_off, dtype=float).ravel(),
        lo_x=np.asarray(lo_x, dtype=float).ravel(),
        hi_x=np.asarray(hi_x, dtype=float).ravel(),
        lo_y=np.asarray(lo_y, dtype=float).ravel(),
        hi_y=np.asarray(hi_y, dtype=float).ravel(),
    )


@dataclass
class SaddleStructure:
    """A quadratic structure viewed as a smooth saddle coupling, optionally
    through the augmented Lagrangian with fixed multipliers and penalty."""

    quad: QuadraticStructure
    lam_x: Optional[Array] = None
    lam_y: Optional[Array] = None
    rho: float = 0.0           # 0 means no AL terms (plain coupling)

    def resolved_multipliers(self):
        lx = np.zeros(self.quad.num_c) if self.lam_x is None else self.lam_x
        ly = np.zeros(self.quad.num_d) if self.lam_y is None else self.lam_y
        return lx, ly


@dataclass
class FusedSaddle:
    """SaddleStructure plus the prox-point recentering and concavity
    perturbation added by the outer layers."""

    saddle: SaddleStructure
    shift_coef: float = 0.0          # 2*lip recentering weight
    x_center: Optional[Array] = None
    pert_coef: float = 0.0           # strong-concavity perturbation weight
    anchor: Optional[Array] = None

    def resolved_shifts(self):
        quad = self.saddle.quad
        xc = np.zeros(quad.dim_x) if self.x_center is None else self.x_center
        an = np.zeros(quad.dim_y) if self.anchor is None else self.anchor
        return xc, an
