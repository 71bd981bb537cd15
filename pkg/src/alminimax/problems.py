"""Built-in test instances with exact constants and reference solutions.

All domains are boxes, so every prox is a clamp, diameters are box
diagonals, and the declared smoothness/geometry constants are closed-form.
Constants that are bounds rather than exact values (noted per instance) are
certified in the valid direction for the complexity formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (Array, ConstrainedMinimaxProblem, ProblemConstants,
                   as_vector)
from .errors import (FeasibilityNotFound, InvalidParameter, MissingConstant,
                     NotFound)
from .ncc import NccProblem
from .prox import positive_part, prox_box
from .scc import SccProblem
from .structures import FusedSaddle, SaddleStructure, quadratic_structure


@dataclass
class BuiltinInstance:
    """A registered problem plus everything the solvers and bound formulas
    need: exact constants, value bounds, and reference solutions."""

    name: str
    description: str
    problem: ConstrainedMinimaxProblem
    box_x: tuple[Array, Array]
    box_y: tuple[Array, Array]
    default_start: tuple[Array, Array]
    provenance: str
    params: dict = field(default_factory=dict)
    sigma_x: Optional[float] = None     # curvature when strongly convex-concave
    sigma_y: Optional[float] = None
    h_star: Optional[float] = None      # minimax value of the full objective
    h_low: Optional[float] = None       # lower bound of f over the domain
    inner_max_value: Optional[Callable[[Array], float]] = None
    saddle: Optional[tuple[Array, Array]] = None
    reference_multipliers: Optional[tuple[Array, Array]] = None
    default_x_nf: Optional[Array] = None

    def _plain_saddle(self):
        if self.problem.structure is None:
            return None
        return SaddleStructure(quad=self.problem.structure.plain())

    def scc_problem(self) -> SccProblem:
        """View as a strongly-convex-strongly-concave saddle problem."""
        if self.sigma_x is None or self.sigma_y is None:
            raise InvalidParameter(
                f"instance {self.name} declares no curvature moduli")
        p = self.problem
        saddle = self._plain_saddle()
        fused = FusedSaddle(saddle=saddle) if saddle is not None else None
        return SccProblem(grad=p.grad_f, prox_p=p.prox_p, prox_q=p.prox_q,
                          sigma_x=self.sigma_x, sigma_y=self.sigma_y,
                          lip_grad=p.constants.L_grad_f,
                          dim_x=p.dim_x, dim_y=p.dim_y, fused=fused)

    def ncc_problem(self) -> NccProblem:
        """View as a nonconvex-concave problem (any instance qualifies;
        constrained instances contribute only their smooth coupling)."""
        p = self.problem
        return NccProblem(grad=p.grad_f, prox_p=p.prox_p, prox_q=p.prox_q,
                          lip_grad=p.constants.L_grad_f,
                          diam_y=p.constants.diam_y,
                          structure=self._plain_saddle())


def _box_arrays(radius: float, dim: int) -> tuple[Array, Array]:
    return -radius * np.ones(dim), radius * np.ones(dim)


def _indicator_value(lo: Array, hi: Array):
    def value(v):
        inside = np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)
        return 0.0 if inside else math.inf
    return value


def _quad_extrema(a: float, b: float, c: float, lo: float, hi: float):
    """Exact (min, max) of a*t^2 + b*t + c over [lo, hi]."""
    cand = [lo, hi]
    if a != 0.0:
        vertex = -b / (2.0 * a)
        if lo < vertex < hi:
            cand.append(vertex)
    vals = [a * t * t + b * t + c for t in cand]
    return min(vals), max(vals)


# ---------------------------------------------------------------------------
# quadratic saddle instances
# ---------------------------------------------------------------------------

def _quad_saddle_1d(box_radius: float = 10.0, coupling: float = 1.0):
    r, c = float(box_radius), float(coupling)
    if r <= 0:
        raise InvalidParameter("box_radius must be positive")
    if not (0.0 < c <= 1.0):
        raise InvalidParameter("coupling must lie in (0, 1]")
    lo_x, hi_x = _box_arrays(r, 1)
    lo_y, hi_y = _box_arrays(r, 1)
    lip = math.sqrt(1.0 + c * c)
    diam = 2.0 * r
    f_hi = (1.0 + c * c) * r * r / 2.0

    quad = quadratic_structure([[1.0]], [[c]], [[1.0]], [0.0], [0.0], 0.0,
                               lo_x, hi_x, lo_y, hi_y)
    consts = ProblemConstants(
        L_F=r * math.sqrt(2.0 * (1.0 + c * c)), L_grad_f=lip,
        L_c=0.0, L_grad_c=0.0, L_d=0.0, L_grad_d=0.0,
        diam_x=diam, diam_y=diam, c_hi=0.0, d_hi=0.0,
        F_hi=f_hi, F_low=-f_hi, opt_value_low=0.0,
    )
    problem = ConstrainedMinimaxProblem(
        dim_x=1, dim_y=1, num_c=0, num_d=0,
        f_value=quad.f_value, grad_f=quad.grad_f,
        prox_p=prox_box(lo_x, hi_x), prox_q=prox_box(lo_y, hi_y),
        p_value=_indicator_value(lo_x, hi_x),
        q_value=_indicator_value(lo_y, hi_y),
        constants=consts, structure=quad)

    def inner_max(x):
        # the inner maximizer y = c*x is interior for coupling <= 1
        return 0.5 * (1.0 + c * c) * float(x[0]) ** 2

    return BuiltinInstance(
        name="quad_saddle_1d",
        description="1-D coupled quadratic saddle on a box, saddle at the origin",
        problem=problem, box_x=(lo_x, hi_x), box_y=(lo_y, hi_y),
        default_start=(np.array([0.5 * r]), np.array([-0.3 * r])),
        provenance=("saddle from the linear optimality system; value bounds "
                    "from interior minimization in x and corner evaluation, "
                    "exact for coupling <= 1"),
        params={"box_radius": r, "coupling": c},
        sigma_x=1.0, sigma_y=1.0,
        h_star=0.0, h_low=-f_hi,
        inner_max_value=inner_max,
        saddle=(np.zeros(1), np.zeros(1)),
        reference_multipliers=(np.zeros(0), np.zeros(0)),
        default_x_nf=np.zeros(1),
    )


def _rotation_blocks(dim: int, angle: float) -> Array:
    """Orthogonal matrix of 2x2 rotations (last axis fixed when dim is odd)."""
    q = np.eye(dim)
    cs, sn = math.cos(angle), math.sin(angle)
    for i in range(0, dim - 1, 2):
        q[i, i] = cs
        q[i, i + 1] = -sn
        q[i + 1, i] = sn
        q[i + 1, i + 1] = cs
    return q


def _quad_saddle_box(box_radius: float = 5.0, coupling: float = 0.75,
                     dim: int = 2):
    r, s, d = float(box_radius), float(coupling), int(dim)
    if r <= 0 or s <= 0:
        raise InvalidParameter("box_radius and coupling must be positive")
    if not (1 <= d <= 12):
        raise InvalidParameter("dim must lie in 1..12")
    mat = s * _rotation_blocks(d, math.pi / 6.0)
    lo_x, hi_x = _box_arrays(r, d)
    lo_y, hi_y = _box_arrays(r, d)
    lip = math.sqrt(1.0 + s * s)          # exact: the coupling is a scaled rotation
    diam = 2.0 * r * math.sqrt(d)
    f_bound = r * r * d * (s + 0.5)       # certified bound, not the exact max

    quad = quadratic_structure(np.eye(d), mat, np.eye(d), np.zeros(d),
                               np.zeros(d), 0.0, lo_x, hi_x, lo_y, hi_y)

    def inner_max(x):
        # max over y is coordinate-separable: y_i = clamp((A^T x)_i)
        t = mat.T @ x
        u = np.clip(t, -r, r)
        return 0.5 * float(x @ x) + float(t @ u) - 0.5 * float(u @ u)

    # exact F_hi: the inner max value is convex in x, so the box max sits
    # at a vertex
    verts = r * np.array(
        [[1 if (i >> j) & 1 else -1 for j in range(d)] for i in range(2 ** d)],
        dtype=float)
    f_hi_exact = max(inner_max(v) for v in verts)

    consts = ProblemConstants(
        L_F=r * math.sqrt(2.0 * d * (1.0 + s * s)), L_grad_f=lip,
        L_c=0.0, L_grad_c=0.0, L_d=0.0, L_grad_d=0.0,
        diam_x=diam, diam_y=diam, c_hi=0.0, d_hi=0.0,
        F_hi=f_hi_exact, F_low=-f_bound, opt_value_low=0.0,
    )
    problem = ConstrainedMinimaxProblem(
        dim_x=d, dim_y=d, num_c=0, num_d=0,
        f_value=quad.f_value, grad_f=quad.grad_f,
        prox_p=prox_box(lo_x, hi_x), prox_q=prox_box(lo_y, hi_y),
        p_value=_indicator_value(lo_x, hi_x),
        q_value=_indicator_value(lo_y, hi_y),
        constants=consts, structure=quad)

    start_x = r * np.array([0.6 if i % 2 == 0 else -0.4 for i in range(d)])
    start_y = r * np.array([0.2 if i % 2 == 0 else 0.8 for i in range(d)])
    return BuiltinInstance(
        name="quad_saddle_box",
        description="coupled quadratic saddle with a rotation coupling, "
                    "interior saddle at the origin",
        problem=problem, box_x=(lo_x, hi_x), box_y=(lo_y, hi_y),
        default_start=(start_x, start_y),
        provenance=("saddle at the origin since the coupling is "
                    "nonsingular; F_hi exact by vertex enumeration of the "
                    "convex inner-max value; F_low and h_low are certified "
                    "norm bounds -r^2*dim*(coupling+1/2)"),
        params={"box_radius": r, "coupling": s, "dim": d},
        sigma_x=1.0, sigma_y=1.0,
        h_star=0.0, h_low=-f_bound,
        inner_max_value=inner_max,
        saddle=(np.zeros(d), np.zeros(d)),
        reference_multipliers=(np.zeros(0), np.zeros(0)),
        default_x_nf=np.zeros(d),
    )


# ---------------------------------------------------------------------------
# nonconvex(concave-in-x)-concave toy
# ---------------------------------------------------------------------------

def _ncc_toy(box_radius: float = 1.0, coupling: float = 0.1):
    r, a = float(box_radius), float(coupling)
    if r <= 0 or not (0.0 < a <= 1.0):
        raise InvalidParameter("need box_radius > 0 and coupling in (0, 1]")
    lo_x, hi_x = _box_arrays(r, 1)
    lo_y, hi_y = _box_arrays(r, 1)
    lip = 1.0 + math.sqrt(1.0 + a * a)    # largest |eigenvalue| of the Hessian

    # -(x-0.5)^2 + a*x*y expanded into the quadratic block form
    quad = quadratic_structure([[-2.0]], [[a]], [[0.0]], [1.0], [0.0], -0.25,
                               lo_x, hi_x, lo_y, hi_y)

    def phi(t: float) -> float:
        # max over y in the box of the affine coupling
        return -(t - 0.5) ** 2 + a * r * abs(t)

    # the inner max value is concave on each sign branch; extrema sit at
    # branch endpoints or branch vertices
    cand = [-r, 0.0, r]
    vertex_pos = 0.5 + a * r / 2.0
    vertex_neg = 0.5 - a * r / 2.0
    if 0.0 < vertex_pos < r:
        cand.append(vertex_pos)
    if -r < vertex_neg < 0.0:
        cand.append(vertex_neg)
    h_star = min(phi(t) for t in cand)
    f_hi = max(phi(t) for t in cand)
    corners = [(-r, -r), (-r, r), (r, -r), (r, r)]
    h_low = min(-(t - 0.5) ** 2 + a * t * u for t, u in corners)

    consts = ProblemConstants(
        L_F=math.hypot(2.0 * (r + 0.5) + a * r, a * r), L_grad_f=lip,
        L_c=0.0, L_grad_c=0.0, L_d=0.0, L_grad_d=0.0,
        diam_x=2.0 * r, diam_y=2.0 * r, c_hi=0.0, d_hi=0.0,
        F_hi=f_hi, F_low=h_low, opt_value_low=h_star,
    )
    problem = ConstrainedMinimaxProblem(
        dim_x=1, dim_y=1, num_c=0, num_d=0,
        f_value=quad.f_value, grad_f=quad.grad_f,
        prox_p=prox_box(lo_x, hi_x), prox_q=prox_box(lo_y, hi_y),
        p_value=_indicator_value(lo_x, hi_x),
        q_value=_indicator_value(lo_y, hi_y),
        constants=consts, structure=quad)

    # interior-in-x stationary point paired with the active y vertex
    x_ref = min(vertex_pos, r)
    reference = (np.array([x_ref]), np.array([r]))
    return BuiltinInstance(
        name="ncc_toy",
        description="concave-in-x quadratic with affine y-coupling on a box",
        problem=problem, box_x=(lo_x, hi_x), box_y=(lo_y, hi_y),
        default_start=(np.array([-0.3 * r]), np.array([0.2 * r])),
        provenance=("stationary pair from one-variable calculus: the "
                    "y-maximizer sits at a box vertex, the x-block vertex "
                    "0.5 + coupling*radius/2 is clipped to the box; value "
                    "bounds exact by branch/corner enumeration"),
        params={"box_radius": r, "coupling": a},
        h_star=h_star, h_low=h_low,
        inner_max_value=lambda x: phi(float(x[0])),
        saddle=reference,
        reference_multipliers=(np.zeros(0), np.zeros(0)),
        default_x_nf=np.zeros(1),
    )


# ---------------------------------------------------------------------------
# fully constrained toy
# ---------------------------------------------------------------------------

def _constrained_toy(box_radius: float = 2.0):
    r = float(box_radius)
    if r <= 1.0:
        raise InvalidParameter(
            "box_radius must exceed 1 so the feasible set is interior")
    lo_x, hi_x = _box_arrays(r, 1)
    lo_y, hi_y = _box_arrays(r, 1)

    # (x-1)^2 + x*y - y^2 with c(x) = x^2 - 1 and d(x,y) = x + y - 1
    quad = quadratic_structure([[2.0]], [[1.0]], [[2.0]], [-2.0], [0.0], 1.0,
                               lo_x, hi_x, lo_y, hi_y,
                               c_quad=[[[2.0]]], c_lin=[[0.0]], c_off=[-1.0],
                               d_x=[[1.0]], d_y=[[1.0]], d_off=[-1.0])

    # objective range: the y-maximizer x/2 is always interior, the
    # x-minimizer 1 - y/2 clips at +r for y below 2(1-r)
    f_hi = _quad_extrema(1.25, -2.0, 1.0, -r, r)[1]   # (x-1)^2 + x^2/4
    y_break = 2.0 * (1.0 - r)
    lows = [_quad_extrema(-1.25, 1.0, 0.0, max(-r, y_break), r)[0]]
    if y_break > -r:
        lows.append(_quad_extrema(-1.0, r, (r - 1.0) ** 2, -r, y_break)[0])
    f_low = min(lows)

    # d-constrained inner max value f*(x): maximize over y <= min(r, 1-x)
    def best_y(t: float) -> float:
        return min(t / 2.0, min(r, 1.0 - t))

    def fstar(t: float) -> float:
        u = best_y(t)
        return (t - 1.0) ** 2 + t * u - u * u

    breaks = sorted({v for v in (-r, r, 1.0 - r, 2.0 / 3.0) if -r <= v <= r})
    fstar_low = math.inf
    for left, right in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (left + right)
        # the maximizer never clips at the box for radius > 1
        if best_y(mid) == mid / 2.0:     # interior maximizer
            piece = _quad_extrema(1.25, -2.0, 1.0, left, right)[0]
        else:                            # d-active maximizer y = 1 - x
            piece = _quad_extrema(-1.0, 1.0, 0.0, left, right)[0]
        fstar_low = min(fstar_low, piece)

    consts = ProblemConstants(
        L_F=max(math.hypot(2.0 * (t - 1.0) + u, t - 2.0 * u)
                for t in (-r, r) for u in (-r, r)),
        L_grad_f=math.sqrt(5.0),
        L_c=2.0 * r, L_grad_c=2.0,
        L_d=math.sqrt(2.0), L_grad_d=0.0,
        diam_x=2.0 * r, diam_y=2.0 * r,
        c_hi=max(1.0, r * r - 1.0), d_hi=2.0 * r + 1.0,
        cq_slope=math.sqrt(2.0), cq_active_margin=0.5, cq_feas_margin=0.5,
        slater_margin=1.0,
        F_hi=f_hi, F_low=f_low, opt_value_low=fstar_low,
    )
    problem = ConstrainedMinimaxProblem(
        dim_x=1, dim_y=1, num_c=1, num_d=1,
        f_value=quad.f_value, grad_f=quad.grad_f,
        prox_p=prox_box(lo_x, hi_x), prox_q=prox_box(lo_y, hi_y),
        c_value=quad.c_value, jac_c_t_apply=quad.jac_c_t_apply,
        d_value=quad.d_value, jac_d_t_apply=quad.jac_d_t_apply,
        p_value=_indicator_value(lo_x, hi_x),
        q_value=_indicator_value(lo_y, hi_y),
        constants=consts, structure=quad)

    return BuiltinInstance(
        name="constrained_toy",
        description="1-D quadratic coupling with a nonconvex x-constraint "
                    "and an affine joint constraint",
        problem=problem, box_x=(lo_x, hi_x), box_y=(lo_y, hi_y),
        default_start=(np.array([-0.75 * r]), np.array([0.75 * r])),
        provenance=("KKT reference (x,y)=(1,0), multipliers (1/2, 1) from "
                    "the active-set solve of the stationarity system with "
                    "both constraints active; independent of the box radius "
                    "for radius > 1; value bounds exact by piecewise "
                    "quadratic enumeration"),
        params={"box_radius": r},
        h_star=None, h_low=f_low,
        inner_max_value=lambda x: fstar(float(x[0])),
        saddle=(np.array([1.0]), np.array([0.0])),
        reference_multipliers=(np.array([0.5]), np.array([1.0])),
        default_x_nf=np.zeros(1),
    )


_REGISTRY = {
    "quad_saddle_1d": _quad_saddle_1d,
    "quad_saddle_box": _quad_saddle_box,
    "ncc_toy": _ncc_toy,
    "constrained_toy": _constrained_toy,
}


def available() -> list[str]:
    return sorted(_REGISTRY)


def registry(name: str, **overrides) -> BuiltinInstance:
    """Build a registered instance, optionally overriding its parameters."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise NotFound(f"unknown problem {name!r}; "
                       f"available: {', '.join(available())}") from None
    return factory(**overrides)


# ---------------------------------------------------------------------------
# near-feasible point finder
# ---------------------------------------------------------------------------

def find_near_feasible(prob: ConstrainedMinimaxProblem, eta: float,
                       x0: Optional[Array] = None,
                       max_iters: int = 100_000) -> Array:
    """Projected (proximal) gradient descent on ||[c(x)]_+||^2 until the
    violation norm drops to eta.

    Best-effort: the cap raises FeasibilityNotFound carrying the best point.
    The step size is 1 / (2 (L_c^2 + c_hi * L_grad_c)), the smoothness
    constant of the squared violation.
    """
    if not (0.0 < eta <= 1.0):
        raise InvalidParameter("eta must lie in (0, 1]")
    x = prob.prox_p(1.0, np.zeros(prob.dim_x)) if x0 is None \
        else as_vector(x0).copy()
    if prob.num_c == 0:
        return x
    consts = prob.constants
    if consts is None or consts.L_c is None or consts.c_hi is None \
            or consts.L_grad_c is None:
        raise MissingConstant("L_c")
    smooth = 2.0 * (consts.L_c ** 2 + consts.c_hi * consts.L_grad_c)
    if smooth <= 0:
        raise InvalidParameter("constraint constants give a zero step size")
    step = 1.0 / smooth

    target = eta * eta
    best_x, best_phi = x, math.inf
    for _ in range(max_iters):
        viol = positive_part(prob.c_value(x))
        phi = float(viol @ viol)
        if phi < best_phi:
            best_x, best_phi = x, phi
        if phi <= target:
            return x
        grad = 2.0 * prob.jac_c_t_apply(x, viol)
        x = prob.prox_p(step, x - step * grad)
    raise FeasibilityNotFound(
        f"violation {math.sqrt(best_phi):g} > eta after {max_iters} steps",
        x=best_x, violation=math.sqrt(best_phi))
