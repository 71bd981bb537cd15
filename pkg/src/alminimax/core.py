"""Problem model, augmented Lagrangian evaluation, and instrumented oracles.

Vectors are dense float64 numpy arrays.  Constraint Jacobians are exposed as
transpose-apply oracles (matrix-vector products), never dense matrices.  The
nonsmooth terms p and q enter solvers only through their proximal operators;
pointwise value oracles are optional and used for diagnostics only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, NumericalFailure

Array = np.ndarray


def as_vector(v) -> Array:
    return np.atleast_1d(np.asarray(v, dtype=float))


def _check_finite(value, what: str):
    if not np.all(np.isfinite(value)):
        raise NumericalFailure(f"non-finite {what}")
    return value


# ---------------------------------------------------------------------------
# constants and multipliers
# ---------------------------------------------------------------------------

@dataclass
class ProblemConstants:
    """User-declared smoothness/geometry constants on dom p x dom q.

    None marks an unknown constant; bound formulas that need one raise
    MissingConstant.  The library spot-checks these by sampling but never
    certifies them.
    """

    L_F: Optional[float] = None          # Lipschitz constant of the objective
    L_grad_f: Optional[float] = None     # smoothness of the coupling f
    L_c: Optional[float] = None          # Lipschitz constant of c
    L_grad_c: Optional[float] = None
    L_d: Optional[float] = None
    L_grad_d: Optional[float] = None
    diam_x: Optional[float] = None       # diameter of dom p
    diam_y: Optional[float] = None       # diameter of dom q
    c_hi: Optional[float] = None         # sup-norm of c on dom p
    d_hi: Optional[float] = None         # sup-norm of d on dom p x dom q
    cq_slope: Optional[float] = None         # uniform descent slope of active c_i
    cq_active_margin: Optional[float] = None  # activity threshold for the CQ
    cq_feas_margin: Optional[float] = None    # near-feasibility radius of the CQ
    slater_margin: Optional[float] = None     # uniform margin of the strictly
                                              # feasible y for the d-constraints
    F_hi: Optional[float] = None         # max of the objective on the domain
    F_low: Optional[float] = None        # min of the objective on the domain
    opt_value_low: Optional[float] = None  # lower bound on the d-constrained
                                           # inner max value, over dom p

    def validate(self):
        positive = (
            "L_F", "L_grad_f", "diam_x", "diam_y",
            "cq_slope", "cq_active_margin", "cq_feas_margin", "slater_margin",
        )
        for name in positive:
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidParameter(f"constant {name} must be positive, got {v}")
        nonnegative = ("L_c", "L_grad_c", "L_d", "L_grad_d", "c_hi", "d_hi")
        for name in nonnegative:
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InvalidParameter(f"constant {name} must be nonnegative, got {v}")
        if self.F_hi is not None and self.F_low is not None and self.F_low > self.F_hi:
            raise InvalidParameter("F_low must not exceed F_hi")
        if self.F_hi is not None and self.opt_value_low is not None \
                and self.opt_value_low > self.F_hi:
            raise InvalidParameter("opt_value_low must not exceed F_hi")
        return self


@dataclass
class MultiplierPair:
    """Nonnegative multiplier estimates for the c- and d-constraints."""

    lam_x: Array
    lam_y: Array

    def validate(self, radius: Optional[float] = None):
        if np.any(self.lam_x < 0) or np.any(self.lam_y < 0):
            raise InvalidParameter("multipliers must be nonnegative")
        if radius is not None and np.linalg.norm(self.lam_x) > radius * (1 + 1e-12):
            raise InvalidParameter("lam_x escapes its safeguard ball")
        return self


# ---------------------------------------------------------------------------
# oracle counters and solve traces
# ---------------------------------------------------------------------------

@dataclass
class OracleCounters:
    """Monotone counts of gradient and prox evaluations within a solve.

    A prox evaluation with any scale gamma > 0 counts as one evaluation; one
    Jacobian transpose-apply counts as one gradient evaluation of the
    corresponding constraint map.
    """

    n_grad_f: int = 0
    n_grad_c: int = 0
    n_grad_d: int = 0
    n_prox_p: int = 0
    n_prox_q: int = 0

    def snapshot(self) -> tuple[int, int, int, int, int]:
        return (self.n_grad_f, self.n_grad_c, self.n_grad_d,
                self.n_prox_p, self.n_prox_q)

    def total(self) -> int:
        return sum(self.snapshot())

    def as_dict(self) -> dict:
        return {
            "n_grad_f": self.n_grad_f,
            "n_grad_c": self.n_grad_c,
            "n_grad_d": self.n_grad_d,
            "n_prox_p": self.n_prox_p,
            "n_prox_q": self.n_prox_q,
        }


TRACE_COLUMNS = (
    "phase", "outer_iter", "inner_iter", "eps_k", "rho_k", "residual_cert",
    "feas_c", "feas_d", "comp_c", "comp_d",
    "n_grad_f", "n_grad_c", "n_grad_d", "n_prox_p", "n_prox_q", "wall_ms",
)


@dataclass
class TraceRow:
    phase: str
    outer_iter: int
    inner_iter: Optional[int]
    eps_k: Optional[float]
    rho_k: Optional[float]
    residual_cert: Optional[float]
    feas_c: Optional[float]
    feas_d: Optional[float]
    comp_c: Optional[float]
    comp_d: Optional[float]
    n_grad_f: int
    n_grad_c: int
    n_grad_d: int
    n_prox_p: int
    n_prox_q: int
    wall_ms: float

    def astuple(self):
        return (self.phase, self.outer_iter, self.inner_iter, self.eps_k,
                self.rho_k, self.residual_cert, self.feas_c, self.feas_d,
                self.comp_c, self.comp_d, self.n_grad_f, self.n_grad_c,
                self.n_grad_d, self.n_prox_p, self.n_prox_q, self.wall_ms)


@dataclass
class SolveTrace:
    """Per-iteration records plus the shared monotone oracle counters.

    ``phases`` filters which solver layers append rows; counters always
    accumulate.  ``meta`` carries layer-specific diagnostics (warm starts,
    displacement logs, multiplier history).
    """

    counters: OracleCounters = field(default_factory=OracleCounters)
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    phases: tuple = ("scc", "ncc", "alm")
    started: float = field(default_factory=time.perf_counter)

    def record(self, phase, outer_iter, inner_iter=None, eps_k=None, rho_k=None,
               residual_cert=None, feas_c=None, feas_d=None,
               comp_c=None, comp_d=None):
        if phase not in self.phases:
            return
        c = self.counters
        self.rows.append(TraceRow(
            phase, outer_iter, inner_iter, eps_k, rho_k, residual_cert,
            feas_c, feas_d, comp_c, comp_d,
            c.n_grad_f, c.n_grad_c, c.n_grad_d, c.n_prox_p, c.n_prox_q,
            (time.perf_counter() - self.started) * 1e3,
        ))


# ---------------------------------------------------------------------------
# the problem bundle
# ---------------------------------------------------------------------------

@dataclass
class ConstrainedMinimaxProblem:
    """Oracle bundle for min_{c(x)<=0} max_{d(x,y)<=0} f(x,y) + p(x) - q(y).

    Oracles
    -------
    f_value(x, y) -> float
    grad_f(x, y) -> (g_x, g_y)
    c_value(x) -> array of shape (num_c,)
    jac_c_t_apply(x, v) -> array of shape (dim_x,), the product Jc(x)^T... i.e.
        sum_i v_i * grad c_i(x)
    d_value(x, y) -> array of shape (num_d,)
    jac_d_t_apply(x, y, v) -> (sum_i v_i * grad_x d_i, sum_i v_i * grad_y d_i)
    prox_p(gamma, v), prox_q(gamma, v) -> prox point of gamma*p / gamma*q

    p_value / q_value are optional and used only by diagnostics; solvers touch
    p and q exclusively through the prox oracles.
    """

    dim_x: int
    dim_y: int
    num_c: int
    num_d: int
    f_value: Callable[[Array, Array], float]
    grad_f: Callable[[Array, Array], tuple[Array, Array]]
    prox_p: Callable[[float, Array], Array]
    prox_q: Callable[[float, Array], Array]
    c_value: Optional[Callable[[Array], Array]] = None
    jac_c_t_apply: Optional[Callable[[Array, Array], Array]] = None
    d_value: Optional[Callable[[Array, Array], Array]] = None
    jac_d_t_apply: Optional[Callable[[Array, Array, Array], tuple[Array, Array]]] = None
    p_value: Optional[Callable[[Array], float]] = None
    q_value: Optional[Callable[[Array], float]] = None
    constants: Optional[ProblemConstants] = None
    structure: object = None    # QuadraticStructure enabling the compiled path

    def validate(self):
        if self.dim_x <= 0 or self.dim_y <= 0:
            raise InvalidParameter("dimensions must be positive")
        if self.num_c < 0 or self.num_d < 0:
            raise InvalidParameter("constraint counts must be nonnegative")
        if self.num_c > 0 and (self.c_value is None or self.jac_c_t_apply is None):
            raise InvalidParameter("num_c > 0 requires c_value and jac_c_t_apply")
        if self.num_d > 0 and (self.d_value is None or self.jac_d_t_apply is None):
            raise InvalidParameter("num_d > 0 requires d_value and jac_d_t_apply")
        if self.constants is not None:
            self.constants.validate()
        return self


def instrument(prob: ConstrainedMinimaxProblem,
               counters: OracleCounters) -> ConstrainedMinimaxProblem:
    """Wrap the countable oracles so every invocation ticks ``counters``.

    Value oracles (f, c, d, p, q) are passthrough: only gradient and prox
    evaluations are counted.  The wrapped problem shares the original oracles
    and may be used concurrently with other instrumented copies, each owning
    its own counters.
    """
    grad_f, prox_p, prox_q = prob.grad_f, prob.prox_p, prob.prox_q
    jac_c, jac_d = prob.jac_c_t_apply, prob.jac_d_t_apply

    def counted_grad_f(x, y):
        counters.n_grad_f += 1
        return grad_f(x, y)

    def counted_prox_p(gamma, v):
        counters.n_prox_p += 1
        return prox_p(gamma, v)

    def counted_prox_q(gamma, v):
        counters.n_prox_q += 1
        return prox_q(gamma, v)

    fields = dict(grad_f=counted_grad_f, prox_p=counted_prox_p,
                  prox_q=counted_prox_q)
    if jac_c is not None:
        def counted_jac_c(x, v):
            counters.n_grad_c += 1
            return jac_c(x, v)
        fields["jac_c_t_apply"] = counted_jac_c
    if jac_d is not None:
        def counted_jac_d(x, y, v):
            counters.n_grad_d += 1
            return jac_d(x, y, v)
        fields["jac_d_t_apply"] = counted_jac_d
    return replace(prob, **fields)


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------

def eval_objective(prob: ConstrainedMinimaxProblem, x: Array, y: Array) -> float:
    """Objective value f(x,y), plus p(x) - q(y) when value oracles exist."""
    val = float(prob.f_value(x, y))
    if prob.p_value is not None:
        val += float(prob.p_value(x))
    if prob.q_value is not None:
        val -= float(prob.q_value(y))
    _check_finite(val, "objective value")
    return val


def eval_al(prob: ConstrainedMinimaxProblem, x: Array, y: Array,
            lam_x: Array, lam_y: Array, rho: float) -> float:
    """Augmented Lagrangian value at (x, y) for multipliers and penalty rho.

    F(x,y) + (||[lam_x + rho c(x)]_+||^2 - ||lam_x||^2) / (2 rho)
           - (||[lam_y + rho d(x,y)]_+||^2 - ||lam_y||^2) / (2 rho)
    """
    if rho <= 0:
        raise InvalidParameter("penalty rho must be positive")
    val = eval_al_x(prob, x, y, lam_x, rho)
    if prob.num_d > 0:
        shifted = np.maximum(lam_y + rho * prob.d_value(x, y), 0.0)
        val -= (shifted @ shifted - lam_y @ lam_y) / (2.0 * rho)
    _check_finite(val, "augmented Lagrangian value")
    return val


def eval_al_x(prob: ConstrainedMinimaxProblem, x: Array, y: Array,
              lam_x: Array, rho: float) -> float:
    """The x-part of the AL value: objective plus the c-penalty only."""
    if rho <= 0:
        raise InvalidParameter("penalty rho must be positive")
    val = eval_objective(prob, x, y)
    if prob.num_c > 0:
        shifted = np.maximum(lam_x + rho * prob.c_value(x), 0.0)
        val += (shifted @ shifted - lam_x @ lam_x) / (2.0 * rho)
    _check_finite(val, "augmented Lagrangian x-part")
    return val


@dataclass
class GradCheckReport:
    max_rel_error: float
    reliable: bool


def finite_diff_check(prob: ConstrainedMinimaxProblem, x: Array, y: Array,
                      h: float = 1e-6) -> GradCheckReport:
    """Compare grad_f against central differences of f_value at (x, y).

    Returns the worst relative error over all coordinates of both blocks.
    The report is flagged unreliable when any sampled value is non-finite
    (the symptom of stepping over the domain boundary).
    """
    if h <= 0:
        raise InvalidParameter("step h must be positive")
    x = as_vector(x)
    y = as_vector(y)
    gx, gy = prob.grad_f(x, y)
    worst = 0.0
    reliable = True

    def central(fplus, fminus):
        return (fplus - fminus) / (2.0 * h)

    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = prob.f_value(x + e, y), prob.f_value(x - e, y)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            reliable = False
            continue
        err = abs(central(fp, fm) - gx[i]) / max(1.0, abs(gx[i]))
        worst = max(worst, err)
    for j in range(y.size):
        e = np.zeros_like(y)
        e[j] = h
        fp, fm = prob.f_value(x, y + e), prob.f_value(x, y - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            reliable = False
            continue
        err = abs(central(fp, fm) - gy[j]) / max(1.0, abs(gy[j]))
        worst = max(worst, err)
    return GradCheckReport(max_rel_error=worst, reliable=reliable)
