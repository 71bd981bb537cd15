import math

import numpy as np
import pytest

import alminimax as am
from alminimax import (FeasibilityNotFound, InvalidParameter, NotFound,
                       finite_diff_check, kkt_residuals, positive_part)
from alminimax.problems import available, find_near_feasible, registry

from _toys import toy_problem, vec

ALL_NAMES = ("quad_saddle_1d", "quad_saddle_box", "ncc_toy",
             "constrained_toy")


def test_registry_names_and_not_found():
    assert set(available()) == set(ALL_NAMES)
    with pytest.raises(NotFound):
        registry("nope")


def test_quad_saddle_1d_solves_linear_system():
    inst = registry("quad_saddle_1d")
    # the saddle solves (x + y, x - y) = 0
    x, y = inst.saddle
    gx, gy = inst.problem.grad_f(x, y)
    assert np.allclose(gx, 0) and np.allclose(gy, 0)
    assert np.array_equal(x, vec(0.0))


def test_quad_saddle_box_interior_saddle():
    inst = registry("quad_saddle_box")
    x, y = inst.saddle
    gx, gy = inst.problem.grad_f(x, y)
    assert np.allclose(gx, 0) and np.allclose(gy, 0)
    lo, hi = inst.box_x
    assert np.all(x > lo) and np.all(x < hi)


def test_constrained_toy_reference_from_grid():
    # dense grid oracle: scan the c-feasible x-range, maximizing over the
    # d-feasible y-range for each x, then locate the minimizer
    inst = registry("constrained_toy")
    xs = np.linspace(-1.0, 1.0, 2001)          # c(x) <= 0 iff |x| <= 1
    best_x, best_val = None, np.inf
    for x in xs:
        ys = np.linspace(-2.0, min(2.0, 1.0 - x), 1501)
        vals = (x - 1.0) ** 2 + x * ys - ys ** 2
        val = vals.max()
        if val < best_val:
            best_val, best_x = val, x
    x_ref, y_ref = inst.saddle
    assert abs(best_x - x_ref[0]) <= 2e-3
    assert abs(best_val - 0.0) <= 1e-2

    # the stored reference with its multipliers is an exact KKT point
    lam_x, lam_y = inst.reference_multipliers
    res = kkt_residuals(inst.problem, x_ref, y_ref, lam_x, lam_y)
    assert res.max_residual() <= 1e-8


def test_ncc_toy_reference_from_calculus_and_grid():
    inst = registry("ncc_toy")
    x_ref, y_ref = inst.saddle
    # calculus: on x > 0 the inner max sits at y = 1, and the x-branch
    # vertex is 0.5 + 0.05
    assert x_ref[0] == pytest.approx(0.55)
    assert y_ref[0] == pytest.approx(1.0)
    # 2-D grid oracle: the reference is stationary for the projected step
    xs = np.linspace(-1, 1, 4001)
    phi = -(xs - 0.5) ** 2 + 0.1 * np.abs(xs)
    interior = np.argmax(phi[xs > 0])
    assert abs(xs[xs > 0][interior] - 0.55) <= 1e-3


def test_instance_gradients_match_finite_differences():
    rng = np.random.default_rng(13)
    for name in ALL_NAMES:
        inst = registry(name)
        prob = inst.problem
        lo_x, hi_x = inst.box_x
        lo_y, hi_y = inst.box_y
        for _ in range(20):
            x = rng.uniform(0.9 * lo_x, 0.9 * hi_x)
            y = rng.uniform(0.9 * lo_y, 0.9 * hi_y)
            report = finite_diff_check(prob, x, y, h=1e-6)
            assert report.reliable
            assert report.max_rel_error <= 1e-5


def test_declared_diameters_are_box_diagonals():
    for name in ALL_NAMES:
        inst = registry(name)
        lo, hi = inst.box_x
        assert inst.problem.constants.diam_x \
            == pytest.approx(float(np.linalg.norm(hi - lo)), rel=1e-15)
        lo, hi = inst.box_y
        assert inst.problem.constants.diam_y \
            == pytest.approx(float(np.linalg.norm(hi - lo)), rel=1e-15)


def test_sampled_constants_within_declared():
    rng = np.random.default_rng(14)
    for name in ALL_NAMES:
        inst = registry(name)
        prob = inst.problem
        consts = prob.constants
        lo_x, hi_x = inst.box_x
        lo_y, hi_y = inst.box_y
        slack = 1 + 1e-9
        samples = [(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y))
                   for _ in range(200)]
        for (x1, y1), (x2, y2) in zip(samples[:-1], samples[1:]):
            f1, f2 = prob.f_value(x1, y1), prob.f_value(x2, y2)
            dist = math.hypot(np.linalg.norm(x1 - x2),
                              np.linalg.norm(y1 - y2))
            if dist > 1e-9:
                assert abs(f1 - f2) <= consts.L_F * dist * slack
                g1 = np.concatenate(prob.grad_f(x1, y1))
                g2 = np.concatenate(prob.grad_f(x2, y2))
                assert np.linalg.norm(g1 - g2) \
                    <= consts.L_grad_f * dist * slack
            assert consts.F_low - 1e-9 <= f1 <= consts.F_hi + 1e-9
            assert f1 >= inst.h_low - 1e-9
            if prob.num_c:
                assert np.linalg.norm(prob.c_value(x1)) \
                    <= consts.c_hi * slack
                if np.linalg.norm(x1 - x2) > 1e-9:
                    assert np.linalg.norm(prob.c_value(x1)
                                          - prob.c_value(x2)) \
                        <= consts.L_c * np.linalg.norm(x1 - x2) * slack
            if prob.num_d:
                assert np.linalg.norm(prob.d_value(x1, y1)) \
                    <= consts.d_hi * slack


def test_inner_max_value_oracles_against_sampling():
    rng = np.random.default_rng(15)
    for name in ("quad_saddle_1d", "quad_saddle_box", "ncc_toy"):
        inst = registry(name)
        prob = inst.problem
        lo_y, hi_y = inst.box_y
        ys = rng.uniform(lo_y, hi_y, size=(500, lo_y.size))
        lo_x, hi_x = inst.box_x
        for _ in range(10):
            x = rng.uniform(lo_x, hi_x)
            sampled = max(prob.f_value(x, y) for y in ys)
            exact = inst.inner_max_value(x)
            assert exact >= sampled - 1e-9
        # the minimax value bound holds against the sampled inner max
        assert inst.h_star <= inst.inner_max_value(inst.default_start[0]) + 1e-12


def test_override_parameters_rebuild_constants():
    inst = registry("quad_saddle_1d", box_radius=3.0, coupling=0.5)
    assert inst.params == {"box_radius": 3.0, "coupling": 0.5}
    consts = inst.problem.constants
    assert consts.diam_x == 6.0
    assert consts.L_grad_f == pytest.approx(math.sqrt(1.25))
    assert consts.F_hi == pytest.approx(1.25 * 9.0 / 2.0)

    with pytest.raises(InvalidParameter):
        registry("quad_saddle_1d", coupling=2.0)
    with pytest.raises(InvalidParameter):
        registry("constrained_toy", box_radius=0.5)
    with pytest.raises(TypeError):
        registry("ncc_toy", bogus=1.0)


def test_find_near_feasible_already_feasible():
    inst = registry("constrained_toy")
    x0 = vec(0.5)
    out = find_near_feasible(inst.problem, 0.5, x0=x0)
    assert np.array_equal(out, x0)


def test_find_near_feasible_from_infeasible_start():
    inst = registry("constrained_toy")
    out = find_near_feasible(inst.problem, 0.1, x0=vec(2.0))
    # bisection oracle: the feasible set of c is [-1, 1], so the result
    # must satisfy x^2 - 1 <= 0.1
    assert out[0] ** 2 - 1.0 <= 0.1
    assert abs(out[0]) <= math.sqrt(1.1) + 1e-12


def test_find_near_feasible_affine_converges_to_zero():
    # affine constraint with a feasible box: the projected gradient
    # reaches an (almost) exactly feasible point
    prob = toy_problem(
        f=lambda x, y: 0.0,
        grad_f=lambda x, y: (0 * x, 0 * y),
        num_c=1,
        c=lambda x: x - 1.0,
        jac_c=lambda x, v: v.copy(),
        prox_p=am.prox_box(vec(-2.0), vec(2.0)),
        constants=am.ProblemConstants(L_c=1.0, L_grad_c=0.0, c_hi=3.0),
    )
    out = find_near_feasible(prob, 1e-6, x0=vec(2.0))
    assert positive_part(prob.c_value(out))[0] <= 1e-6
    # closed-form projection oracle: the halfspace-box intersection
    # nearest to 2.0 is the segment [-2, 1], whose closest point is 1
    assert abs(out[0] - 1.0) <= 1e-5


def test_find_near_feasible_cap():
    prob = toy_problem(
        f=lambda x, y: 0.0,
        grad_f=lambda x, y: (0 * x, 0 * y),
        num_c=1,
        c=lambda x: np.ones(1),          # infeasible everywhere
        jac_c=lambda x, v: 0 * x,
        constants=am.ProblemConstants(L_c=1.0, L_grad_c=0.0, c_hi=1.0),
    )
    with pytest.raises(FeasibilityNotFound) as exc_info:
        find_near_feasible(prob, 0.5, x0=vec(0.0), max_iters=50)
    assert exc_info.value.violation == pytest.approx(1.0)

    with pytest.raises(InvalidParameter):
        find_near_feasible(prob, 0.0)
