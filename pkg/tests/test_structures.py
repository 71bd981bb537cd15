from dataclasses import replace

import numpy as np
import pytest

import alminimax as am
from alminimax import AlmConfig, NccConfig, solve_alm, solve_ncc, solve_scc
from alminimax._kernels import HAVE_NUMBA

from _toys import central_diff_gradient, vec


def test_structure_evaluators_match_hand_formulas():
    inst = am.problems.registry("constrained_toy")
    quad = inst.problem.structure
    rng = np.random.default_rng(16)
    for _ in range(50):
        x = rng.uniform(-2, 2, size=1)
        y = rng.uniform(-2, 2, size=1)
        assert quad.f_value(x, y) == pytest.approx(
            (x[0] - 1) ** 2 + x[0] * y[0] - y[0] ** 2, abs=1e-12)
        gx, gy = quad.grad_f(x, y)
        assert gx[0] == pytest.approx(2 * (x[0] - 1) + y[0], abs=1e-12)
        assert gy[0] == pytest.approx(x[0] - 2 * y[0], abs=1e-12)
        assert quad.c_value(x)[0] == pytest.approx(x[0] ** 2 - 1, abs=1e-12)
        assert quad.d_value(x, y)[0] == pytest.approx(x[0] + y[0] - 1,
                                                      abs=1e-12)
        v = rng.normal(size=1)
        assert quad.jac_c_t_apply(x, v)[0] == pytest.approx(2 * x[0] * v[0],
                                                            abs=1e-12)
        jx, jy = quad.jac_d_t_apply(x, y, v)
        assert jx[0] == v[0] and jy[0] == v[0]


def test_structure_gradients_match_finite_differences():
    inst = am.problems.registry("quad_saddle_box")
    quad = inst.problem.structure
    rng = np.random.default_rng(17)
    for _ in range(10):
        x = rng.uniform(-4, 4, size=2)
        y = rng.uniform(-4, 4, size=2)
        gx, gy = quad.grad_f(x, y)
        fx = central_diff_gradient(lambda t: quad.f_value(t, y), x)
        fy = central_diff_gradient(lambda t: quad.f_value(x, t), y)
        assert np.allclose(gx, fx, atol=1e-6)
        assert np.allclose(gy, fy, atol=1e-6)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_fused_and_generic_ncc_agree():
    inst = am.problems.registry("ncc_toy")
    prob = inst.ncc_problem()
    res_fused = solve_ncc(prob, NccConfig(eps=1e-2),
                          start=inst.default_start)
    res_generic = solve_ncc(replace(prob, structure=None),
                            NccConfig(eps=1e-2), start=inst.default_start)
    assert res_fused.outer_iters == res_generic.outer_iters
    assert np.allclose(res_fused.x, res_generic.x, atol=1e-9)
    assert np.allclose(res_fused.y, res_generic.y, atol=1e-9)
    assert res_fused.counters.as_dict() == res_generic.counters.as_dict()


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_fused_and_generic_alm_agree():
    inst = am.problems.registry("constrained_toy")
    prob = inst.problem

    def run(problem):
        # modest tolerance and a near-solution start: the generic callback
        # path is orders of magnitude slower and only needs to witness
        # agreement over the full pipeline
        cfg = AlmConfig(eps=0.5, tau=0.5, eps0=1.0, lam_cap=10.0,
                        start=(vec(0.9), vec(0.1)), x_nf=inst.default_x_nf,
                        trace_phases=("alm",))
        return solve_alm(problem, cfg)

    out_fused = run(prob)
    out_generic = run(replace(prob, structure=None))
    assert out_fused.outer_iters == out_generic.outer_iters
    assert np.allclose(out_fused.x, out_generic.x, atol=1e-7)
    assert np.allclose(out_fused.y, out_generic.y, atol=1e-7)
    assert np.allclose(out_fused.lam_x, out_generic.lam_x, atol=1e-7)
    assert np.allclose(out_fused.lam_y, out_generic.lam_y, atol=1e-7)
    assert out_fused.counters.as_dict() == out_generic.counters.as_dict()


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_fused_safeguards_raise_like_generic():
    inst = am.problems.registry("quad_saddle_1d")
    prob = inst.scc_problem()
    start = (-prob.sigma_x * vec(5.0), vec(-3.0))

    with pytest.raises(am.IterationLimitExceeded) as outer_exc:
        solve_scc(prob, 1e-16, start=start,
                  guards=am.SafeguardLimits(max_outer=3))
    assert outer_exc.value.residual is not None
    assert len(outer_exc.value.trace.rows) == 3

    with pytest.raises(am.IterationLimitExceeded) as inner_exc:
        solve_scc(prob, 1e-10, start=start,
                  guards=am.SafeguardLimits(max_inner=1))
    assert inner_exc.value.x is not None
    assert inner_exc.value.trace is not None


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_fused_scc_1d_bitwise_equal_to_generic():
    inst = am.problems.registry("quad_saddle_1d")
    prob = inst.scc_problem()
    start = (-prob.sigma_x * vec(5.0), vec(-3.0))
    res_fused = solve_scc(prob, 1e-6, start=start)
    res_generic = solve_scc(replace(prob, fused=None), 1e-6, start=start)
    # in one dimension both paths perform identical scalar operations
    assert np.array_equal(res_fused.x, res_generic.x)
    assert np.array_equal(res_fused.y, res_generic.y)
    assert res_fused.residual == res_generic.residual
