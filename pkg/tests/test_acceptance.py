"""Acceptance gate: every shipped guarantee exercised at its stated
tolerance, one printed pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Criterion 8 audits the multiplier histories of the solves performed for
criteria 4 and 5, so those stash their outputs here.
"""

import math
import time

import numpy as np
import pytest

import alminimax as am
from alminimax import (AlmConfig, NccConfig, certify_stationarity,
                       project_nonneg_ball, prox_box, prox_l1, prox_zero,
                       schedule_length, solve_alm, solve_ncc, solve_scc)
from alminimax.bounds import (NccBoundInputs, SccBoundInputs,
                              kkt_thresholds, ncc_bounds, scc_bounds)

from _toys import brute_force_project_nonneg_ball, central_diff_gradient

_ALM_RUNS = []          # (label, AlmOutput) stash for criterion 8
_GRID = [(eps0, tau, eps)
         for eps0 in (1.0, 0.8, 0.5)
         for tau in (0.3, 0.5, 0.9)
         for eps in (0.1, 0.01, 0.001)
         if tau * eps < eps0 <= 1.0]


def _report(criterion, passed, elapsed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {criterion}] {status} ({elapsed:.2f}s) {detail}")
    assert passed, f"criterion {criterion} failed: {detail}"


@pytest.fixture(scope="module", autouse=True)
def warm_kernel():
    # one-time JIT compilation is excluded from the runtime budgets
    inst = am.problems.registry("quad_saddle_1d")
    prob = inst.scc_problem()
    solve_scc(prob, 1e-2, start=(np.zeros(1), np.zeros(1)))


def _scc_solves():
    for name in ("quad_saddle_1d", "quad_saddle_box"):
        inst = am.problems.registry(name)
        prob = inst.scc_problem()
        x0, y0 = inst.default_start
        res = solve_scc(prob, 1e-6, start=(-prob.sigma_x * x0, y0))
        yield name, inst, prob, res


def test_criterion_1_scc_correctness():
    t0 = time.perf_counter()
    ok = True
    details = []
    for name, inst, prob, res in _scc_solves():
        sx, sy = inst.saddle
        dist = math.hypot(float(np.linalg.norm(res.x - sx)),
                          float(np.linalg.norm(res.y - sy)))
        bound = 2e-6 / min(prob.sigma_x, prob.sigma_y)
        ok &= res.residual <= 1e-6 and dist <= bound
        details.append(f"{name}: residual={res.residual:.2e} dist={dist:.2e}")
    elapsed = time.perf_counter() - t0
    _report(1, ok and elapsed < 1.0, elapsed, "; ".join(details))


def test_criterion_2_scc_iteration_and_oracle_bounds():
    t0 = time.perf_counter()
    ok = True
    details = []
    for name, inst, prob, res in _scc_solves():
        consts = inst.problem.constants
        caps = scc_bounds(SccBoundInputs(
            sigma_x=prob.sigma_x, sigma_y=prob.sigma_y,
            lip_grad=prob.lip_grad, eps_bar=1e-6,
            diam_x=consts.diam_x, diam_y=consts.diam_y,
            h_star=inst.h_star, h_low=inst.h_low))
        counts = res.counters.as_dict()
        ok &= res.outer_iters <= caps.max_outer
        ok &= all(v <= caps.max_oracle for v in counts.values())
        details.append(f"{name}: outer {res.outer_iters}<={caps.max_outer}, "
                       f"max count {max(counts.values())}<={caps.max_oracle}")
    elapsed = time.perf_counter() - t0
    _report(2, ok and elapsed < 1.0, elapsed, "; ".join(details))


def test_criterion_3_ncc_correctness():
    t0 = time.perf_counter()
    eps = 1e-3
    inst = am.problems.registry("ncc_toy")
    prob = inst.ncc_problem()
    cfg = NccConfig(eps=eps)
    res = solve_ncc(prob, cfg, start=inst.default_start)

    cert = certify_stationarity(prob.grad, prob.prox_p, prob.prox_q,
                                prob.lip_grad, res.x, res.y)
    consts = inst.problem.constants
    caps = ncc_bounds(NccBoundInputs(
        lip_grad=prob.lip_grad, eps=eps, eps_hat0=cfg.resolved_eps_hat0(),
        diam_x=consts.diam_x, diam_y=consts.diam_y,
        h_start_max=inst.inner_max_value(inst.default_start[0]),
        h_star=inst.h_star, h_low=inst.h_low))
    threshold = eps / (4.0 * prob.lip_grad)
    ok = (cert.residual <= 3 * eps
          and res.outer_iters <= caps.max_outer + 1
          and res.displacement <= threshold)
    elapsed = time.perf_counter() - t0
    _report(3, ok and elapsed < 5.0, elapsed,
            f"recertified={cert.residual:.2e}<= {3*eps:.0e}, "
            f"outer {res.outer_iters}<={caps.max_outer}+1, "
            f"displacement {res.displacement:.2e}<={threshold:.2e}")


def test_criterion_4_alm_exact_iteration_counts():
    t0 = time.perf_counter()
    inst = am.problems.registry("constrained_toy")
    ok = True
    mismatches = []
    for eps0, tau, eps in _GRID:
        cfg = AlmConfig(eps=eps, tau=tau, eps0=eps0, lam_cap=10.0,
                        start=inst.default_start, x_nf=inst.default_x_nf,
                        trace_phases=("alm",))
        out = solve_alm(inst.problem, cfg)
        want = schedule_length(eps, eps0, tau) + 1
        _ALM_RUNS.append((f"grid {eps0}/{tau}/{eps}", out))
        if out.outer_iters != want:
            ok = False
            mismatches.append((eps0, tau, eps, out.outer_iters, want))
    elapsed = time.perf_counter() - t0
    _report(4, ok and elapsed < 30.0, elapsed,
            f"{len(_GRID)} grid points"
            + (f", mismatches: {mismatches}" if mismatches else ""))


def test_criterion_5_alm_kkt_quality():
    t0 = time.perf_counter()
    eps = 1e-3
    inst = am.problems.registry("constrained_toy")
    cfg = AlmConfig(eps=eps, tau=0.5, eps0=1.0, lam_cap=10.0,
                    start=inst.default_start, x_nf=inst.default_x_nf,
                    trace_phases=("alm",))
    out = solve_alm(inst.problem, cfg)
    _ALM_RUNS.append(("criterion5", out))
    thr = kkt_thresholds(inst.problem.constants, eps, cfg.eps0, cfg.lam_cap)
    res = out.kkt
    checks = {
        "stat_x": res.stat_x <= 3 * eps,
        "stat_y": res.stat_y <= 3 * eps,
        "feas_c": res.feas_c <= thr.feas_c,
        "comp_c": res.comp_c <= thr.comp_c,
        "feas_d": res.feas_d <= thr.feas_d,
        "comp_d": res.comp_d <= thr.comp_d,
    }
    elapsed = time.perf_counter() - t0
    _report(5, all(checks.values()) and elapsed < 30.0, elapsed,
            " ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items()))


def test_criterion_6_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(21)
    ok = True

    # projection vs exhaustive active-set enumeration
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        v = rng.normal(scale=2.0, size=dim)
        radius = float(rng.uniform(0.2, 3.0))
        got = project_nonneg_ball(v, radius)
        want = brute_force_project_nonneg_ball(v, radius)
        ok &= float(np.linalg.norm(got - want)) <= 1e-8

    # built-in proxes are nonexpansive
    box = prox_box(np.array([-1.0, -2.0]), np.array([1.0, 0.5]))
    soft = prox_l1(np.array([0.3, 1.0]))
    for _ in range(1000):
        u, v = rng.normal(size=2), rng.normal(size=2)
        gamma = float(rng.uniform(0.01, 5.0))
        for prox in (box, soft, prox_zero):
            ok &= np.linalg.norm(prox(gamma, u) - prox(gamma, v)) \
                <= np.linalg.norm(u - v) * (1 + 1e-12) + 1e-15

    # assembled AL gradients vs central differences of the AL value
    for name in am.problems.available():
        inst = am.problems.registry(name)
        prob = inst.problem
        lo_x, hi_x = inst.box_x
        lo_y, hi_y = inst.box_y
        for _ in range(20):
            lam_x = rng.uniform(0, 1, size=prob.num_c)
            lam_y = rng.uniform(0, 1, size=prob.num_d)
            rho = float(rng.uniform(0.5, 4.0))
            sub = am.al_subproblem(prob, lam_x, lam_y, rho, 10.0)
            x = rng.uniform(0.9 * lo_x, 0.9 * hi_x)
            y = rng.uniform(0.9 * lo_y, 0.9 * hi_y)
            gx, gy = sub.grad(x, y)
            fd_x = central_diff_gradient(
                lambda t: am.eval_al(prob, t, y, lam_x, lam_y, rho), x)
            fd_y = central_diff_gradient(
                lambda t: am.eval_al(prob, x, t, lam_x, lam_y, rho), y)
            scale = max(1.0, float(np.linalg.norm(gx)),
                        float(np.linalg.norm(gy)))
            ok &= float(np.max(np.abs(gx - fd_x))) / scale <= 1e-5
            ok &= float(np.max(np.abs(gy - fd_y))) / scale <= 1e-5
    elapsed = time.perf_counter() - t0
    _report(6, ok and elapsed < 5.0, elapsed)


def test_criterion_7_determinism_and_counter_law():
    t0 = time.perf_counter()
    inst = am.problems.registry("quad_saddle_1d")
    x0, y0 = inst.default_start

    def run():
        prob = inst.scc_problem()
        return solve_scc(prob, 1e-6, start=(-prob.sigma_x * x0, y0))

    a, b = run(), run()
    same = (np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
            and a.counters.as_dict() == b.counters.as_dict()
            and [r.astuple()[:-1] for r in a.trace.rows]
            == [r.astuple()[:-1] for r in b.trace.rows])

    law = True
    prev = 0
    for row in a.trace.rows:
        law &= (row.n_grad_f - prev) == 2 * row.inner_iter + 3
        prev = row.n_grad_f
    elapsed = time.perf_counter() - t0
    _report(7, same and law and elapsed < 1.0, elapsed,
            f"identical={same} counter_law={law}")


def test_criterion_8_safeguard_invariants():
    t0 = time.perf_counter()
    assert _ALM_RUNS, "criteria 4 and 5 must run first"
    ok = True
    for label, out in _ALM_RUNS:
        for entry in out.history:
            ok &= entry["norm_lam_x"] <= 10.0 * (1 + 1e-12)
            ok &= entry["min_lam_y"] >= 0.0
            # the schedule coupling rho_k = 1/eps_k holds bitwise; the
            # literal product is exact to one rounding of 1.0
            ok &= entry["rho_k"] == 1.0 / entry["eps_k"]
            ok &= abs(entry["rho_k"] * entry["eps_k"] - 1.0) <= 2.0 ** -52
        ok &= float(np.linalg.norm(out.lam_x)) <= 10.0 * (1 + 1e-12)
        ok &= bool(np.all(out.lam_y >= 0.0))
    elapsed = time.perf_counter() - t0
    _report(8, ok, elapsed, f"{len(_ALM_RUNS)} solves audited")


def test_scaling_table_logged_not_asserted():
    # indirect coverage of the asymptotic operation-complexity claim:
    # counts vs epsilon, printed for inspection only
    inst = am.problems.registry("constrained_toy")
    print("\n  eps      outer  n_grad_f    n_grad_c    n_prox_p")
    for eps in (0.1, 0.03, 0.01, 0.003, 0.001):
        cfg = AlmConfig(eps=eps, tau=0.5, eps0=1.0, lam_cap=10.0,
                        start=inst.default_start, x_nf=inst.default_x_nf,
                        trace_phases=("alm",))
        out = solve_alm(inst.problem, cfg)
        c = out.counters
        print(f"  {eps:<8g} {out.outer_iters:<6d} {c.n_grad_f:<11d} "
              f"{c.n_grad_c:<11d} {c.n_prox_p:<11d}")
