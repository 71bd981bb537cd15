import csv
import json
import subprocess
import sys

import numpy as np

import alminimax as am
from alminimax import cli
from alminimax.core import TRACE_COLUMNS


def write_cfg(tmp_path, name="cfg.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps(kw))
    return str(path)


def read_trace(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_alm_run_end_to_end(tmp_path):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="alm",
                    epsilon=1e-2, tau=0.5, epsilon0=1.0)
    out = tmp_path / "out"
    rc = cli.run(cfg, out_dir=str(out))
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["exit"] == "certified"
    K = am.schedule_length(1e-2, 1.0, 0.5)
    assert report["outer_iterations"] == K + 1
    assert all(report["checks"].values())

    rows = read_trace(out / "trace.csv")
    assert tuple(rows[0]) == TRACE_COLUMNS
    # counters are cumulative and nondecreasing row to row
    prev = (0, 0, 0, 0, 0)
    for row in rows[1:]:
        cur = tuple(int(v) for v in row[10:15])
        assert all(c >= p for c, p in zip(cur, prev))
        prev = cur
    phases = {row[0] for row in rows[1:]}
    assert phases == {"scc", "ncc", "alm"}


def test_report_roundtrip_reproduces_residuals(tmp_path):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="alm",
                    epsilon=1e-2)
    out = tmp_path / "out"
    assert cli.run(cfg, out_dir=str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    inst = am.problems.registry("constrained_toy")
    res = am.kkt_residuals(
        inst.problem,
        np.asarray(report["point"]["x"]), np.asarray(report["point"]["y"]),
        np.asarray(report["multipliers"]["lam_x_certificate"]),
        np.asarray(report["multipliers"]["lam_y"]))
    for key, stored in report["residuals"].items():
        assert abs(getattr(res, key) - stored) <= 1e-12


def test_scc_run_from_saddle_single_row(tmp_path):
    cfg = write_cfg(tmp_path, problem="quad_saddle_1d", solver="scc",
                    epsilon_bar=1e-6, start_x=[0.0], start_y=[0.0])
    out = tmp_path / "out"
    rc = cli.run(cfg, out_dir=str(out))
    assert rc == 0
    rows = read_trace(out / "trace.csv")
    scc_rows = [r for r in rows[1:] if r[0] == "scc"]
    assert len(scc_rows) == 1
    assert float(scc_rows[0][5]) == 0.0
    report = json.loads((out / "report.json").read_text())
    assert report["certified"]
    assert report["checks"]["certificate_reproducible"]


def test_invalid_epsilon_hat_names_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem="ncc_toy", solver="ncc",
                    epsilon=1e-3, epsilon_hat_0=1e-3)
    rc = cli.run(cfg, out_dir=str(tmp_path / "out"))
    assert rc == 1
    assert "epsilon_hat_0" in capsys.readouterr().err


def test_unknown_key_and_bad_solver(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem="ncc_toy", solver="ncc", epsilon=1e-3,
                    bogus_key=1)
    assert cli.run(cfg, out_dir=str(tmp_path / "o")) == 1
    assert "bogus_key" in capsys.readouterr().err

    cfg = write_cfg(tmp_path, name="c2.json", problem="ncc_toy",
                    solver="newton", epsilon=1e-3)
    assert cli.run(cfg, out_dir=str(tmp_path / "o")) == 1


def test_iteration_limit_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, problem="ncc_toy", solver="ncc",
                    epsilon=1e-3, max_outer=1)
    out = tmp_path / "out"
    rc = cli.run(cfg, out_dir=str(out))
    assert rc == 2
    report = json.loads((out / "report.json").read_text())
    assert report["exit"] == "iteration_limit"


def test_determinism_identical_traces(tmp_path):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="alm",
                    epsilon=5e-2, start="random", seed=7)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.run(cfg, out_dir=str(out_a)) == 0
    assert cli.run(cfg, out_dir=str(out_b)) == 0

    def strip_wall(path):
        rows = read_trace(path)
        return [row[:-1] for row in rows]

    assert strip_wall(out_a / "trace.csv") == strip_wall(out_b / "trace.csv")
    rep_a = json.loads((out_a / "report.json").read_text())
    rep_b = json.loads((out_b / "report.json").read_text())
    assert rep_a["point"] == rep_b["point"]
    assert rep_a["counters"] == rep_b["counters"]


def test_emit_plot_data(tmp_path):
    cfg = write_cfg(tmp_path, problem="quad_saddle_1d", solver="scc",
                    epsilon_bar=1e-6, emit_plot_data=True)
    out = tmp_path / "out"
    assert cli.run(cfg, out_dir=str(out)) == 0
    assert (out / "plot_data.csv").exists()
    assert (out / "residual_vs_ops.png").exists()
    rows = read_trace(out / "plot_data.csv")
    assert rows[0][0] == "total_oracle_evals"
    assert len(rows) > 1
    # totals increase monotonically
    totals = [int(r[0]) for r in rows[1:]]
    assert totals == sorted(totals)


def test_bounds_command_cross_checks_outer_count(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="alm",
                    epsilon=1e-2, tau=0.5, epsilon0=1.0)
    out = tmp_path / "out"
    assert cli.run_bounds(cfg, out_dir=str(out)) == 0
    bounds = json.loads((out / "bounds.json").read_text())
    assert bounds["alm"]["outer_iters"] == am.schedule_length(1e-2, 1.0, 0.5)

    assert cli.run(cfg, out_dir=str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["outer_iterations"] == bounds["alm"]["outer_iters"] + 1


def test_bounds_degenerate_override_clamps(tmp_path):
    cfg = write_cfg(tmp_path, problem="quad_saddle_1d", solver="scc",
                    epsilon_bar=1e-6, **{"problem.box_radius": 1e-9})
    out = tmp_path / "out"
    assert cli.run_bounds(cfg, out_dir=str(out)) == 0
    bounds = json.loads((out / "bounds.json").read_text())
    # a near-point domain drives the caps to (near) zero via the clamp
    assert bounds["scc"]["max_outer"] <= 1


def test_bounds_advisory_for_large_eps(tmp_path):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="alm",
                    epsilon=0.5, tau=0.5, epsilon0=1.0)
    out = tmp_path / "out"
    assert cli.run_bounds(cfg, out_dir=str(out)) == 0
    bounds = json.loads((out / "bounds.json").read_text())
    assert bounds["alm"]["eps_condition_ok"] is False
    assert "advisory" in bounds


def test_ncc_rejects_constrained_instance(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem="constrained_toy", solver="ncc",
                    epsilon=1e-2)
    assert cli.run(cfg, out_dir=str(tmp_path / "o")) == 1


def test_env_var_sets_default_out_dir(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, problem="quad_saddle_1d", solver="scc",
                    epsilon_bar=1e-5)
    target = tmp_path / "env_out"
    monkeypatch.setenv(cli.ENV_OUT_DIR, str(target))
    assert cli.run(cfg) == 0
    assert (target / "report.json").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "alminimax.cli", "problems", "list"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    for name in am.problems.available():
        assert name in proc.stdout
