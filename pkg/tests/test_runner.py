import json

import numpy as np
import pytest

from vortgrowth.config import RunConfig
from vortgrowth.core import DomainSpec
from vortgrowth.io import read_csv, save_snapshot
from vortgrowth.runner import run_simulation, tail_ratio
from vortgrowth.core.grid import rfft2
from vortgrowth.steady import CosineState, cosine_field


def test_steady_cosine_short_run(tmp_path):
    rep = run_simulation(RunConfig(resolution=32, horizon=0.1, dt=1e-2, shift1=0.4), tmp_path)
    assert rep.status == "ok" and rep.exit_code == 0
    assert rep.steps == 10 and rep.t_final == pytest.approx(0.1)
    v = rep.values
    assert v["linf_change_from_initial"] < 1e-12
    assert np.allclose(v["p_final"], [0.4, 0.0], atol=1e-12)
    data = read_csv(tmp_path / "tracker.csv")
    assert data["t"][0] == 0.0 and data["t"][-1] == pytest.approx(0.1)
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["status"] == "ok"


def test_failure_is_reported_with_exit_code(tmp_path):
    # a snapshot with nonzero mean violates the torus invariant: exit code 2
    d = DomainSpec.torus(32)
    w = cosine_field(CosineState(), d)
    snap = save_snapshot(tmp_path / "bad.vort", w.with_values(w.values + 1.0))
    rep = run_simulation(RunConfig(scenario="custom_snapshot", snapshot=str(snap), resolution=32,
                                   horizon=0.01, dt=1e-2, tracker=False), tmp_path / "out")
    assert rep.status == "failed" and rep.exit_code == 2
    assert rep.error_type == "MeanZeroError"
    assert json.loads((tmp_path / "out" / "report.json").read_text())["exit_code"] == 2


def test_lamb_short_run(tmp_path):
    cfg = RunConfig(scenario="plane_lamb", resolution=128, half_width=4.0, horizon=0.1,
                    dt=0.01, diag_every=5)
    rep = run_simulation(cfg, tmp_path)
    assert rep.status == "ok"
    assert rep.values["max_rel_l2_dev"] < 0.05
    lamb = read_csv(tmp_path / "lamb.csv")
    assert lamb["centroid_fixed"][-1] - lamb["centroid_fixed"][0] == pytest.approx(0.1, abs=0.01)


def test_oracle_short_run(tmp_path):
    cfg = RunConfig(scenario="appendix_oracle", resolution=64, horizon=0.2, dt=1e-2,
                    oracle_t1=0.1, oracle_dt2=5e-2)
    rep = run_simulation(cfg, tmp_path)
    assert rep.status == "ok"
    v = rep.values
    assert v["mass_monotone"] and v["divergence_inequality"]
    assert v["inv_integral"] == pytest.approx(1 - np.exp(-0.2), rel=1e-2)


def test_tail_ratio_separates_smooth_and_rough():
    d = DomainSpec.torus(64)
    X1, X2 = d.mesh()
    smooth = rfft2(np.cos(X1) + np.cos(X2))
    rough = rfft2(np.cos(X1) + np.cos(19 * X2))
    assert tail_ratio(smooth, d) < 1e-12
    assert tail_ratio(rough, d) > 0.1
