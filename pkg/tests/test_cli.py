import io
import json

import numpy as np
import pytest

from guarreach import cli, scenarios

FAST = {"n_trajectories": 40, "dt": 0.005}


def test_scenario_list(capsys):
    assert cli.main(["scenario", "list"]) == 0
    assert capsys.readouterr().out.split() == ["academic3d", "quadrocopter"]


def test_scenario_show(capsys):
    assert cli.main(["scenario", "show", "--scenario", "academic3d"]) == 0
    assert json.loads(capsys.readouterr().out)["name"] == "academic3d"


def test_gvs_outputs(tmp_path):
    cfg = scenarios.builtin("academic3d")
    paths = cli.cmd_gvs(cfg, 0.1, tmp_path, segments=32)
    names = sorted(p.name for p in paths)
    assert names == ["academic3d_gains.csv", "academic3d_gains.json",
                     "academic3d_gvs_s0.1_advanced.csv", "academic3d_gvs_s0.1_ball.csv"]
    rows = (tmp_path / "academic3d_gvs_s0.1_ball.csv").read_text().splitlines()
    assert rows[0] == "theta,x,y" and len(rows) == 33
    gains = json.loads((tmp_path / "academic3d_gains.json").read_text())
    assert gains["k_of_theta"]["x_norm"] == 0.1


def test_gvs_beyond_validity_warns(tmp_path):
    cfg = scenarios.builtin("quadrocopter")
    with pytest.warns(UserWarning):
        cli.cmd_gvs(cfg, 100.0, tmp_path)
    rows = (tmp_path / "quadrocopter_gvs_s100_ball.csv").read_text().splitlines()
    assert len(rows) == 2
    x, y = map(float, rows[1].split(",")[1:])
    np.testing.assert_allclose([x, y], cfg.snapshot.f0)


def test_reach_outputs(tmp_path):
    cfg = scenarios.builtin("quadrocopter")
    paths = cli.cmd_reach(cfg, "all", [0.05], tmp_path, overrides=FAST, truth_factor=2)
    names = sorted(p.name for p in paths)
    assert names == sorted([f"quadrocopter_T0.05_{k}_{s}.csv" for k in ("ball", "polygon", "truth")
                            for s in ("cloud", "hull")] + ["quadrocopter_T0.05_meta.json"])
    meta = json.loads((tmp_path / "quadrocopter_T0.05_meta.json").read_text())
    assert meta["systems"]["truth"]["reach"]["n_trajectories"] == 80
    assert meta["systems"]["ball"]["points"] == 40 * 11  # hold clamps to dt: 10 intervals


def test_reach_byte_identical(tmp_path):
    cfg = scenarios.builtin("academic3d")
    a = cli.cmd_reach(cfg, "ball", [0.05], tmp_path / "a", overrides={**FAST, "n_trajectories": 600})
    b = cli.cmd_reach(cfg, "ball", [0.05], tmp_path / "b", overrides={**FAST, "n_trajectories": 600}, workers=2)
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_truth_unsupported(tmp_path):
    doc = {"name": "toy", "snapshot": {"f0": [0, 0], "g0": [[1, 0], [0, 1]], "lf": 1, "lg": 1}}
    cfg = scenarios.from_dict(doc)
    with pytest.raises(scenarios.ScenarioError):
        cli.cmd_reach(cfg, "truth", [0.1], tmp_path)
    p = tmp_path / "toy.json"
    p.write_text(json.dumps(doc))
    assert cli.main(["reach", "--config", str(p), "--which", "truth", "--T", "0.1", "--out", str(tmp_path)]) == 2
    # "all" silently skips the missing truth
    paths = cli.cmd_reach(cfg, "all", [0.1], tmp_path, overrides={"n_trajectories": 5, "dt": 0.01})
    assert not any("truth" in p.name for p in paths)


def test_contains_exit_codes():
    cfg = scenarios.builtin("quadrocopter")
    buf = io.StringIO()
    code, report = cli.cmd_contains(cfg, [-15.0, -10.0], 0.25, overrides={"n_trajectories": 100}, stream=buf)
    assert code == 0 and report["ball"]["certified_by_steering"]
    assert "certified_by_steering=True" in buf.getvalue()
    code, report = cli.cmd_contains(cfg, [-15.0, -10.0], 0.05, overrides={"n_trajectories": 100},
                                    stream=io.StringIO())
    assert code == 1 and not report["ball"]["in_hull"]


def test_contains_dimension_error():
    with pytest.raises(scenarios.ScenarioError):
        cli.cmd_contains(scenarios.builtin("quadrocopter"), [1.0], 0.1, stream=io.StringIO())
    assert cli.main(["contains", "--scenario", "quadrocopter", "--target", "1", "2", "3"]) == 2


def test_main_reach(tmp_path, capsys):
    rc = cli.main(["reach", "--scenario", "quadrocopter", "--which", "ball", "--T", "0.02", "0.04",
                   "--trajectories", "5", "--dt", "0.002", "--out", str(tmp_path)])
    assert rc == 0
    assert len(capsys.readouterr().out.split()) == 6


def test_bad_scenario_exit_code(capsys):
    assert cli.main(["gvs", "--scenario", "nope"]) == 2
    assert "error" in capsys.readouterr().err
