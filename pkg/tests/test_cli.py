import csv
import json

import numpy as np
import pytest

from tcsflock import certificates as cert
from tcsflock.cli import main
from tcsflock.scenario import parse_scenario
from tcsflock.errors import ScenarioError

SMALL = {
    "graph": {"type": "complete", "n": 3},
    "initial": {
        "positions": {"box": 0.2},
        "velocities": {"scale": 1e-4},
        "temperatures": {"min": 1.0, "max": 1.0001},
        "seed": 3,
    },
    "numerics": {"h": 0.05, "t_end": 20.0, "sample_every": 4},
    "certificate": {"x_inf": [0.5, 1.0, 2.0], "delta": [0.5, 1.0, 2.0]},
}

CONSENSUS = {
    "graph": {"type": "path", "n": 3},
    "initial": {
        "positions": [[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]],
        "velocities": [[0.5, 0.5]] * 3,
        "temperatures": [2.0, 2.0, 2.0],
    },
    "numerics": {"h": 0.1, "t_end": 1.0},
    "certificate": {"x_inf": 5.0, "delta": 1.0},
}


def run(cmd, path, out, *extra):
    return main([cmd, "--scenario", str(path), "--out", str(out), *extra])


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestGraphInfo:
    @pytest.mark.parametrize(
        "spec, roots, gamma",
        [
            ({"type": "complete", "n": 4}, [0, 1, 2, 3], 1),
            ({"type": "path", "n": 3}, [0], 2),
            ({"type": "cycle", "n": 5}, [0, 1, 2, 3, 4], 4),
        ],
    )
    def test_reports(self, write_scenario, tmp_path, capsys, spec, roots, gamma):
        assert run("graph-info", write_scenario({"graph": spec}), tmp_path) == 0
        info = json.loads((tmp_path / "graph_info.json").read_text())
        assert info["roots"] == roots and info["gamma_g"] == gamma
        assert f"gamma_g: {gamma}" in capsys.readouterr().out

    def test_disconnected(self, write_scenario, tmp_path, capsys):
        path = write_scenario({"graph": {"type": "edges", "n": 3, "edges": [[0, 1]]}})
        assert run("graph-info", path, tmp_path) == 1
        assert "no spanning tree" in capsys.readouterr().out


class TestInvalid:
    def test_bad_json_has_line(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"graph": {"type": "path",\n "n": }}')
        assert run("graph-info", path, tmp_path) == 2
        assert "line 2" in capsys.readouterr().err

    def test_bad_field_has_path(self, write_scenario, tmp_path, capsys):
        assert run("graph-info", write_scenario({"graph": {"type": "star", "n": 3}}), tmp_path) == 2
        assert "graph.type" in capsys.readouterr().err

    def test_missing_seed(self, write_scenario, tmp_path):
        payload = json.loads(json.dumps(SMALL))
        del payload["initial"]["seed"]
        assert run("simulate", write_scenario(payload), tmp_path) == 2

    def test_missing_file(self, tmp_path):
        assert run("certify", tmp_path / "nope.json", tmp_path) == 2

    def test_simulate_without_spanning_tree(self, write_scenario, tmp_path):
        payload = dict(CONSENSUS, graph={"type": "edges", "n": 3, "edges": []})
        assert run("simulate", write_scenario(payload), tmp_path) == 2

    @pytest.mark.parametrize(
        "patch",
        [
            {"mode": "discrete"},
            {"numerics": {"h": -1.0, "t_end": 1.0}},
            {"certificate": {"x_inf": 1.0}},
            {"unknown": 1},
            {"limit_check": {"h_values": [0.1], "divisors": [2]}},
        ],
    )
    def test_schema_rules(self, patch):
        with pytest.raises(ScenarioError):
            parse_scenario(json.dumps({**CONSENSUS, **patch}))


class TestSimulate:
    def test_consensus_zero_columns(self, write_scenario, tmp_path):
        assert run("simulate", write_scenario(CONSENSUS), tmp_path) == 0
        rows = read_csv(tmp_path / "diagnostics.csv")
        assert rows[0] == ["t", "DX", "DV", "DB", "DTheta", "Ru", "env_DB", "env_DV"]
        assert all(float(r[2]) == 0.0 and float(r[3]) == 0.0 and float(r[4]) == 0.0 for r in rows[1:])

    def test_trajectory_layout_and_counts(self, write_scenario, tmp_path):
        assert run("simulate", write_scenario(SMALL), tmp_path) == 0
        traj = read_csv(tmp_path / "trajectory.csv")
        assert traj[0] == ["t", "agent", "x1", "x2", "v1", "v2", "beta", "theta"]
        # 400 steps sampled every 4 -> 101 samples of 3 agents
        assert len(traj) == 1 + 101 * 3
        assert len(read_csv(tmp_path / "diagnostics.csv")) == 1 + 101

    def test_envelopes_dominate(self, write_scenario, tmp_path):
        assert run("simulate", write_scenario(SMALL), tmp_path) == 0
        rows = np.array(read_csv(tmp_path / "diagnostics.csv")[1:], dtype=float)
        scale = max(rows[0, 2], rows[0, 3])
        assert np.all(rows[:, 3] <= rows[:, 6] + 1e-9 * scale)
        assert np.all(rows[:, 2] <= rows[:, 7] + 1e-9 * scale)

    def test_seed_override_changes_output(self, write_scenario, tmp_path):
        path = write_scenario(SMALL)
        run("simulate", path, tmp_path / "a")
        run("simulate", path, tmp_path / "b", "--seed", "99")
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "b" / "trajectory.csv").read_bytes()

    def test_numeric_failure_writes_partial_output(self, write_scenario, tmp_path):
        payload = dict(CONSENSUS)
        payload["initial"] = {
            "positions": [[0.0], [0.1]],
            "velocities": [[1.0], [0.0]],
            "temperatures": [1.0, 0.5],
        }
        payload["graph"] = {"type": "complete", "n": 2}
        payload["numerics"] = {"h": 50.0, "t_end": 200.0}
        payload.pop("certificate")
        assert run("simulate", write_scenario(payload), tmp_path) == 3
        assert json.loads((tmp_path / "error.json").read_text())["error"]
        assert len(read_csv(tmp_path / "trajectory.csv")) == 3

    def test_discrete_envelope_columns(self, write_scenario, tmp_path):
        payload = json.loads(json.dumps(SMALL))
        payload.update(mode="discrete", numerics={"h": 0.01, "n_steps": 3000, "sample_every": 10})
        payload["certificate"] = {"x_inf": [0.5, 1.0, 2.0], "n0": [50, 100, 200]}
        assert run("simulate", write_scenario(payload), tmp_path) == 0
        rows = np.array(read_csv(tmp_path / "diagnostics.csv")[1:], dtype=float)
        assert rows.shape == (301, 8)
        assert np.all(rows[:, 3] <= rows[:, 6] + 1e-12)
        assert np.all(rows[:, 2] <= rows[:, 7] + 1e-12)


class TestCertify:
    def test_consensus_satisfied(self, write_scenario, tmp_path):
        assert run("certify", write_scenario(CONSENSUS), tmp_path) == 0
        rep = json.loads((tmp_path / "certificate.json").read_text())
        assert rep["satisfied"] and rep["mode"] == "continuous" and rep["h_certified"] is None

    def test_discrete_h_above_bound(self, write_scenario, tmp_path):
        payload = dict(CONSENSUS, mode="discrete", numerics={"h": 1.5, "n_steps": 10})
        payload["certificate"] = {"x_inf": 5.0, "n0": 4}
        assert run("certify", write_scenario(payload), tmp_path) == 1
        rep = json.loads((tmp_path / "certificate.json").read_text())
        assert rep["h_certified"] is False and not rep["satisfied"]

    def test_grid_matches_search(self, write_scenario, tmp_path):
        assert run("certify", write_scenario(SMALL), tmp_path) == 0
        rep = json.loads((tmp_path / "certificate.json").read_text())
        scn = parse_scenario(json.dumps(SMALL))
        m = scn.build_model()
        best = cert.search_parameters(scn.build_state(m.n), m, [0.5, 1.0, 2.0], delta_grid=[0.5, 1.0, 2.0]).best
        assert rep["lhs"] == best.lhs and rep["x_inf"] == best.x_inf
        assert rep["window_parameter"]["delta"] == best.inputs.delta

    def test_unsatisfied(self, write_scenario, tmp_path):
        payload = dict(CONSENSUS, certificate={"x_inf": 0.5, "delta": 1.0})
        assert run("certify", write_scenario(payload), tmp_path) == 1


class TestLimitCheck:
    def test_zero_diameters(self, write_scenario, tmp_path):
        payload = dict(CONSENSUS, limit_check={"divisors": [2, 8, 32]})
        payload["initial"] = dict(CONSENSUS["initial"], positions=[[1.0, 1.0]] * 3)
        assert run("limit-check", write_scenario(payload), tmp_path) == 0
        rows = read_csv(tmp_path / "limit_check.csv")
        assert rows[0] == ["h", "n0", "lhs_discrete", "lhs_continuous", "gap", "status"]
        assert [float(r[4]) for r in rows[1:]] == [0.0, 0.0, 0.0]

    def test_decreasing_and_skipped(self, write_scenario, tmp_path, capsys):
        payload = json.loads(json.dumps(SMALL))
        payload["graph"] = {"type": "path", "n": 3}
        payload["certificate"] = {"x_inf": 1.0, "delta": 1.0}
        payload["limit_check"] = {"h_values": [0.75, 0.125, 1 / 64, 1 / 512]}
        assert run("limit-check", write_scenario(payload), tmp_path) == 0
        rows = read_csv(tmp_path / "limit_check.csv")[1:]
        assert rows[0][-1] == "skipped"
        gaps = [float(r[4]) for r in rows[1:]]
        assert gaps[0] > gaps[1] > gaps[2]
        assert "skipped" in capsys.readouterr().out


def test_outputs_are_byte_identical(write_scenario, tmp_path):
    path = write_scenario(SMALL)
    for cmd in ("simulate", "certify"):
        run(cmd, path, tmp_path / "one")
        run(cmd, path, tmp_path / "two")
    for name in ("trajectory.csv", "diagnostics.csv", "certificate.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_module_entry_point(write_scenario, tmp_path):
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "tcsflock", "graph-info", "--scenario", str(write_scenario(CONSENSUS)), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "roots: [0]" in proc.stdout
