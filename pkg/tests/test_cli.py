import json

import numpy as np
import pytest

from solitonlab.cli import (
    Scenario,
    build_parser,
    main,
    parse_scenario,
    run,
    scenario_from_dict,
    scenario_to_dict,
)
from solitonlab.errors import ScenarioError


def write_json(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


MINIMAL_EVOLVE = {
    "kind": "evolve",
    "pilot": {"kind": "coherent_state", "omega": 1.0, "amplitude": [1.0]},
    "soliton": {"shape": "gaussian", "a0": 100.0},
    "time": {"t_final": 6.283185307179586},
}

PHASES = {
    "kind": "phases",
    "experiment": {
        "m_a": 1e-14, "m_b": 1e-14, "r_a": 1e-6, "r_b": 1e-6, "tau": 1.0,
        "d_cross": {"++": 1e-4, "+-": 1.2e-4, "-+": 1.3e-4, "--": 1.4e-4},
        "d_intra_a": 1e-4, "d_intra_b": 1e-4,
    },
    "constants": {"hbar": 1.054571817e-34},
}


class TestParsing:
    def test_minimal_evolve_defaults(self, tmp_path):
        p = write_json(tmp_path, "s.json", MINIMAL_EVOLVE)
        s = parse_scenario(p)
        assert s.kind == "evolve"
        assert s.data["grid"]["points"] == 256
        assert np.isclose(s.data["time"]["dt"],
                          MINIMAL_EVOLVE["time"]["t_final"] / 1000.0)
        assert s.data["constants"]["mass"] == 1.0

    def test_missing_required_field_names_path(self):
        bad = json.loads(json.dumps(PHASES))
        del bad["experiment"]["m_a"]
        with pytest.raises(ScenarioError, match="experiment.m_a"):
            scenario_from_dict(bad)

    def test_unknown_key_rejected_with_path(self):
        bad = json.loads(json.dumps(MINIMAL_EVOLVE))
        bad["pilot"]["sigma"] = 2.0
        with pytest.raises(ScenarioError, match="pilot.sigma"):
            scenario_from_dict(bad)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ScenarioError, match="kind"):
            scenario_from_dict({"kind": "teleport"})

    def test_round_trip_identity(self):
        s = scenario_from_dict(json.loads(json.dumps(MINIMAL_EVOLVE)))
        again = scenario_from_dict(scenario_to_dict(s))
        assert again == s

    def test_invalid_json_reported(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{nope")
        with pytest.raises(ScenarioError, match="invalid JSON"):
            parse_scenario(p)


class TestRunners:
    def test_selfgrav_outputs(self, tmp_path):
        s = scenario_from_dict({
            "kind": "selfgrav",
            "sphere": {"mass": 1e-14, "radius": 1e-6},
            "distances": {"max": 4e-6, "n": 50},
        })
        summary = run(s, tmp_path / "out")
        assert summary["exit_code"] == 0
        rows = (tmp_path / "out" / "potential.csv").read_text().splitlines()
        assert rows[0] == "d,V"
        assert len(rows) == 51
        # profile is monotone non-decreasing
        vs = [float(r.split(",")[1]) for r in rows[1:]]
        assert all(b >= a for a, b in zip(vs, vs[1:]))

    def test_phases_row_counts(self, tmp_path):
        s = scenario_from_dict(json.loads(json.dumps(PHASES)))
        summary = run(s, tmp_path / "out")
        rows = (tmp_path / "out" / "phases.csv").read_text().splitlines()[1:]
        standard = [r for r in rows if r.startswith("standard")]
        soliton = [r for r in rows if r.startswith("soliton")]
        assert len(standard) == 4
        assert len(soliton) == 16
        assert summary["purity_standard"] == pytest.approx(1.0, abs=1e-12)
        assert summary["purity_soliton"] < 1.0

    def test_summary_embeds_resolved_config(self, tmp_path):
        s = scenario_from_dict(json.loads(json.dumps(PHASES)))
        run(s, tmp_path / "out")
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["scenario"]["kind"] == "phases"
        assert summary["scenario"]["experiment"]["m_a"] == 1e-14
        assert summary["constants"]["hbar"] == 1.054571817e-34
        assert "runtime_seconds" in summary

    def test_trajectories_with_ks(self, tmp_path):
        s = scenario_from_dict({
            "kind": "trajectories",
            "pilot": {"kind": "coherent_state", "omega": 1.0, "amplitude": [1.5]},
            "initial": {"sampling": "born", "n": 400},
            "time": {"t_final": 3.0, "dt": 1e-2, "record_every": 100},
            "seed": 5,
        })
        summary = run(s, tmp_path / "out")
        assert summary["n_trajectories"] == 400
        assert summary["ks_final"] < 1.63 / np.sqrt(400)
        header = (tmp_path / "out" / "trajectories.csv").read_text().splitlines()[0]
        assert header.split(",")[:2] == ["t", "x_0"]

    def test_relax_report(self, tmp_path):
        s = scenario_from_dict({
            "kind": "relax",
            "pilot": {"kind": "eigenstate_superposition", "omega": 1.0,
                      "terms": [{"n": 0, "re": 0.8}, {"n": 2, "re": 0.6}]},
            "ensemble": {"sampling": "born", "n": 500},
            "time": {"t_final": 0.5, "dt": 1e-2, "record_every": 25},
            "seed": 1,
        })
        summary = run(s, tmp_path / "out")
        report = json.loads((tmp_path / "out" / "relaxation.json").read_text())
        assert {"t", "H", "ks"} <= set(report["series"][0])
        assert summary["H_initial"] == report["series"][0]["H"]


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        payload = {
            "kind": "trajectories",
            "pilot": {"kind": "eigenstate_superposition", "omega": 1.0,
                      "terms": [{"n": 0, "re": 0.8}, {"n": 1, "im": 0.6}]},
            "initial": {"sampling": "born", "n": 64},
            "time": {"t_final": 1.0, "dt": 1e-2, "record_every": 20},
            "seed": 9,
        }
        s = scenario_from_dict(json.loads(json.dumps(payload)))
        run(s, tmp_path / "a")
        run(s, tmp_path / "b")
        assert (tmp_path / "a" / "trajectories.csv").read_bytes() == \
            (tmp_path / "b" / "trajectories.csv").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        payload = {
            "kind": "trajectories",
            "pilot": {"kind": "coherent_state", "omega": 1.0, "amplitude": [1.0]},
            "initial": {"sampling": "born", "n": 32},
            "time": {"t_final": 1.0, "dt": 1e-2, "record_every": 50},
        }
        s1 = scenario_from_dict(json.loads(json.dumps(payload)))
        s2 = scenario_from_dict(json.loads(json.dumps(payload)))
        s2.seed = 1234
        run(s1, tmp_path / "a")
        run(s2, tmp_path / "b")
        assert (tmp_path / "a" / "trajectories.csv").read_bytes() != \
            (tmp_path / "b" / "trajectories.csv").read_bytes()


class TestMainEntry:
    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        out = capsys.readouterr().out
        assert "hbar" in out and "CODATA" in out

    def test_kind_subcommand_mismatch(self, tmp_path, capsys):
        p = write_json(tmp_path, "s.json", MINIMAL_EVOLVE)
        code = main(["phases", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "scenario" in capsys.readouterr().err

    def test_selfgrav_end_to_end(self, tmp_path, capsys):
        p = write_json(tmp_path, "s.json", {
            "kind": "selfgrav", "sphere": {"mass": 1e-14, "radius": 1e-6}})
        code = main(["selfgrav", "--config", str(p),
                     "--out", str(tmp_path / "o")])
        assert code == 0
        assert (tmp_path / "o" / "summary.json").exists()

    def test_breach_sets_exit_code(self, tmp_path):
        payload = {
            "kind": "evolve",
            "pilot": {"kind": "eigenstate_superposition", "omega": 1.0,
                      "terms": [{"n": 0, "re": 0.7}, {"n": 1, "re": 0.7}]},
            "soliton": {"shape": "gaussian", "a0": 2.0, "center": [1.2]},
            "grid": {"points": 256, "lengths": 16.0},
            "time": {"t_final": 0.3, "dt": 1e-3, "record_every": 100},
        }
        p = write_json(tmp_path, "s.json", payload)
        code = main(["evolve", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == 2
        code = main(["evolve", "--config", str(p), "--out", str(tmp_path / "o2"),
                     "--breach-policy", "ignore"])
        assert code == 0

    def test_seed_override(self, tmp_path):
        payload = {
            "kind": "trajectories",
            "pilot": {"kind": "coherent_state", "omega": 1.0, "amplitude": [1.0]},
            "initial": {"sampling": "born", "n": 16},
            "time": {"t_final": 0.5, "dt": 1e-2, "record_every": 25},
            "seed": 0,
        }
        p = write_json(tmp_path, "s.json", payload)
        main(["trajectories", "--config", str(p), "--out", str(tmp_path / "a")])
        main(["trajectories", "--config", str(p), "--seed", "7",
              "--out", str(tmp_path / "b")])
        a = json.loads((tmp_path / "a" / "summary.json").read_text())
        b = json.loads((tmp_path / "b" / "summary.json").read_text())
        assert a["scenario"]["seed"] == 0
        assert b["scenario"]["seed"] == 7


class TestParser:
    def test_subcommands_exist(self):
        parser = build_parser()
        args = parser.parse_args(["evolve", "--config", "x.json"])
        assert args.command == "evolve"
        assert args.out == "out"
        args = parser.parse_args(["relax", "--config", "y.json", "--seed", "3"])
        assert args.seed == 3
