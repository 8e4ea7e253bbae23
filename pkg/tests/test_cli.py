import csv
import io
import json
import re

import pytest

from flyingcat import netstates
from flyingcat.cli import ConfigError, build_config, main, parse_frequency, parse_time

FAST = {
    "tradeoff": ["--set", "points=9"],
    "optimize-alpha": [],
    "check": [],
    "ghz": [],
    "tetra-prepare": [],
    "tetra-decode": ["--set", "sigma=[1,-1,1]", "--set", "kind=X"],
    "witness": ["--set", "eta=[0.05]", "--set", "points=3"],
    "teleport": ["--shots", "10000", "--set", "cooperative_messages=2"],
    "feasibility": [],
    "loss-budget": [],
    "selfcheck": ["--set", "mc_shots=2000"],
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# flyingcat.")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


class TestUnits:
    def test_frequency(self):
        assert parse_frequency("chi", "1 MHz") == pytest.approx(2e6 * 3.141592653589793)
        assert parse_frequency("chi", "-1.05 MHz") < 0
        assert parse_frequency("chi", "2 rad/s") == 2.0

    def test_bare_number_rejected(self):
        with pytest.raises(ConfigError, match="chi"):
            parse_frequency("chi", 1.05)

    def test_time(self):
        assert parse_time("tau", "500 ns") == pytest.approx(5e-7)
        assert parse_time("tau", "6 µs") == pytest.approx(6e-6)

    def test_bad_unit(self):
        with pytest.raises(ConfigError, match="tau"):
            parse_time("tau", "5 parsecs")


class TestConfig:
    def test_defaults(self):
        cfg = build_config("ghz", {})
        assert cfg.params["alpha"] == 1.0 and cfg.seed == 0

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="alpah"):
            build_config("ghz", {"alpah": 1.0})

    def test_wrong_command(self):
        with pytest.raises(ConfigError):
            build_config("ghz", {"command": "teleport"})

    def test_yaml_position(self, tmp_path, capsys):
        f = tmp_path / "bad.yaml"
        f.write_text("alpha: 1.0\neta12: 0.1: 2\n")
        code, _, err = run(capsys, "ghz", "--config", str(f))
        assert code == 2
        assert re.search(r"bad\.yaml:2:\d+:", err)

    def test_yaml_scenario(self, tmp_path, capsys):
        f = tmp_path / "s.yaml"
        f.write_text("command: ghz\nalpha: 2.0\neta12: 0.01\neta23: 0.01\nseed: 3\n")
        code, out, _ = run(capsys, "ghz", "--config", str(f))
        assert code == 0
        assert float(table(out)[0]["fidelity"]) == pytest.approx(0.926, abs=1e-3)

    def test_unknown_field_exit(self, capsys):
        code, _, err = run(capsys, "ghz", "--set", "alpah=2")
        assert code == 2 and "alpah" in err

    def test_bad_unit_exit(self, capsys):
        code, _, err = run(capsys, "feasibility", "--set", "tau=500 furlongs")
        assert code == 2 and "tau" in err

    def test_validation_exit(self, capsys):
        code, _, err = run(capsys, "ghz", "--set", "eta12=1.5")
        assert code == 3 and "validation" in err


class TestCommands:
    @pytest.mark.parametrize("command", sorted(FAST))
    def test_runs(self, command, capsys):
        code, out, _ = run(capsys, command, *FAST[command])
        assert code == 0
        assert table(out)

    def test_json(self, capsys):
        code, out, _ = run(capsys, "loss-budget", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["provenance"]["seed"] == 0
        assert doc["columns"] == ["eta_trans", "eta_circ", "eta", "saturated"]

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "o.csv"
        assert main(["loss-budget", "--out", str(path)]) == 0
        assert path.read_text().startswith("# flyingcat.loss-budget")

    def test_tradeoff_interior_minimum(self, capsys):
        _, out, _ = run(capsys, "tradeoff", "--set", "points=29")
        rows = table(out)
        i = [r["is_min"] for r in rows].index("1")
        assert 0 < i < len(rows) - 1

    def test_feasibility_rows(self, capsys):
        _, out, _ = run(capsys, "feasibility")
        rows = {r["quantity"]: r for r in table(out)}
        assert float(rows["bandwidth_term"]["computed"]) == pytest.approx(0.046, rel=0.05)
        assert float(rows["eps_qubit"]["computed"]) == pytest.approx(0.083, rel=0.01)

    def test_witness_columns(self, capsys):
        _, out, _ = run(capsys, *(["witness"] + FAST["witness"]))
        assert list(table(out)[0]) == ["alpha", "eta", "F_model", "F_simulated", "F_witness"]

    def test_decode_correction(self, capsys):
        _, out, _ = run(capsys, *(["tetra-decode"] + FAST["tetra-decode"]))
        assert table(out)[0]["correction"] == "IIIIIX"


class TestSelfcheck:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "selfcheck", *FAST["selfcheck"])
        assert code == 0
        assert all(r["passed"] == "1" for r in table(out))

    def test_corrupted_table_fails(self, capsys, monkeypatch):
        bad = [list(r) for r in netstates.TABLE_II]
        bad[0][0] *= -1
        monkeypatch.setattr(netstates, "TABLE_II", tuple(tuple(r) for r in bad))
        code, out, _ = run(capsys, "selfcheck", *FAST["selfcheck"])
        assert code == 4
        rows = {r["suite"]: r["passed"] for r in table(out)}
        assert rows["decoder"] == "0"


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["check", "--set", "mode=sampled", "--shots", "20000"],
        ["ghz", "--set", "mode=sampled", "--shots", "20000"],
        ["tetra-prepare", "--set", "mode=sampled", "--shots", "3000"],
    ])
    def test_repeat_and_workers(self, argv, capsys):
        outs = []
        for workers in ("1", "1", "4"):
            code, out, _ = run(capsys, *argv, "--seed", "17", "--workers", workers)
            assert code == 0
            outs.append(out)
        assert outs[0] == outs[1] == outs[2]

    def test_seed_matters(self, capsys):
        a = run(capsys, "ghz", "--set", "mode=sampled", "--shots", "5000", "--seed", "1")[1]
        b = run(capsys, "ghz", "--set", "mode=sampled", "--shots", "5000", "--seed", "2")[1]
        assert a != b
