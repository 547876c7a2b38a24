import json

import pytest

from replab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheckFei:
    def test_json_certificate(self, capsys):
        code, out, _ = run(
            capsys, "check-fei", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.4",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["holds"] is True
        assert payload["witness"]["v_bar"] == pytest.approx(0.6857142857142857)
        assert payload["witness"]["s_star"] == ["Pass"]

    def test_sweep_csv(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "check-fei", "--binary-precision", "0.75", "--kappa", "0.2",
            "--sweep", "delta=0.30:0.45:0.01", "--out", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "fei_sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "delta,holds,slack,v_bar"
        holds = [row.split(",")[1] for row in lines[1:]]
        deltas = [float(row.split(",")[0]) for row in lines[1:]]
        # frontier at 4/11: flip between the 0.36 and 0.37 cells
        flip = next(i for i, h in enumerate(holds) if h == "true")
        assert deltas[flip] == pytest.approx(0.37, abs=1e-9)
        assert holds[flip - 1] == "false"
        assert (tmp_path / "manifest.json").exists()

    def test_validation_error_exit_code(self, capsys):
        code, _, err = run(
            capsys, "check-fei", "--binary-precision", "0.75",
            "--kappa", "1.5", "--delta", "0.4",
        )
        assert code == 2
        assert json.loads(err)["error"] == "ValidationError"

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "model.json"
        cfg.write_text(json.dumps({
            "binary_precision": 0.75, "kappa": 0.2, "delta": 0.3,
            "pi0": 0.3, "c": 0.05,
        }))
        code, out, _ = run(capsys, "check-fei", "--config", str(cfg))
        assert code == 0 and json.loads(out)["holds"] is False
        code, out, _ = run(capsys, "check-fei", "--config", str(cfg), "--delta", "0.4")
        assert code == 0 and json.loads(out)["holds"] is True

    def test_toml_config_with_explicit_signals(self, capsys, tmp_path):
        cfg = tmp_path / "model.toml"
        cfg.write_text(
            "kappa = 0.2\ndelta = 0.4\npi0 = 0.3\nc = 0.05\n"
            "[[signals]]\nname = \"Fail\"\nf0 = 0.75\nf1 = 0.25\n"
            "[[signals]]\nname = \"Pass\"\nf0 = 0.25\nf1 = 0.75\n"
        )
        code, out, _ = run(capsys, "check-fei", "--config", str(cfg))
        assert code == 0
        assert json.loads(out)["holds"] is True

    def test_config_parse_error(self, capsys, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        code, _, err = run(capsys, "check-fei", "--config", str(cfg))
        assert code == 2
        assert json.loads(err)["error"] == "ConfigParse"


class TestHorizon:
    def test_reports_t_and_gap(self, capsys):
        code, out, _ = run(
            capsys, "horizon", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.3",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["horizon_T"] == 8
        assert payload["min_gap"] == pytest.approx(0.14, abs=1e-9)

    def test_fei_holding_instance_is_an_error(self, capsys):
        code, _, err = run(
            capsys, "horizon", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.4",
        )
        assert code == 2
        assert json.loads(err)["error"] == "FeiHoldsNoHorizon"


class TestConstructVerifySimulate:
    @pytest.fixture()
    def automaton_file(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "construct", "--kind", "non-efe", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.5", "--pi0", "0.3", "--c", "0.05",
            "--out", str(tmp_path),
        )
        assert code == 0
        return tmp_path / "automaton-non-efe.json"

    def test_verify_passes_on_construction(self, capsys, automaton_file):
        code, out, _ = run(capsys, "verify", "--automaton", str(automaton_file))
        assert code == 0
        assert out.startswith("PASSED")

    def test_verify_corrupted_automaton_exits_3(self, capsys, automaton_file, tmp_path):
        payload = json.loads(automaton_file.read_text())
        payload["states"][0]["effort_prob"] = min(
            1.0, payload["states"][0]["effort_prob"] + 0.05
        )
        bad = tmp_path / "corrupted.json"
        bad.write_text(json.dumps(payload))
        code, out, _ = run(capsys, "verify", "--automaton", str(bad))
        assert code == 3
        assert out.startswith("FAILED")

    def test_simulate_outputs_and_reproducibility(self, capsys, automaton_file, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out_dir in (out_a, out_b):
            code, _, _ = run(
                capsys, "simulate", "--automaton", str(automaton_file),
                "--paths", "500", "--horizon", "60", "--seed", "7",
                "--per-period-csv", "--out", str(out_dir),
            )
            assert code == 0
        stats_a = (out_a / "simulation_stats.json").read_bytes()
        stats_b = (out_b / "simulation_stats.json").read_bytes()
        assert stats_a == stats_b
        csv_a = (out_a / "per_period.csv").read_bytes()
        assert csv_a == (out_b / "per_period.csv").read_bytes()
        header = csv_a.decode().splitlines()[0]
        assert header == "t,mean_effort,replace_rate,mean_belief,favorable_replacements"
        manifest_a = json.loads((out_a / "manifest.json").read_text())
        manifest_b = json.loads((out_b / "manifest.json").read_text())
        assert manifest_a["config_hash"] == manifest_b["config_hash"]

    def test_missing_automaton_file(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "verify", "--automaton", str(tmp_path / "missing.json")
        )
        assert code == 2
        assert json.loads(err)["error"] == "FileNotFound"


class TestBoundsCommands:
    def test_bound_outside_option(self, capsys):
        code, out, _ = run(
            capsys, "bound-outside-option", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.3", "--pi0", "0.3", "--c", "0.05",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["horizon_T"] == 8
        assert payload["bound_value"] == pytest.approx(0.9913494616, abs=1e-6)

    def test_bound_requires_failing_fei(self, capsys):
        code, _, err = run(
            capsys, "bound-outside-option", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.4",
        )
        assert code == 2
        assert json.loads(err)["error"] == "FeiHoldsNoBound"

    def test_bound_sweep_csv(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "bound-sweep", "--binary-precision", "0.75",
            "--kappa", "0.2", "--delta", "0.3", "--pi0", "0.3", "--c", "0.05",
            "--pi0-grid", "0.3,0.03,0.003", "--c-grid", "0,0.05",
            "--out", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "bound_sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "pi0,c,T,eta_star,bound"
        assert len(lines) == 7


class TestPhaseSweep:
    def test_dichotomy_table(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "phase-sweep", "--binary-precision", "0.75", "--kappa", "0.2",
            "--delta", "0.30:0.45:0.01", "--pi0", "0.3", "--c", "0.05",
            "--out", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "phase_sweep.csv").read_text().strip().splitlines()
        assert lines[0].split(",") == [
            "binary_precision", "kappa", "delta", "pi0", "c", "fei_holds",
            "fe_construction_verified", "non_efe_construction_verified",
            "outside_option_bound",
        ]
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 16  # inclusive endpoints
        for row in rows:
            if row[5] == "true":
                assert row[6] == "true" and row[7] == "true" and row[8] == ""
            else:
                assert row[6] == "" and row[7] == "" and float(row[8]) > 0
        flips = [float(r[2]) for i, r in enumerate(rows[1:], 1)
                 if rows[i - 1][5] != r[5]]
        assert flips == [pytest.approx(0.37, abs=1e-9)]

    def test_rows_ordered_by_grid_index(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("REPLAB_THREADS", "3")
        code, _, _ = run(
            capsys, "phase-sweep", "--binary-precision", "0.75",
            "--kappa", "0.1:0.3:0.1", "--delta", "0.4:0.6:0.1",
            "--pi0", "0.3", "--c", "0.05", "--out", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "phase_sweep.csv").read_text().strip().splitlines()
        keys = [(float(r.split(",")[1]), float(r.split(",")[2])) for r in lines[1:]]
        assert keys == sorted(keys)


class TestArgparseContract:
    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_model_inputs_is_config_error(self, capsys):
        code, _, err = run(capsys, "check-fei", "--kappa", "0.2", "--delta", "0.4")
        assert code == 2
        assert json.loads(err)["error"] == "ConfigParse"
