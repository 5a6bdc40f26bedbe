"""
Command-line interface tests: exit codes and the run/verify/history surface.
"""
import json

import pytest

from ramanmag import __version__
from ramanmag.main import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_TASK_FAILED, build_parser, main
from ramanmag.sweeps.presets import PRESET_NAMES


@pytest.fixture
def config_file(tmp_path, threshold_config_dict):
    path = tmp_path / "shift.json"
    path.write_text(json.dumps(threshold_config_dict))
    return path


class TestParser:
    def test_commands(self):
        parser = build_parser()
        args = parser.parse_args(["run", "cfg.json", "--out", "o", "--workers", "2"])
        assert (args.command, args.config, args.out, args.workers) == ("run", "cfg.json", "o", 2)
        args = parser.parse_args(["verify", "cfg.json", "base.csv", "--rtol", "0.1"])
        assert args.rtol == 0.1
        assert parser.parse_args(["history"]).limit == 20

    def test_preset_choices(self):
        parser = build_parser()
        for name in PRESET_NAMES:
            assert parser.parse_args(["preset", name]).name == name
        with pytest.raises(SystemExit):
            parser.parse_args(["preset", "figure9"])

    def test_log_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("RAMANMAG_LOG_LEVEL", "debug")
        assert build_parser().parse_args(["history"]).log_level == "DEBUG"

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            main(["--version"])
        assert __version__ in capsys.readouterr().out


class TestRunCommand:
    """ramanmag run"""

    def test_success(self, tmp_path, config_file, capsys):
        out = tmp_path / "out"
        assert main(["run", str(config_file), "--out", str(out), "--workers", "2"]) == EXIT_OK
        assert (out / "threshold_shift.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "manifest.json").exists()
        assert "threshold_shift.csv" in capsys.readouterr().out

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"kind": "response", "kappa_r": {"value": 75, "unit": "MHz"},
                                    "drive": {"rabi": {"value": [], "unit": "MHz"}}}))
        assert main(["run", str(path)]) == EXIT_CONFIG_ERROR
        assert "drive.rabi: empty" in capsys.readouterr().err

    def test_malformed_json_exits_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["run", str(path)]) == EXIT_CONFIG_ERROR

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG_ERROR

    def test_bad_worker_count_exits_2(self, config_file):
        assert main(["run", str(config_file), "--workers", "0"]) == EXIT_CONFIG_ERROR

    def test_task_failure_exits_1(self, tmp_path, config_file, monkeypatch):
        from ramanmag.sweeps import coordinator

        def broken(*args, **kwargs):
            raise RuntimeError("solver exploded")

        monkeypatch.setattr(coordinator, "threshold_pump", broken)
        assert main(["run", str(config_file), "--out", str(tmp_path / "out")]) == EXIT_TASK_FAILED


class TestVerifyCommand:
    """ramanmag verify"""

    def test_pass_and_fail(self, tmp_path, config_file, capsys):
        out = tmp_path / "out"
        assert main(["run", str(config_file), "--out", str(out)]) == EXIT_OK
        baseline = out / "threshold_shift.csv"
        assert main(["verify", str(config_file), str(baseline)]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out

        text = baseline.read_text().replace("7.50000000000e+07", "7.60000000000e+07", 1)
        baseline.write_text(text)
        assert main(["verify", str(config_file), str(baseline)]) == EXIT_TASK_FAILED
        assert "kappa_r_hz" in capsys.readouterr().out

    def test_missing_baseline_exits_2(self, tmp_path, config_file):
        assert main(["verify", str(config_file), str(tmp_path / "none.csv")]) == EXIT_CONFIG_ERROR


class TestHistoryCommand:
    def test_lists_recorded_runs(self, tmp_path, config_file, capsys):
        assert main(["history"]) == EXIT_OK
        assert "no runs recorded" in capsys.readouterr().out

        main(["run", str(config_file), "--out", str(tmp_path / "out")])
        capsys.readouterr()
        assert main(["history", "--limit", "5"]) == EXIT_OK
        listing = capsys.readouterr().out
        assert "small-shift" in listing
        assert "completed" in listing
