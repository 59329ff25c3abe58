from __future__ import annotations

import json

import pytest

from splab import main as cli
from splab.report import ExperimentReport

QUANTITIES = "experiment = quantities\nseed = 1\ndim = 6\nn_grid = 100\nthreads = 1\n"


class TestMain:
    def test_csv_to_stdout(self, write_config, capsys):
        assert cli.main(["quantities", "--config", str(write_config(QUANTITIES))]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("profile,dim,a,gap,j1,j2,n,g_J,r_J")
        assert len(out.splitlines()) == 2

    def test_flags_override_config(self, write_config, tmp_path):
        target = tmp_path / "report.json"
        code = cli.main(
            ["quantities", "--config", str(write_config(QUANTITIES)), "--seed", "5", "--format", "json", "--out", str(target)]
        )
        assert code == 0
        payload = json.loads(target.read_text(encoding="utf-8"))
        assert payload["config"]["seed"] == 5
        assert payload["experiment"] == "quantities"

    def test_config_error_exit_code(self, write_config, capsys):
        path = write_config("experiment = quantities\nseed = 1\ncolour = red\n")
        assert cli.main(["quantities", "--config", str(path)]) == 2
        assert "colour" in capsys.readouterr().err

    def test_invalid_model_exit_code(self, write_config):
        path = write_config("experiment = quantities\nseed = 1\nprofile = spiked\ndim = 4\n")
        assert cli.main(["quantities", "--config", str(path)]) == 2

    def test_split_equal_spikes_exit_code(self, write_config):
        path = write_config("experiment = quantities\nseed = 1\nprofile = spiked\ndim = 12\nj2 = 1\n")
        assert cli.main(["quantities", "--config", str(path)]) == 2

    def test_missing_seed(self, write_config):
        path = write_config("experiment = quantities\n")
        assert cli.main(["quantities", "--config", str(path)]) == 2
        assert cli.main(["quantities", "--config", str(path), "--seed", "3", "--threads", "1"]) == 0

    def test_violation_exit_code(self, write_config, monkeypatch):
        def broken(config):
            report = ExperimentReport("perturbation-check", ["index"])
            report.violations = 1
            return report

        monkeypatch.setattr(cli, "run_experiment", broken)
        path = write_config("experiment = perturbation-check\nseed = 1\n")
        assert cli.main(["perturbation-check", "--config", str(path)]) == 3

    def test_unknown_experiment(self, write_config):
        with pytest.raises(SystemExit) as exc:
            cli.main(["plots", "--config", str(write_config(QUANTITIES))])
        assert exc.value.code == 2
