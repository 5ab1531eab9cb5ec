"""
Tests for the configuration grammar, runtime settings, command services and exit codes.
"""
import json
from pathlib import Path

import pytest

from main import main
from src.commands.fit import FitService
from src.commands.postprocess import PostprocessService
from src.commands.simulate import SimulateService, StudyService
from src.commands.validate import ValidateService
from src.config.config_parser import emit_config, parse_config, parse_text, with_overrides
from src.config.runtime_config import RuntimeConfig
from src.models.errors import SpecError
from src.testing.validators import validate_chain_directory, validate_error_record, validate_summary_report

CONFIG_TEXT = """\
# small model
[model]
outcome = y
x_cols = time
u_cont_cols = u1, u2
fe_cols = intercept, x1
re_cols = intercept
int_cols = intercept, time
C = 5
spline_basis = 0

[priors]
lambda = 0.5
a_sigma = 2.0
b_sigma = 1.5

[run]
iterations = 60
burn_in = 10
seed = 11
"""


@pytest.fixture
def log_dir(tmp_path, monkeypatch):
    directory = tmp_path / "logs"
    monkeypatch.setenv("PROFILE_LMM_LOG_DIR", str(directory))
    return directory


def _read_json(path: Path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestConfigGrammar:
    """Test parsing, emitting and line-numbered errors."""

    def test_parse_sections(self):
        config = parse_text(CONFIG_TEXT)
        assert config.spec.C == 5
        assert config.spec.u_cont_cols == ["u1", "u2"]
        assert config.hyper.lam == 0.5
        assert config.run.iterations == 60
        assert config.run.burn_in == 10

    def test_emit_then_parse_preserves_settings(self):
        config = parse_text(CONFIG_TEXT)
        again = parse_text(emit_config(config))
        assert again.spec.as_dict() == config.spec.as_dict()
        assert again.hyper.as_dict() == config.hyper.as_dict()
        assert again.run == config.run
        assert again.postprocess == config.postprocess

    def test_truncation_below_two_names_the_line(self):
        text = CONFIG_TEXT.replace("C = 5", "C = 1")
        with pytest.raises(SpecError) as info:
            parse_text(text)
        assert info.value.line == 9
        assert "'C' must be >= 2" in str(info.value)

    def test_unknown_key_names_the_line(self):
        text = CONFIG_TEXT.replace("seed = 11", "sed = 11")
        with pytest.raises(SpecError, match="unknown key 'sed'") as info:
            parse_text(text)
        assert info.value.line == 20

    def test_unknown_section(self):
        with pytest.raises(SpecError, match="unknown section") as info:
            parse_text("[sampler]\nC = 3\n")
        assert info.value.line == 1

    def test_duplicate_key(self):
        with pytest.raises(SpecError, match="duplicate key"):
            parse_text("[run]\nseed = 1\nseed = 2\n")

    def test_parse_config_file(self, tmp_path):
        path = tmp_path / "model.cfg"
        path.write_text("[model]\nu_cont_cols = u1\n", encoding="utf-8")
        spec, hyper, run = parse_config(path)
        assert spec.u_cont_cols == ["u1"]
        assert hyper.lam == 0.01
        assert run.iterations == 3000

    def test_parse_config_needs_model_section(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[run]\nseed = 3\n", encoding="utf-8")
        with pytest.raises(SpecError, match="no \\[model\\] section"):
            parse_config(path)
        with pytest.raises(SpecError, match="not found"):
            parse_config(tmp_path / "absent.cfg")

    def test_overrides_ignore_none(self):
        config = with_overrides(parse_text(CONFIG_TEXT), iterations=100, burn_in=None, C=8, subset_size=50)
        assert config.run.iterations == 100
        assert config.run.burn_in == 10
        assert config.spec.C == 8
        assert config.postprocess.subset_size == 50

    def test_level_override_outside_unit_interval(self):
        with pytest.raises(SpecError, match="credible level"):
            with_overrides(parse_text(CONFIG_TEXT), level=1.5)


class TestRuntimeConfig:
    """Test environment-driven runtime settings."""

    def test_defaults(self, monkeypatch):
        for name in ("PROFILE_LMM_WORKERS", "PROFILE_LMM_PROGRESS_EVERY", "PROFILE_LMM_MAX_EXACT_PAM"):
            monkeypatch.delenv(name, raising=False)
        runtime = RuntimeConfig()
        assert runtime.workers == 1
        assert runtime.progress_every == 100
        assert runtime.max_exact_pam == 12000

    def test_environment_overrides(self, monkeypatch, tmp_path):
        monkeypatch.setenv("PROFILE_LMM_WORKERS", "3")
        monkeypatch.setenv("PROFILE_LMM_LOG_DIR", str(tmp_path))
        runtime = RuntimeConfig()
        assert runtime.workers == 3
        assert runtime.as_dict()["log_dir"] == str(tmp_path)

    def test_update_skips_none(self):
        runtime = RuntimeConfig()
        runtime.update(workers=None, max_exact_pam=50)
        assert runtime.max_exact_pam == 50
        assert runtime.workers == RuntimeConfig().workers


class TestExitCodes:
    """Test the exit code of each error category and the error record."""

    def test_unknown_subcommand(self, log_dir):
        assert main(["train", "--output", "x"]) == 1

    def test_missing_required_argument(self, log_dir):
        assert main(["fit", "--output", "x"]) == 1

    def test_missing_data_file(self, log_dir, tmp_path):
        config = tmp_path / "model.cfg"
        config.write_text(CONFIG_TEXT, encoding="utf-8")
        output = tmp_path / "out"
        code = main(["--progress", "false", "fit", "--config", str(config),
                     "--data", str(tmp_path / "missing.csv"), "--output", str(output)])
        assert code == 2
        record = _read_json(output / "error.json")
        assert validate_error_record(record) == []
        assert record["error_type"] == "DataError"
        assert record["exit_code"] == 2

    def test_bad_configuration_value(self, log_dir, tmp_path):
        config = tmp_path / "model.cfg"
        config.write_text(CONFIG_TEXT.replace("C = 5", "C = 1"), encoding="utf-8")
        output = tmp_path / "out"
        code = main(["--progress", "false", "fit", "--config", str(config),
                     "--data", str(tmp_path / "data.csv"), "--output", str(output)])
        assert code == 1
        record = _read_json(output / "error.json")
        assert record["error_type"] == "SpecError"
        assert "line 9" in record["message"]

    def test_fit_without_model_section(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text("[run]\niterations = 10\nburn_in = 2\n", encoding="utf-8")
        result = FitService(RuntimeConfig()).execute(tmp_path / "out", config_path=config,
                                                     data_path=tmp_path / "data.csv")
        assert result["exit_code"] == 1
        assert "[model]" in result["error"]

    def test_validation_harness_too_large(self, tmp_path):
        result = ValidateService(RuntimeConfig()).execute(tmp_path / "out", iterations=20, burn_in=5, n_obs=31)
        assert result["exit_code"] == 1
        assert validate_error_record(_read_json(tmp_path / "out" / "error.json")) == []


class TestPipeline:
    """Test simulate, fit and postprocess end to end on a small cohort."""

    SCENARIO = """\
[run]
iterations = 40
burn_in = 10
seed = 5

[postprocess]
k_max = 4
subset_size = 60
pdf = false

[scenario]
m = 30
seed = 17
"""

    def test_simulate_writes_fit_config(self, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(self.SCENARIO, encoding="utf-8")
        result = SimulateService(RuntimeConfig()).execute(tmp_path / "sim", config_path=config)
        assert result["exit_code"] == 0
        fitted = parse_text(Path(result["paths"]["fit_config"]).read_text(encoding="utf-8"))
        assert fitted.spec is not None
        assert fitted.run.iterations == 40
        assert (tmp_path / "sim" / "data.csv").exists()
        assert (tmp_path / "sim" / "run_log.json").exists()

    def test_full_pipeline_through_main(self, log_dir, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(self.SCENARIO, encoding="utf-8")
        sim_dir, fit_dir, post_dir = tmp_path / "sim", tmp_path / "fit", tmp_path / "post"

        assert main(["--progress", "false", "simulate", "--config", str(config), "--output", str(sim_dir)]) == 0
        assert main(["--progress", "false", "fit", "--config", str(sim_dir / "fit.cfg"),
                     "--data", str(sim_dir / "data.csv"), "--output", str(fit_dir), "--C", "6"]) == 0
        chain_dir = fit_dir / "chain"
        assert validate_chain_directory(chain_dir) == []
        effective = parse_text((fit_dir / "effective_config.cfg").read_text(encoding="utf-8"))
        assert effective.spec.C == 6

        assert main(["--progress", "false", "postprocess", "--config", str(config),
                     "--chain", str(chain_dir), "--output", str(post_dir)]) == 0
        summary = _read_json(post_dir / "summary.json")
        assert validate_summary_report(summary) == []
        assert summary["settings"]["subset_size"] == 60
        assert 2 <= summary["clustering"]["k"] <= 4
        assert not (post_dir / "error.json").exists()

    def test_study_writes_rows_and_summary(self, tmp_path):
        config = tmp_path / "study.cfg"
        config.write_text("[run]\niterations = 20\nburn_in = 5\nseed = 3\n\n[postprocess]\nk_max = 4\n\n"
                          "[scenario]\nm = 25\nseed = 2\nwith_benchmarks = false\nstudy_subset_size = none\n",
                          encoding="utf-8")
        result = StudyService(RuntimeConfig()).execute(tmp_path / "study", config_path=config, n_reps=1, C=6)
        assert result["exit_code"] == 0
        assert (tmp_path / "study" / "study_rows.csv").exists()
        assert "median_ari" in result["metrics"]

    def test_postprocess_missing_chain(self, tmp_path):
        result = PostprocessService(RuntimeConfig()).execute(tmp_path / "post", chain_dir=tmp_path / "nothing")
        assert result["exit_code"] == 2
