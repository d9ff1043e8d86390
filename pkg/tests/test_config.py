"""Tests for pydantic validation in AnalysisConfig."""

import pytest
from pydantic import ValidationError

from dissiflow.config import AnalysisConfig, BasinConfig, LoggingConfig, ToleranceConfig
from dissiflow.core.domain import DomainKind
from dissiflow.exceptions import ConfigError, ExpressionError


class TestAnalysisConfigDefaults:
    """Tests for the default configuration."""

    def test_valid_default_config(self):
        config = AnalysisConfig()
        assert config.flow.builtin == "cylinder"
        assert config.budgets.max_returns == 8
        assert config.tolerances.method == "RK45"
        assert config.logging.level == "INFO"

    def test_default_flow_builds(self):
        spec = AnalysisConfig().build_flow()
        assert spec.name == "cylinder"
        assert spec.domain.kind == DomainKind.BOX

    def test_integrator_uses_named_tolerance(self):
        config = AnalysisConfig()
        assert config.integrator("census").tol == config.tolerances.census
        assert config.integrator().tol == config.tolerances.integration


class TestFromDict:
    """Tests for AnalysisConfig.from_dict error mapping."""

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError) as exc_info:
            AnalysisConfig.from_dict({"budgets": {"n_seeds": 0}})
        error = exc_info.value
        assert error.key == "budgets.n_seeds"
        assert error.exit_code == 64
        assert error.to_dict()["details"]["key"] == "budgets.n_seeds"

    def test_builtin_and_expressions_conflict(self):
        data = {"flow": {"builtin": "rotation", "expressions": ["1", "0", "0"]}}
        with pytest.raises(ConfigError) as exc_info:
            AnalysisConfig.from_dict(data)
        assert exc_info.value.key.startswith("flow")

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigError):
            AnalysisConfig.from_dict({"tolerances": {"method": "euler"}})

    def test_method_normalized(self):
        config = AnalysisConfig.from_dict({"tolerances": {"method": "dop853"}})
        assert config.tolerances.method == "DOP853"

    def test_unknown_sections_ignored(self):
        config = AnalysisConfig.from_dict({"plots": {"dpi": 300}})
        assert config.seed == 0


class TestSubConfigs:
    """Tests for the nested models."""

    def test_transient_below_horizon(self):
        with pytest.raises(ValidationError):
            BasinConfig(t_transient=100.0, horizon=50.0)

    def test_basin_minimum_samples(self):
        with pytest.raises(ValidationError):
            BasinConfig(n_samples=50)

    def test_tolerance_upper_bound(self):
        with pytest.raises(ValidationError):
            ToleranceConfig(integration=0.1)

    @pytest.mark.parametrize("level", ["debug", "Info", "WARNING"])
    def test_log_level_case_insensitive(self, level):
        assert LoggingConfig(level=level).level == level.upper()

    def test_invalid_log_level(self):
        with pytest.raises(ValidationError) as exc_info:
            LoggingConfig(level="LOUD")
        assert "level" in str(exc_info.value)

    def test_surgery_flags(self):
        config = AnalysisConfig.from_dict(
            {"surgery": {"lam": 0.5, "mu": 1.6, "gamma": 0.1, "tau": 10.0}}
        )
        assert config.surgery.has_saddle
        assert not config.surgery.has_budget


class TestFromToml:
    """Tests for loading TOML files."""

    def test_missing_file_uses_defaults(self, tmp_path):
        config = AnalysisConfig.from_toml(str(tmp_path / "absent.toml"))
        assert config == AnalysisConfig()

    def test_loads_values(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            'seed = 7\n[flow]\nbuiltin = "rotation"\n[budgets]\nn_seeds = 12\n', encoding="utf-8"
        )
        config = AnalysisConfig.from_toml(str(path))
        assert config.seed == 7
        assert config.flow.builtin == "rotation"
        assert config.budgets.n_seeds == 12

    def test_parse_error_is_config_error(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[flow\nbuiltin = ", encoding="utf-8")
        with pytest.raises(ConfigError) as exc_info:
            AnalysisConfig.from_toml(str(path))
        assert exc_info.value.exit_code == 64

    def test_output_dir_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env-out"))
        config = AnalysisConfig.from_toml(str(tmp_path / "absent.toml"))
        assert config.output.directory == str(tmp_path / "env-out")


class TestOverrides:
    """Tests for command-line overrides and the config hash."""

    def test_overrides_apply(self):
        config = AnalysisConfig().with_overrides(seed=3, out="elsewhere", threads=4)
        assert config.seed == 3
        assert config.output.directory == "elsewhere"
        assert config.budgets.threads == 4

    def test_none_keeps_values(self):
        config = AnalysisConfig(seed=5)
        assert config.with_overrides() == config

    def test_overrides_are_validated(self):
        with pytest.raises(ConfigError):
            AnalysisConfig().with_overrides(threads=0)

    def test_hash_ignores_output_and_logging(self):
        base = AnalysisConfig()
        moved = base.with_overrides(out="somewhere-else")
        quiet = AnalysisConfig.from_dict({"logging": {"level": "ERROR"}})
        assert base.config_hash() == moved.config_hash() == quiet.config_hash()
        assert len(base.config_hash()) == 64

    def test_hash_tracks_analysis_inputs(self):
        assert AnalysisConfig().config_hash() != AnalysisConfig(seed=1).config_hash()


class TestExpressionFlows:
    """Tests for flows given as component expressions."""

    def test_expression_flow_on_torus(self):
        config = AnalysisConfig.from_dict(
            {
                "flow": {
                    "expressions": ["1.0", "a * sin(2*pi*x)", "0"],
                    "constants": {"a": 0.1},
                    "name": "wavy",
                    "sections": [{"anchor": [0, 0, 0], "normal": [1, 0, 0]}],
                }
            }
        )
        spec = config.build_flow()
        assert spec.name == "wavy"
        assert spec.domain.kind == DomainKind.FLAT_TORUS
        assert len(spec.sections) == 1
        assert spec.divergence is not None

    def test_malformed_expression(self):
        config = AnalysisConfig.from_dict({"flow": {"expressions": ["1 + foo", "0", "1"]}})
        with pytest.raises(ExpressionError) as exc_info:
            config.build_flow()
        assert exc_info.value.exit_code == 64

    def test_box_without_bounds(self):
        config = AnalysisConfig.from_dict(
            {"flow": {"expressions": ["1", "0", "0"]}, "domain": {"kind": "box"}}
        )
        with pytest.raises(ConfigError) as exc_info:
            config.build_flow()
        assert exc_info.value.key == "domain"

    def test_unknown_builtin(self):
        config = AnalysisConfig.from_dict({"flow": {"builtin": "lorenz"}})
        with pytest.raises(ConfigError) as exc_info:
            config.build_flow()
        assert exc_info.value.key == "flow.builtin"
