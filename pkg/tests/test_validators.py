"""Tests for probe validation of vector fields."""

import numpy as np
import pytest

from dissiflow.core.domain import DomainSpec
from dissiflow.core.expressions import compile_field
from dissiflow.exceptions import ConfigError
from dissiflow.validators import FieldValidationError, FieldValidator, ProbeValidationError


class TestFieldValidator:
    """Tests for FieldValidator class."""

    def test_builtin_flows_pass(self, cylinder, rotation, catmap):
        validator = FieldValidator(n_probes=50)
        for spec in (cylinder, rotation, catmap):
            validator.validate(spec)  # Should not raise

    def test_expression_field_passes(self):
        spec = compile_field(["1.0", "0.1 * sin(2*pi*x)", "0.2 * sin(2*pi*z)"], DomainSpec.flat_torus())
        assert FieldValidator(n_probes=30).find_problems(spec) == []

    def test_probes_are_reproducible(self, cylinder):
        first = FieldValidator(n_probes=10, seed=2).probes(cylinder)
        second = FieldValidator(n_probes=10, seed=2).probes(cylinder)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (10, 3)

    def test_zero_field_is_singular(self):
        spec = compile_field(["0", "0", "0"], DomainSpec.flat_torus())
        validator = FieldValidator(n_probes=20)
        with pytest.raises(FieldValidationError) as exc_info:
            validator.validate(spec)

        error = exc_info.value
        assert [e.check for e in error.probe_errors] == ["nonsingular"]
        assert error.probe_errors[0].error_count == 20
        assert error.probe_errors[0].error_percentage == 1.0
        assert len(error.probe_errors[0].sample_points) == 10

    def test_nan_values_reported(self):
        """sqrt of a negative number is NaN everywhere on the unit torus."""
        spec = compile_field(["1", "sqrt(x - 2)", "0"], DomainSpec.flat_torus())
        with np.errstate(invalid="ignore"):
            problems = FieldValidator(n_probes=15).find_problems(spec)
        checks = {p.check: p for p in problems}
        assert "finite" in checks
        assert checks["finite"].error_count == 15
        assert "nonsingular" not in checks

    def test_wrong_jacobian_detected(self, cylinder):
        broken = cylinder.model_copy(update={"jacobian": lambda x: np.zeros((3, 3))})
        checks = [p.check for p in FieldValidator(n_probes=20).find_problems(broken)]
        assert "jacobian" in checks

    def test_wrong_divergence_detected(self, cylinder):
        broken = cylinder.model_copy(update={"divergence": lambda x: 0.0})
        problems = FieldValidator(n_probes=20).find_problems(broken)
        assert [p.check for p in problems] == ["divergence"]

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            FieldValidator(n_probes=0)
        with pytest.raises(ValueError):
            FieldValidator(tolerance=0.0)


class TestFieldValidationError:
    """Tests for FieldValidationError formatting."""

    def make_error(self):
        probe_error = ProbeValidationError(
            check="nonsingular",
            expected="|X| >= 1e-12",
            error_percentage=0.25,
            error_count=5,
            sample_points=[[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]],
        )
        return FieldValidationError(message="Field validation failed", probe_errors=[probe_error])

    def test_is_config_error(self):
        error = self.make_error()
        assert isinstance(error, ConfigError)
        assert error.exit_code == 64
        assert error.key == "flow"

    def test_message_lists_checks(self):
        text = str(self.make_error())
        assert "nonsingular" in text
        assert "25.00%" in text
        assert "[0.0, 0.0, 0.0]" in text

    def test_to_dict(self):
        data = self.make_error().to_dict()
        assert data["reason"] == "field-validation"
        assert data["probe_errors"][0]["error_count"] == 5
