"""
Probe validation for vector fields.

Checks a field at random points of its domain before any analysis runs:
values must be finite, the field must stay above the singularity floor,
and an analytic Jacobian must agree with the divergence (and with finite
differences of the field).
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from .core.field import VectorFieldSpec
from .core.flowcore import FlowIntegrator
from .exceptions import ConfigError

logger = logging.getLogger(__name__)


class ProbeValidationError(BaseModel):
    """Details about one failed check across the probe points."""

    check: str = Field(description="Name of the failed check")
    expected: str = Field(description="What the check requires")
    error_percentage: float = Field(description="Fraction of probes that failed")
    error_count: int = Field(description="Number of probes that failed")
    sample_points: List[List[float]] = Field(
        default_factory=list, description="Sample of failing probe points"
    )


class FieldValidationError(ConfigError):
    """
    Raised when a vector field fails probe validation.

    Carries one ProbeValidationError per failed check.
    """

    reason = "field-validation"

    def __init__(self, message: str, probe_errors: List[ProbeValidationError]) -> None:
        self.probe_errors = probe_errors
        super().__init__(message, key="flow")

    def _format_message(self) -> str:
        lines = [self.message, "", "Probe validation errors:"]
        for error in self.probe_errors:
            lines.append(f"  • {error.check}:")
            lines.append(f"      Expected: {error.expected}")
            lines.append(
                f"      Failure rate: {error.error_percentage:.2%} ({error.error_count} probes)"
            )
            if error.sample_points:
                samples = ", ".join(repr(p) for p in error.sample_points[:3])
                lines.append(f"      Sample points: {samples}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self._format_message()

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["probe_errors"] = [e.model_dump() for e in self.probe_errors]
        return data


class FieldValidator:
    """
    Validates a VectorFieldSpec at random probes of its sampling region.

    Unlike the integrator, which raises at the first singular point it meets,
    the validator reports every failing check at once.
    """

    def __init__(
        self,
        n_probes: int = 100,
        seed: int = 0,
        singularity_floor: float = 1e-12,
        tolerance: float = 1e-5,
    ) -> None:
        """
        Args:
            n_probes: number of random probe points
            seed: RNG seed for the probes
            singularity_floor: smallest allowed |X|
            tolerance: relative agreement required between Jacobian trace,
                divergence and finite differences
        """
        if n_probes <= 0:
            raise ValueError("n_probes must be positive")
        if tolerance <= 0:
            raise ValueError("tolerance must be positive")
        self.n_probes = n_probes
        self.seed = seed
        self.singularity_floor = singularity_floor
        self.tolerance = tolerance
        self.integrator = FlowIntegrator(singularity_floor=singularity_floor)

    def probes(self, spec: VectorFieldSpec) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return spec.domain.sample_uniform(rng, self.n_probes)

    def validate(self, spec: VectorFieldSpec) -> None:
        """
        Raises:
            FieldValidationError: if any check fails on any probe
        """
        errors = self.find_problems(spec)
        if errors:
            raise FieldValidationError(
                message=f"Field validation failed for {spec.name}: {len(errors)} check(s) failed",
                probe_errors=errors,
            )
        logger.debug(f"Field {spec.name} passed {self.n_probes} probes")

    def find_problems(self, spec: VectorFieldSpec) -> List[ProbeValidationError]:
        points = self.probes(spec)
        values = np.asarray(spec.field(points.T), dtype=float).T
        finite = np.all(np.isfinite(values), axis=1)
        errors = []

        self._record(errors, "finite", "finite field values", ~finite, points)
        speed = np.linalg.norm(values, axis=1)
        singular = finite & ~(speed >= self.singularity_floor)
        self._record(
            errors, "nonsingular", f"|X| >= {self.singularity_floor:g}", singular, points
        )

        if spec.jacobian is not None:
            mismatch = np.zeros(len(points), dtype=bool)
            for k, x in enumerate(points):
                if not finite[k]:
                    continue
                analytic = np.asarray(spec.jacobian(x), dtype=float)
                numeric = self.integrator.fd_jacobian(spec, x)
                scale = 1.0 + np.max(np.abs(numeric))
                mismatch[k] = np.max(np.abs(analytic - numeric)) > self.tolerance * scale
            self._record(
                errors, "jacobian", "analytic Jacobian matches central differences", mismatch, points
            )

        if spec.divergence is not None:
            mismatch = np.zeros(len(points), dtype=bool)
            for k, x in enumerate(points):
                if not finite[k]:
                    continue
                trace = float(np.trace(self.integrator.jacobian(spec, x)))
                div = float(spec.divergence(x))
                mismatch[k] = abs(trace - div) > self.tolerance * (1.0 + abs(trace))
            self._record(
                errors, "divergence", "divergence equals the Jacobian trace", mismatch, points
            )
        return errors

    def _record(
        self,
        errors: List[ProbeValidationError],
        check: str,
        expected: str,
        failed: np.ndarray,
        points: np.ndarray,
    ) -> Optional[ProbeValidationError]:
        count = int(np.sum(failed))
        if count == 0:
            return None
        error = ProbeValidationError(
            check=check,
            expected=expected,
            error_percentage=count / len(points),
            error_count=count,
            sample_points=points[failed][:10].tolist(),
        )
        errors.append(error)
        return error
