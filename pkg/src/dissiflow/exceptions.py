"""
Exception hierarchy for dissiflow.

Every error knows how to serialize itself for JSON reports and which exit
code the command-line front end maps it to.
"""

from typing import Any, Dict, Optional


class DissiflowError(Exception):
    """Base class for all dissiflow errors."""

    exit_code: int = 65
    reason: str = "error"

    def __init__(self, message: str, **details: Any) -> None:
        self.message = message
        self.details = details
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "error": type(self).__name__,
            "reason": self.reason,
            "message": self.message,
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


# Configuration


class ConfigError(DissiflowError):
    """Raised when a configuration file or value is invalid."""

    exit_code = 64
    reason = "config"

    def __init__(self, message: str, key: Optional[str] = None, **details: Any) -> None:
        self.key = key
        super().__init__(message, key=key, **details)


class ExpressionError(ConfigError):
    """Raised when a field expression cannot be parsed or uses forbidden names."""

    reason = "expression"

    def __init__(
        self,
        message: str,
        expression: str,
        line: int,
        column: int,
        key: Optional[str] = None,
    ) -> None:
        self.expression = expression
        self.line = line
        self.column = column
        location = f"line {line}, column {column}"
        prefix = f"{key}: " if key else ""
        super().__init__(
            f"{prefix}{location}: {message}",
            key=key,
            expression=expression,
            line=line,
            column=column,
        )


# Integration


class IntegrationFailure(DissiflowError):
    """Raised when a trajectory cannot be integrated."""

    exit_code = 65
    reason = "integration"


class SingularityDetected(IntegrationFailure):
    """The field vanishes (below the singularity floor) at a visited point."""

    reason = "singularity"


class OutOfDomain(IntegrationFailure):
    """A point or trajectory lies outside the box domain."""

    reason = "out-of-domain"


class LeftDomain(OutOfDomain):
    """A return-map trajectory left the box domain before returning."""

    reason = "left-domain"


class StepSizeUnderflow(IntegrationFailure):
    """The adaptive integrator could not meet the tolerance."""

    reason = "step-size-underflow"


# Periodic orbits


class OrbitSearchError(DissiflowError):
    """Base class for periodic-orbit search failures."""

    reason = "orbit-search"


class NoReturn(OrbitSearchError):
    """No return to the section before the horizon."""

    reason = "no-return"


class NewtonDiverged(OrbitSearchError):
    """Newton shooting failed to converge."""

    reason = "newton-diverged"


class NonTransversalSection(OrbitSearchError):
    """The section plane is not transverse to the field at its anchor."""

    reason = "non-transversal"


# Splitting certificates


class SplittingError(DissiflowError):
    """Base class for splitting and certificate errors."""

    reason = "splitting"


class NotASaddle(SplittingError):
    reason = "not-a-saddle"


class NotADissipativeSaddle(SplittingError):
    reason = "not-a-dissipative-saddle"


class PerpendicularPair(SplittingError):
    """F is the orthogonal complement of E, so the graph operator is undefined."""

    reason = "perpendicular-pair"


class MissingDirections(SplittingError):
    reason = "missing-directions"


# Dissipative region


class RegionError(DissiflowError):
    reason = "region"


class NotContained(RegionError):
    """The candidate set is not contained in the neighborhood U."""

    reason = "not-contained"


# Cocycle surgery


class SurgeryError(DissiflowError):
    """Base class for perturbation-construction errors."""

    exit_code = 66
    reason = "surgery"


class ZeroAngle(SurgeryError):
    reason = "zero-angle"


class EqualEigenvalues(SurgeryError):
    reason = "equal-eigenvalues"


class NotDissipative(SurgeryError):
    reason = "not-dissipative"


class Infeasible(SurgeryError):
    reason = "infeasible"


class PeriodTooShort(SurgeryError):
    reason = "period-too-short"


class DenominatorNonpositive(SurgeryError):
    reason = "denominator-nonpositive"


class BadPartition(SurgeryError):
    reason = "bad-partition"
