"""
Configuration management for dissiflow.

One TOML file describes a run: the flow (builtin or expressions), its
domain, search budgets, tolerances, certificate and basin parameters,
optional surgery inputs, the output directory and logging.
"""

import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .core.domain import DomainKind, DomainSpec
from .core.expressions import compile_field
from .core.field import SectionSpec, VectorFieldSpec
from .core.flowcore import METHODS, FlowIntegrator
from .core.regions import Neighborhood, RegionShape
from .core.registry import build_flow
from .exceptions import ConfigError

# Handle tomllib import for Python < 3.11
if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomli as tomllib
    except ImportError:
        import tomllib

logger = logging.getLogger(__name__)

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
Vector3 = Tuple[float, float, float]


class SectionConfig(BaseModel):
    anchor: Vector3
    normal: Vector3
    half_width: float = Field(default=float("inf"), gt=0)


class FlowConfig(BaseModel):
    """Either a builtin flow with parameters or three component expressions."""

    model_config = {"extra": "ignore"}

    builtin: Optional[str] = Field(default=None, description="Builtin flow name")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Builtin parameters")
    expressions: Optional[List[str]] = Field(
        default=None, description="Components of X in x, y, z and named constants"
    )
    constants: Dict[str, float] = Field(default_factory=dict, description="Named constants")
    name: str = Field(default="expression", description="Name of an expression flow")
    sections: List[SectionConfig] = Field(
        default_factory=list, description="Poincaré sections for expression flows"
    )

    @model_validator(mode="after")
    def check_source(self) -> "FlowConfig":
        if self.builtin is not None and self.expressions is not None:
            raise ValueError("give either flow.builtin or flow.expressions, not both")
        if self.builtin is None and self.expressions is None:
            self.builtin = "cylinder"
        return self


class TrappingConfig(BaseModel):
    shape: RegionShape = Field(default=RegionShape.BOX)
    lower: Optional[Vector3] = None
    upper: Optional[Vector3] = None
    r_min: float = Field(default=0.5, ge=0)
    r_max: float = Field(default=1.5, gt=0)
    z_min: float = -0.5
    z_max: float = 0.5

    def build(self) -> Neighborhood:
        if self.shape == RegionShape.BOX:
            return Neighborhood.box(self.lower, self.upper)
        if self.shape == RegionShape.CYLINDRICAL_SHELL:
            return Neighborhood.shell(self.r_min, self.r_max, self.z_min, self.z_max)
        raise ValueError("trapping regions must be boxes or cylindrical shells")


class DomainConfig(BaseModel):
    """Domain of an expression flow; builtins bring their own."""

    model_config = {"extra": "ignore"}

    kind: DomainKind = Field(default=DomainKind.FLAT_TORUS, description="Domain kind")
    periods: Vector3 = Field(default=(1.0, 1.0, 1.0), description="Torus periods")
    lower: Optional[Vector3] = Field(default=None, description="Box lower bounds")
    upper: Optional[Vector3] = Field(default=None, description="Box upper bounds")
    trapping: Optional[TrappingConfig] = Field(default=None, description="Trapping region")
    gluing: Tuple[Tuple[int, int], Tuple[int, int]] = Field(
        default=((2, 1), (1, 1)), description="Suspension gluing matrix"
    )

    def build(self) -> DomainSpec:
        if self.kind == DomainKind.BOX:
            if self.lower is None or self.upper is None:
                raise ValueError("box domains need lower and upper bounds")
            trapping = self.trapping.build() if self.trapping is not None else None
            return DomainSpec.box(self.lower, self.upper, trapping)
        if self.kind == DomainKind.SUSPENSION:
            return DomainSpec.suspension(self.gluing)
        return DomainSpec.flat_torus(self.periods)


class BudgetConfig(BaseModel):
    n_seeds: int = Field(default=200, gt=0, description="Census seeds per section")
    period_bound: float = Field(default=10.0, gt=0, description="Census period bound")
    max_returns: int = Field(default=8, gt=0, description="Cap on returns per seed")
    seed_width: float = Field(default=0.5, gt=0, description="Seed box half-width on sections")
    return_horizon: float = Field(default=50.0, gt=0, description="Time allowed for one return")
    threads: int = Field(default=1, gt=0, description="Worker threads")
    batch_size: int = Field(default=1000, gt=0, description="Monte Carlo batch size")


class ToleranceConfig(BaseModel):
    integration: float = Field(default=1e-8, gt=0, le=1e-3, description="Relative tolerance")
    census: float = Field(default=1e-10, gt=0, le=1e-3, description="Tolerance for orbit search")
    monte_carlo: float = Field(default=1e-6, gt=0, le=1e-3, description="Tolerance for batches")
    newton: float = Field(default=1e-8, gt=0, description="Newton residual tolerance")
    eig: float = Field(default=1e-6, gt=0, description="Multiplier classification tolerance")
    dedup: float = Field(default=1e-4, gt=0, description="Orbit dedup distance")
    method: str = Field(default="RK45", description="Runge-Kutta pair")

    @field_validator("method")
    @classmethod
    def validate_method(cls, v: str) -> str:
        if v.upper() not in METHODS:
            raise ValueError(f"method must be one of {sorted(METHODS)}, got '{v}'")
        return v.upper()


class CertificateConfig(BaseModel):
    T: float = Field(default=1.0, gt=0, description="Domination time")
    lambda_rate: float = Field(default=0.9, gt=0, lt=1, description="Contraction rate")
    alpha: float = Field(default=0.1, gt=0, description="Angle floor")
    K: float = Field(default=10.0, ge=1, description="Hyperbolicity constant")
    lambda_exp: float = Field(default=0.1, gt=0, description="Hyperbolicity exponent")
    spacing: float = Field(default=0.1, gt=0, le=1, description="Cocycle partition spacing")
    periods: int = Field(default=2, gt=0, description="Orbit periods covered by each cocycle")
    bound_probes: int = Field(default=2000, gt=0, description="Probes for the cocycle bound C")
    inflation: float = Field(default=1.25, ge=1, description="Safety factor on C")


class BasinConfig(BaseModel):
    n_samples: int = Field(default=2000, ge=100, description="Weak-basin samples")
    t_transient: float = Field(default=50.0, gt=0, description="Transient discarded")
    horizon: float = Field(default=200.0, gt=0, description="Final time")
    check_spacing: float = Field(default=0.5, gt=0, description="Region check spacing")
    eps_fat: Optional[float] = Field(default=None, gt=0, description="Region fattening radius")
    trapped_N: List[float] = Field(
        default_factory=lambda: [0.0, 1.0, 2.0, 5.0, 10.0, 20.0], description="Trapped-set times"
    )
    trapped_samples: int = Field(default=1000, gt=0, description="Trapped-set samples")
    tube_radius: float = Field(default=0.05, gt=0, description="Saddle neighborhood radius")
    attractor_horizon: float = Field(default=50.0, gt=0)
    tau_trap: float = Field(default=1.0, gt=0)
    attractor_eps: float = Field(default=1e-2, gt=0)
    n_boundary: int = Field(default=200, gt=0)
    n_interior: int = Field(default=200, gt=0)
    markov_rho: float = Field(default=0.1, gt=0)
    markov_s: float = Field(default=1.0, gt=0)
    markov_n: List[int] = Field(default_factory=lambda: list(range(1, 11)))
    markov_samples: int = Field(default=10_000, gt=0)

    @model_validator(mode="after")
    def check_window(self) -> "BasinConfig":
        if self.t_transient >= self.horizon:
            raise ValueError("basin.t_transient must be below basin.horizon")
        return self


class SurgeryConfig(BaseModel):
    """Saddle data and optional budget inputs for the surgery command."""

    lam: Optional[float] = None
    mu: Optional[float] = None
    gamma: Optional[float] = Field(default=None, ge=0)
    tau: Optional[float] = Field(default=None, gt=0)
    C: Optional[float] = Field(default=None, gt=0)
    eps: Optional[float] = Field(default=None, gt=0)
    lambda_rate: Optional[float] = Field(default=None, gt=0, lt=1)
    alpha: Optional[float] = Field(default=None, gt=0)

    @property
    def has_saddle(self) -> bool:
        return None not in (self.lam, self.mu, self.gamma, self.tau)

    @property
    def has_budget(self) -> bool:
        return None not in (self.C, self.eps, self.lambda_rate, self.alpha)


class OutputConfig(BaseModel):
    directory: str = Field(default="./dissiflow-out", description="Report directory")
    write_csv: bool = Field(default=True, description="Write CSV tables")
    write_plot_data: bool = Field(default=True, description="Write two-column plot data")


class LoggingConfig(BaseModel):
    level: str = Field(default="INFO", description="Logging level")
    format: str = Field(default=DEFAULT_LOG_FORMAT, description="Log format string")
    file: Optional[str] = Field(default=None, description="Optional log file")

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is a valid Python logging level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        upper_v = v.upper()
        if upper_v not in valid_levels:
            raise ValueError(f"level must be one of {valid_levels}, got '{v}'")
        return upper_v


class AnalysisConfig(BaseModel):
    """Configuration for one dissiflow run with pydantic validation."""

    seed: int = Field(default=0, ge=0, description="Master RNG seed")
    flow: FlowConfig = Field(default_factory=FlowConfig)
    domain: DomainConfig = Field(default_factory=DomainConfig)
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    certificates: CertificateConfig = Field(default_factory=CertificateConfig)
    basin: BasinConfig = Field(default_factory=BasinConfig)
    surgery: SurgeryConfig = Field(default_factory=SurgeryConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = {"extra": "ignore"}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnalysisConfig":
        """
        Validate a parsed config mapping.

        Raises:
            ConfigError: naming the first offending key
        """
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"invalid config value for '{key}': {first['msg']}", key=key) from e

    @classmethod
    def from_toml(cls, config_path: str = "base.toml") -> "AnalysisConfig":
        """Load configuration from TOML file, applying the OUTPUT_DIR override."""
        config_file = Path(config_path)

        if not config_file.exists():
            logger.warning(f"Config file {config_path} not found. Using defaults.")
            return cls().with_env()

        try:
            with open(config_file, "rb") as f:
                toml_data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"cannot parse {config_path}: {e}", key=None) from e

        config = cls.from_dict(toml_data).with_env()
        logger.info(f"Configuration loaded from {config_path}")
        return config

    def with_env(self) -> "AnalysisConfig":
        """Apply the OUTPUT_DIR environment override."""
        directory = os.environ.get("OUTPUT_DIR")
        if not directory:
            return self
        return self.with_overrides(out=directory)

    def with_overrides(
        self, seed: Optional[int] = None, out: Optional[str] = None, threads: Optional[int] = None
    ) -> "AnalysisConfig":
        """Command-line overrides; None keeps the configured value."""
        update: Dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        if out is not None:
            update["output"] = self.output.model_copy(update={"directory": str(out)})
        if threads is not None:
            update["budgets"] = self.budgets.model_copy(update={"threads": threads})
        data = self.model_copy(update=update).model_dump()
        return AnalysisConfig.from_dict(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump, excluding output and logging."""
        payload = self.model_dump(mode="json", exclude={"output", "logging"})
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def build_flow(self) -> VectorFieldSpec:
        """The configured VectorFieldSpec."""
        if self.flow.expressions is not None:
            sections = [SectionSpec(**s.model_dump()) for s in self.flow.sections]
            try:
                domain = self.domain.build()
            except (ValidationError, ValueError) as e:
                raise ConfigError(f"invalid domain: {e}", key="domain") from e
            return compile_field(
                self.flow.expressions,
                domain,
                constants=self.flow.constants,
                name=self.flow.name,
                sections=sections,
            )
        return build_flow(self.flow.builtin, self.flow.parameters)

    def integrator(self, kind: str = "integration") -> FlowIntegrator:
        """FlowIntegrator at the tolerance named by ``kind``."""
        return FlowIntegrator(tol=getattr(self.tolerances, kind), method=self.tolerances.method)

    def create_directories(self) -> None:
        """Create necessary directories."""
        Path(self.output.directory).mkdir(parents=True, exist_ok=True)

    def setup_logging(self, verbose: bool = False) -> None:
        """Install a stderr handler and an optional file handler."""
        level = logging.DEBUG if verbose else getattr(logging, self.logging.level)
        handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        if self.logging.file:
            handlers.append(logging.FileHandler(self.logging.file))
        logging.basicConfig(level=level, format=self.logging.format, handlers=handlers, force=True)
