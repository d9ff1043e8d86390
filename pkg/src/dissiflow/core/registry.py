"""
Builtin flow registry.

Each builtin has a pydantic parameter model and a factory returning a
VectorFieldSpec with analytic Jacobian, divergence and suggested sections.
"""

import logging
import math
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..exceptions import ConfigError
from .domain import DomainSpec
from .field import SectionSpec, VectorFieldSpec
from .regions import Neighborhood

logger = logging.getLogger(__name__)


class RotationParams(BaseModel):
    """Rigid rotation (constant translation) on the unit 3-torus."""

    model_config = {"extra": "forbid"}

    velocity: Tuple[float, float, float] = Field(
        default=(1.0, math.sqrt(2.0), math.sqrt(3.0)), description="Constant velocity"
    )

    @model_validator(mode="after")
    def check_nonzero(self) -> "RotationParams":
        if not any(self.velocity):
            raise ValueError("velocity must be nonzero")
        return self


class CylinderParams(BaseModel):
    """Planar limit cycle r = 1 times exponential dynamics in z."""

    model_config = {"extra": "forbid"}

    c: float = Field(default=1.0, description="Vertical rate: z' = c z")
    xy_extent: float = Field(default=3.0, gt=1.5, description="Box half-width in x and y")
    z_extent: float = Field(default=100.0, gt=0.5, description="Box half-height")


class CatmapParams(BaseModel):
    """Mapping torus of a hyperbolic integer matrix."""

    model_config = {"extra": "forbid"}

    matrix: Tuple[Tuple[int, int], Tuple[int, int]] = Field(
        default=((2, 1), (1, 1)), description="Gluing matrix"
    )


class MorseSmaleParams(BaseModel):
    """Unit-speed circle flow times two gradient-like circle flows."""

    model_config = {"extra": "forbid"}

    omega2: float = Field(default=0.0, description="Drift in y")
    omega3: float = Field(default=0.0, description="Drift in z")
    a: float = Field(default=0.1, gt=0, description="Amplitude in y")
    b: float = Field(default=0.2, gt=0, description="Amplitude in z")

    @model_validator(mode="after")
    def check_amplitudes(self) -> "MorseSmaleParams":
        if self.a <= abs(self.omega2) or self.b <= abs(self.omega3):
            raise ValueError("need a > |omega2| and b > |omega3| for closed orbits")
        return self


def rotation(params: RotationParams) -> VectorFieldSpec:
    v = np.asarray(params.velocity, dtype=float)

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(v.reshape((3,) + (1,) * (x.ndim - 1)), x.shape).copy()

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.zeros((3, 3))

    def divergence(x: np.ndarray):
        return np.zeros(np.asarray(x).shape[1:]) if np.ndim(x) > 1 else 0.0

    axis = int(np.argmax(np.abs(v)))
    normal = np.zeros(3)
    normal[axis] = 1.0
    return VectorFieldSpec(
        name="rotation",
        field=field,
        jacobian=jacobian,
        divergence=divergence,
        domain=DomainSpec.flat_torus(),
        parameters={"velocity": list(params.velocity)},
        sections=[SectionSpec(anchor=(0.0, 0.0, 0.0), normal=tuple(normal))],
    )


def cylinder(params: CylinderParams) -> VectorFieldSpec:
    c = params.c

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = x[0] ** 2 + x[1] ** 2
        return np.stack(
            [x[0] * (1 - r2) - x[1], x[1] * (1 - r2) + x[0], c * x[2]]
        )

    def jacobian(x: np.ndarray) -> np.ndarray:
        px, py = float(x[0]), float(x[1])
        return np.array(
            [
                [1 - 3 * px**2 - py**2, -2 * px * py - 1, 0.0],
                [-2 * px * py + 1, 1 - px**2 - 3 * py**2, 0.0],
                [0.0, 0.0, c],
            ]
        )

    def divergence(x: np.ndarray):
        x = np.asarray(x, dtype=float)
        return 2.0 - 4.0 * (x[0] ** 2 + x[1] ** 2) + c

    w, h = params.xy_extent, params.z_extent
    domain = DomainSpec.box(
        lower=(-w, -w, -h),
        upper=(w, w, h),
        trapping=Neighborhood.shell(0.5, 1.5, -0.5, 0.5),
    )
    return VectorFieldSpec(
        name="cylinder",
        field=field,
        jacobian=jacobian,
        divergence=divergence,
        domain=domain,
        parameters=params.model_dump(),
        sections=[SectionSpec(anchor=(1.0, 0.0, 0.0), normal=(0.0, 1.0, 0.0))],
    )


def catmap_suspension(params: CatmapParams) -> VectorFieldSpec:
    domain = DomainSpec.suspension(params.matrix)
    gen = domain.generator
    trace = float(np.trace(gen))

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        q = np.tensordot(gen, x[:2], axes=1)
        return np.concatenate([q, np.ones((1,) + x.shape[1:])])

    def jacobian(x: np.ndarray) -> np.ndarray:
        jac = np.zeros((3, 3))
        jac[:2, :2] = gen
        return jac

    def divergence(x: np.ndarray):
        return np.full(np.asarray(x).shape[1:], trace) if np.ndim(x) > 1 else trace

    return VectorFieldSpec(
        name="catmap-suspension",
        field=field,
        jacobian=jacobian,
        divergence=divergence,
        domain=domain,
        parameters={"matrix": [list(row) for row in params.matrix]},
        sections=[SectionSpec(anchor=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0))],
    )


def morse_smale_torus(params: MorseSmaleParams) -> VectorFieldSpec:
    w2, w3, a, b = params.omega2, params.omega3, params.a, params.b
    tau = 2.0 * np.pi

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack(
            [
                np.ones_like(x[0]),
                w2 + a * np.sin(tau * x[1]),
                w3 + b * np.sin(tau * x[2]),
            ]
        )

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.diag(
            [0.0, tau * a * np.cos(tau * float(x[1])), tau * b * np.cos(tau * float(x[2]))]
        )

    def divergence(x: np.ndarray):
        x = np.asarray(x, dtype=float)
        return tau * a * np.cos(tau * x[1]) + tau * b * np.cos(tau * x[2])

    return VectorFieldSpec(
        name="morse-smale-torus",
        field=field,
        jacobian=jacobian,
        divergence=divergence,
        domain=DomainSpec.flat_torus(),
        parameters=params.model_dump(),
        sections=[SectionSpec(anchor=(0.0, 0.0, 0.0), normal=(1.0, 0.0, 0.0))],
    )


BUILTIN_FLOWS: Dict[str, Tuple[Type[BaseModel], Callable[[Any], VectorFieldSpec]]] = {
    "rotation": (RotationParams, rotation),
    "cylinder": (CylinderParams, cylinder),
    "catmap-suspension": (CatmapParams, catmap_suspension),
    "morse-smale-torus": (MorseSmaleParams, morse_smale_torus),
}


def available_flows() -> Dict[str, str]:
    """Builtin names with their one-line descriptions."""
    return {name: (model.__doc__ or "").strip() for name, (model, _) in BUILTIN_FLOWS.items()}


def build_flow(name: str, params: Optional[Mapping[str, Any]] = None) -> VectorFieldSpec:
    """Instantiate a builtin flow by name."""
    if name not in BUILTIN_FLOWS:
        raise ConfigError(
            f"unknown builtin flow '{name}'; available: {sorted(BUILTIN_FLOWS)}",
            key="flow.builtin",
        )
    model, factory = BUILTIN_FLOWS[name]
    try:
        parsed = model(**dict(params or {}))
    except (ValidationError, TypeError) as e:
        raise ConfigError(f"invalid parameters for '{name}': {e}", key="flow.parameters") from e
    spec = factory(parsed)
    logger.debug(f"Built flow {name} with parameters {spec.parameters}")
    return spec
