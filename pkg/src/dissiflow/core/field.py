"""
Vector field specifications and Poincaré section descriptors.
"""

from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..exceptions import NonTransversalSection
from .domain import DomainSpec

# Callables take positions shaped (3,) or (3, n) and broadcast over the
# trailing axis. Jacobians are only evaluated at single points.
FieldFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]
DivergenceFn = Callable[[np.ndarray], Any]


class SectionSpec(BaseModel):
    """A planar Poincaré section: anchor point, unit normal and half-width."""

    model_config = ConfigDict(frozen=True)

    anchor: tuple = Field(description="Point on the section plane")
    normal: tuple = Field(description="Normal vector (normalized on construction)")
    half_width: float = Field(
        default=float("inf"), gt=0, description="Accepted in-plane distance from the anchor"
    )

    @field_validator("anchor")
    @classmethod
    def validate_anchor(cls, v: tuple) -> tuple:
        if len(v) != 3:
            raise ValueError("anchor must have three coordinates")
        return tuple(float(c) for c in v)

    @field_validator("normal")
    @classmethod
    def validate_normal(cls, v: tuple) -> tuple:
        n = np.asarray(v, dtype=float)
        if n.shape != (3,) or np.linalg.norm(n) == 0:
            raise ValueError("normal must be a nonzero 3-vector")
        return tuple(float(c) for c in n / np.linalg.norm(n))

    @property
    def anchor_array(self) -> np.ndarray:
        return np.asarray(self.anchor)

    @property
    def normal_array(self) -> np.ndarray:
        return np.asarray(self.normal)

    def basis(self) -> np.ndarray:
        """Orthonormal in-plane basis as the rows of a (2, 3) array."""
        n = self.normal_array
        seed = np.zeros(3)
        seed[int(np.argmin(np.abs(n)))] = 1.0
        u1 = seed - np.dot(seed, n) * n
        u1 /= np.linalg.norm(u1)
        u2 = np.cross(n, u1)
        return np.vstack([u1, u2])

    def point(self, coords: np.ndarray) -> np.ndarray:
        """Position of in-plane coordinates."""
        return self.anchor_array + np.asarray(coords) @ self.basis()

    def check_transversal(self, spec: "VectorFieldSpec") -> None:
        """Raise unless |<X(anchor), n>| >= 0.1 ||X(anchor)||."""
        v = np.asarray(spec.field(spec.domain.reduce(self.anchor_array)), dtype=float)
        speed = np.linalg.norm(v)
        if abs(np.dot(v, self.normal_array)) < 0.1 * speed or speed == 0:
            raise NonTransversalSection(
                f"section at {list(self.anchor)} is not transverse to {spec.name}",
                anchor=list(self.anchor),
                normal=list(self.normal),
            )


class VectorFieldSpec(BaseModel):
    """
    A nonsingular 3D vector field on a domain.

    The Jacobian and divergence are optional; missing ones fall back to
    central finite differences of the field.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field(description="Flow name")
    field: FieldFn = Field(description="Velocity field")
    domain: DomainSpec = Field(description="Phase space")
    jacobian: Optional[JacobianFn] = Field(default=None, description="Analytic Jacobian")
    divergence: Optional[DivergenceFn] = Field(default=None, description="Analytic divergence")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Named constants")
    sections: List[SectionSpec] = Field(
        default_factory=list, description="Suggested Poincaré sections"
    )

    @property
    def has_analytic_jacobian(self) -> bool:
        return self.jacobian is not None

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "domain": self.domain.describe(),
            "parameters": dict(self.parameters),
            "analytic_jacobian": self.jacobian is not None,
            "analytic_divergence": self.divergence is not None,
        }
