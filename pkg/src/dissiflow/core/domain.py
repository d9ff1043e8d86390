"""
Phase-space domains: flat 3-tori, Euclidean boxes with a trapping region,
and mapping tori (suspensions) of hyperbolic integer 2x2 matrices.

Suspension points are written in coordinates (q, z) with q = A^z p, where
p are the fiber coordinates on the 2-torus. In these coordinates the
identification is (q, z) ~ (q, z + 1) and (q, z) ~ (q + A^z k, z) for
integer vectors k.
"""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from .regions import Neighborhood, RegionShape

logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]
IntMatrix2 = Tuple[Tuple[int, int], Tuple[int, int]]


class DomainKind(str, Enum):
    """Kinds of phase space."""

    FLAT_TORUS = "flat-torus"
    BOX = "box"
    SUSPENSION = "suspension"


class DomainSpec(BaseModel):
    """Immutable description of where a flow lives and how positions wrap."""

    model_config = ConfigDict(frozen=True)

    kind: DomainKind = Field(default=DomainKind.FLAT_TORUS, description="Domain kind")
    periods: Vector3 = Field(default=(1.0, 1.0, 1.0), description="Torus periods")
    lower: Optional[Vector3] = Field(default=None, description="Box lower bounds")
    upper: Optional[Vector3] = Field(default=None, description="Box upper bounds")
    trapping: Optional[Neighborhood] = Field(
        default=None, description="Forward-invariant region standing in for M on boxes"
    )
    gluing: Optional[IntMatrix2] = Field(
        default=None, description="Integer matrix glued at the suspension roof"
    )

    _eig: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = PrivateAttr(default=None)

    @field_validator("periods")
    @classmethod
    def validate_periods(cls, v: Vector3) -> Vector3:
        """Torus periods must be strictly positive."""
        if any(p <= 0 for p in v):
            raise ValueError(f"torus periods must be strictly positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_kind(self) -> "DomainSpec":
        """Check the fields required by each kind."""
        if self.kind == DomainKind.BOX:
            if self.lower is None or self.upper is None:
                raise ValueError("box domains need lower and upper bounds")
            if any(u <= lo for lo, u in zip(self.lower, self.upper)):
                raise ValueError("box bounds must have positive volume")
            if self.trapping is not None:
                if self.trapping.shape not in (RegionShape.BOX, RegionShape.CYLINDRICAL_SHELL):
                    raise ValueError("trapping regions must be boxes or cylindrical shells")
                lo, hi = self.trapping.bounding_box()
                if np.any(lo < np.asarray(self.lower)) or np.any(hi > np.asarray(self.upper)):
                    raise ValueError("trapping region must lie inside the box")
        elif self.kind == DomainKind.SUSPENSION:
            if self.gluing is None:
                raise ValueError("suspension domains need a gluing matrix")
            a = np.asarray(self.gluing, dtype=float)
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            if det != 1 or np.trace(a) <= 2:
                raise ValueError(
                    "gluing matrix must have determinant 1 and trace > 2 "
                    "(hyperbolic with positive eigenvalues)"
                )
        return self

    # Constructors

    @classmethod
    def flat_torus(cls, periods: Vector3 = (1.0, 1.0, 1.0)) -> "DomainSpec":
        return cls(kind=DomainKind.FLAT_TORUS, periods=tuple(periods))

    @classmethod
    def box(
        cls, lower: Vector3, upper: Vector3, trapping: Optional[Neighborhood] = None
    ) -> "DomainSpec":
        return cls(kind=DomainKind.BOX, lower=tuple(lower), upper=tuple(upper), trapping=trapping)

    @classmethod
    def suspension(cls, gluing: IntMatrix2 = ((2, 1), (1, 1))) -> "DomainSpec":
        return cls(
            kind=DomainKind.SUSPENSION,
            gluing=tuple(tuple(int(v) for v in row) for row in gluing),
        )

    # Properties

    @property
    def is_compact(self) -> bool:
        return self.kind != DomainKind.BOX

    @property
    def kd_boxsize(self) -> Optional[np.ndarray]:
        """Periodic box size for KD-trees, when positions wrap on a rectangle."""
        if self.kind == DomainKind.FLAT_TORUS:
            return np.asarray(self.periods, dtype=float)
        return None

    def _eigen(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._eig is None:
            values, vectors = np.linalg.eig(np.asarray(self.gluing, dtype=float))
            self._eig = (values.real, vectors.real, np.linalg.inv(vectors.real))
        return self._eig

    @property
    def generator(self) -> np.ndarray:
        """Real logarithm L of the gluing matrix, so that A^z = exp(z L)."""
        values, vectors, inverse = self._eigen()
        return vectors @ np.diag(np.log(values)) @ inverse

    def fiber_power(self, z: np.ndarray) -> np.ndarray:
        """A^z for each entry of z, stacked as (n, 2, 2)."""
        values, vectors, inverse = self._eigen()
        z = np.atleast_1d(np.asarray(z, dtype=float))
        scales = np.exp(np.outer(z, np.log(values)))
        return np.einsum("ij,nj,jk->nik", vectors, scales, inverse)

    # Position handling

    def reduce(self, points: np.ndarray) -> np.ndarray:
        """Map positions into the fundamental domain."""
        reduced, _ = self._reduce(points, with_shift=False)
        return reduced

    def reduce_with_jacobian(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Reduce a single point and return the derivative of the reduction."""
        reduced, shift = self._reduce(x, with_shift=True)
        jac = np.eye(3)
        if self.kind == DomainKind.SUSPENSION:
            # q' = q - A^{z'} k with z' = z - floor(z)
            jac[:2, 2] = -self.generator @ shift
        return reduced, jac

    def _reduce(self, points: np.ndarray, with_shift: bool):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        shift = None
        if self.kind == DomainKind.FLAT_TORUS:
            out = np.mod(pts, np.asarray(self.periods))
        elif self.kind == DomainKind.BOX:
            out = pts.copy()
        else:
            z = pts[:, 2] - np.floor(pts[:, 2])
            p = np.einsum("nij,nj->ni", self.fiber_power(-z), pts[:, :2])
            k = np.floor(p)
            moved = np.einsum("nij,nj->ni", self.fiber_power(z), k)
            out = np.column_stack([pts[:, :2] - moved, z])
            shift = moved[0] if single else moved
        if single:
            out = out[0]
        return (out, shift) if with_shift else (out, None)

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Minimum-image vector from a to b (broadcasts over leading rows)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == DomainKind.BOX:
            return b - a
        if self.kind == DomainKind.FLAT_TORUS:
            periods = np.asarray(self.periods)
            d = b - a
            return d - periods * np.round(d / periods)
        a2, b2 = np.broadcast_arrays(np.atleast_2d(a), np.atleast_2d(b))
        dz = b2[:, 2] - a2[:, 2]
        dz = dz - np.round(dz)
        z_b = a2[:, 2] + dz
        dp = np.einsum("nij,nj->ni", self.fiber_power(-z_b), b2[:, :2] - a2[:, :2])
        dp = dp - np.round(dp)
        dq = np.einsum("nij,nj->ni", self.fiber_power(z_b), dp)
        out = np.column_stack([dq, dz])
        return out[0] if a.ndim == 1 and b.ndim == 1 else out

    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.displacement(a, b), axis=-1)

    def chart_coordinates(self, points: np.ndarray) -> np.ndarray:
        """Fiber coordinates (p, z) on suspensions; positions elsewhere."""
        pts = self.reduce(points)
        if self.kind != DomainKind.SUSPENSION:
            return pts
        two_d = np.atleast_2d(pts)
        p = np.einsum("nij,nj->ni", self.fiber_power(-two_d[:, 2]), two_d[:, :2])
        out = np.column_stack([np.mod(p, 1.0), two_d[:, 2]])
        return out[0] if np.ndim(pts) == 1 else out

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Box membership; compact domains contain everything."""
        pts = np.asarray(points, dtype=float)
        if self.kind != DomainKind.BOX:
            return True if pts.ndim == 1 else np.ones(len(pts), dtype=bool)
        inside = np.all(
            (np.atleast_2d(pts) >= np.asarray(self.lower))
            & (np.atleast_2d(pts) <= np.asarray(self.upper)),
            axis=1,
        )
        return bool(inside[0]) if pts.ndim == 1 else inside

    def exit_margin(self, x: np.ndarray) -> float:
        """Signed distance to the box boundary, positive inside."""
        x = np.asarray(x, dtype=float)
        return float(
            min(np.min(x - np.asarray(self.lower)), np.min(np.asarray(self.upper) - x))
        )

    def sampling_region(self) -> Neighborhood:
        """The set uniform samples are drawn from (trapping region on boxes)."""
        if self.kind == DomainKind.BOX:
            return self.trapping or Neighborhood.box(self.lower, self.upper)
        return Neighborhood.whole()

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples with respect to normalized Lebesgue measure."""
        if self.kind == DomainKind.BOX:
            return self.sampling_region().sample(rng, n)
        u = rng.random((n, 3))
        if self.kind == DomainKind.FLAT_TORUS:
            return u * np.asarray(self.periods)
        q = np.einsum("nij,nj->ni", self.fiber_power(u[:, 2]), u[:, :2])
        return np.column_stack([q, u[:, 2]])

    def volume(self) -> float:
        if self.kind == DomainKind.FLAT_TORUS:
            return float(np.prod(self.periods))
        if self.kind == DomainKind.SUSPENSION:
            return 1.0
        return self.sampling_region().volume()

    def describe(self) -> dict:
        """Plain summary for reports."""
        out = {"kind": self.kind.value}
        if self.kind == DomainKind.FLAT_TORUS:
            out["periods"] = list(self.periods)
        elif self.kind == DomainKind.BOX:
            out["lower"] = list(self.lower)
            out["upper"] = list(self.upper)
            if self.trapping is not None:
                out["trapping"] = self.trapping.shape.value
        else:
            out["gluing"] = [list(row) for row in self.gluing]
        return out
