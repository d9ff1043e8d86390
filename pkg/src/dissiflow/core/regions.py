"""
Neighborhood shapes used as trapping regions, candidate neighborhoods U and
trapped-set domains.
"""

from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy.spatial import cKDTree

Vector3 = Tuple[float, float, float]


class RegionShape(str, Enum):
    """Supported neighborhood shapes."""

    WHOLE = "whole"
    BOX = "box"
    CYLINDRICAL_SHELL = "cylindrical-shell"
    ORBIT_TUBE = "orbit-tube"


class Neighborhood(BaseModel):
    """
    A measurable subset of the phase space with a membership predicate.

    Shells are {r_min <= r <= r_max, z_min <= z <= z_max} with r measured
    from the axis through ``center`` parallel to z. Tubes are the points
    within ``radius`` of an orbit polyline given by ``samples``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    shape: RegionShape = Field(default=RegionShape.WHOLE, description="Shape kind")
    lower: Optional[Vector3] = Field(default=None, description="Box lower corner")
    upper: Optional[Vector3] = Field(default=None, description="Box upper corner")
    r_min: float = Field(default=0.0, ge=0, description="Shell inner radius")
    r_max: float = Field(default=1.0, gt=0, description="Shell outer radius")
    z_min: float = Field(default=-1.0, description="Shell lower z")
    z_max: float = Field(default=1.0, description="Shell upper z")
    center: Tuple[float, float] = Field(default=(0.0, 0.0), description="Shell axis (x, y)")
    radius: float = Field(default=0.05, gt=0, description="Tube radius")
    samples: Optional[np.ndarray] = Field(default=None, description="Tube centerline samples")

    _tree_cache: Optional[cKDTree] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_shape(self) -> "Neighborhood":
        """Check that the parameters of the chosen shape are consistent."""
        if self.shape == RegionShape.BOX:
            if self.lower is None or self.upper is None:
                raise ValueError("box neighborhoods need lower and upper corners")
            if any(u <= lo for lo, u in zip(self.lower, self.upper)):
                raise ValueError("box bounds must have positive volume")
        elif self.shape == RegionShape.CYLINDRICAL_SHELL:
            if self.r_max <= self.r_min or self.z_max <= self.z_min:
                raise ValueError("shell bounds must have positive volume")
        elif self.shape == RegionShape.ORBIT_TUBE:
            if self.samples is None or np.asarray(self.samples).ndim != 2:
                raise ValueError("orbit tubes need an (n, 3) sample array")
        return self

    # Construction helpers

    @classmethod
    def whole(cls) -> "Neighborhood":
        return cls(shape=RegionShape.WHOLE)

    @classmethod
    def box(cls, lower: Vector3, upper: Vector3) -> "Neighborhood":
        return cls(shape=RegionShape.BOX, lower=tuple(lower), upper=tuple(upper))

    @classmethod
    def shell(
        cls,
        r_min: float,
        r_max: float,
        z_min: float,
        z_max: float,
        center: Tuple[float, float] = (0.0, 0.0),
    ) -> "Neighborhood":
        return cls(
            shape=RegionShape.CYLINDRICAL_SHELL,
            r_min=r_min,
            r_max=r_max,
            z_min=z_min,
            z_max=z_max,
            center=center,
        )

    @classmethod
    def tube(cls, samples: np.ndarray, radius: float) -> "Neighborhood":
        return cls(
            shape=RegionShape.ORBIT_TUBE,
            samples=np.asarray(samples, dtype=float),
            radius=radius,
        )

    # Geometry

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of each row of an (n, 3) array; a single point gives a bool."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == RegionShape.WHOLE:
            inside = np.ones(len(pts), dtype=bool)
        elif self.shape == RegionShape.BOX:
            inside = np.all(
                (pts >= np.asarray(self.lower)) & (pts <= np.asarray(self.upper)), axis=1
            )
        elif self.shape == RegionShape.CYLINDRICAL_SHELL:
            r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
            inside = (
                (r >= self.r_min)
                & (r <= self.r_max)
                & (pts[:, 2] >= self.z_min)
                & (pts[:, 2] <= self.z_max)
            )
        else:
            distance, _ = self._tree().query(pts)
            inside = distance <= self.radius
        return inside if np.ndim(points) > 1 else bool(inside[0])

    def _tree(self) -> cKDTree:
        if self._tree_cache is None:
            self._tree_cache = cKDTree(np.asarray(self.samples, dtype=float))
        return self._tree_cache

    def volume(self) -> float:
        if self.shape == RegionShape.BOX:
            return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))
        if self.shape == RegionShape.CYLINDRICAL_SHELL:
            return float(
                np.pi * (self.r_max**2 - self.r_min**2) * (self.z_max - self.z_min)
            )
        if self.shape == RegionShape.ORBIT_TUBE:
            pts = np.asarray(self.samples)
            length = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
            return np.pi * self.radius**2 * length
        return float("inf")

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.shape == RegionShape.BOX:
            return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)
        if self.shape == RegionShape.CYLINDRICAL_SHELL:
            cx, cy = self.center
            return (
                np.array([cx - self.r_max, cy - self.r_max, self.z_min]),
                np.array([cx + self.r_max, cy + self.r_max, self.z_max]),
            )
        if self.shape == RegionShape.ORBIT_TUBE:
            pts = np.asarray(self.samples)
            return pts.min(axis=0) - self.radius, pts.max(axis=0) + self.radius
        raise ValueError("the whole space has no bounding box")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples from a box or shell."""
        if self.shape == RegionShape.BOX:
            lo, hi = self.bounding_box()
            return lo + (hi - lo) * rng.random((n, 3))
        if self.shape == RegionShape.CYLINDRICAL_SHELL:
            u = rng.random((n, 3))
            r = np.sqrt(self.r_min**2 + u[:, 0] * (self.r_max**2 - self.r_min**2))
            theta = 2.0 * np.pi * u[:, 1]
            z = self.z_min + (self.z_max - self.z_min) * u[:, 2]
            return np.column_stack(
                [self.center[0] + r * np.cos(theta), self.center[1] + r * np.sin(theta), z]
            )
        raise ValueError(f"uniform sampling is not defined for {self.shape.value}")

    def boundary_samples(
        self, rng: np.random.Generator, n: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Points on the boundary with their outward unit normals.

        Faces are chosen with probability proportional to their area.
        """
        if self.shape == RegionShape.WHOLE:
            return np.empty((0, 3)), np.empty((0, 3))
        if self.shape == RegionShape.BOX:
            return self._box_boundary(rng, n)
        if self.shape == RegionShape.CYLINDRICAL_SHELL:
            return self._shell_boundary(rng, n)
        raise ValueError("orbit tubes have no sampled boundary")

    def _box_boundary(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.bounding_box()
        sides = hi - lo
        areas = np.array([sides[1] * sides[2], sides[0] * sides[2], sides[0] * sides[1]])
        areas = np.repeat(areas, 2)
        faces = rng.choice(6, size=n, p=areas / areas.sum())
        points = lo + sides * rng.random((n, 3))
        normals = np.zeros((n, 3))
        for face in range(6):
            axis, upper = divmod(face, 2)
            mask = faces == face
            points[mask, axis] = hi[axis] if upper else lo[axis]
            normals[mask, axis] = 1.0 if upper else -1.0
        return points, normals

    def _shell_boundary(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        height = self.z_max - self.z_min
        ring = np.pi * (self.r_max**2 - self.r_min**2)
        areas = np.array(
            [
                2 * np.pi * self.r_min * height,
                2 * np.pi * self.r_max * height,
                ring,
                ring,
            ]
        )
        faces = rng.choice(4, size=n, p=areas / areas.sum())
        u = rng.random((n, 3))
        theta = 2.0 * np.pi * u[:, 0]
        radial = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(n)])
        r = np.sqrt(self.r_min**2 + u[:, 1] * (self.r_max**2 - self.r_min**2))
        z = self.z_min + height * u[:, 2]
        normals = np.zeros((n, 3))

        r[faces == 0] = self.r_min
        normals[faces == 0] = -radial[faces == 0]
        r[faces == 1] = self.r_max
        normals[faces == 1] = radial[faces == 1]
        z[faces == 2] = self.z_min
        normals[faces == 2] = (0.0, 0.0, -1.0)
        z[faces == 3] = self.z_max
        normals[faces == 3] = (0.0, 0.0, 1.0)

        points = np.column_stack(
            [self.center[0] + r * radial[:, 0], self.center[1] + r * radial[:, 1], z]
        )
        return points, normals
