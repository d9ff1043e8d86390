"""
Linear Poincaré flow: normal frames, orthogonal projection onto the normal
plane X(x)^⊥, and the 2x2 normal cocycle P_t = π ∘ DX_t in transported
orthonormal frames.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.field import VectorFieldSpec
from ..core.flowcore import FlowIntegrator
from ..utils.serialization import matrix_rows, to_jsonable

logger = logging.getLogger(__name__)


class NormalFrame(BaseModel):
    """Flow direction plus an orthonormal basis (e1, e2) of the normal plane."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base_point: np.ndarray
    direction: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        """Rows e1, e2 as a (2, 3) array."""
        return np.vstack([self.e1, self.e2])

    @classmethod
    def canonical(cls, base_point: Optional[np.ndarray] = None) -> "NormalFrame":
        """Frame for synthetic cocycles: direction e_z, basis e_x, e_y."""
        eye = np.eye(3)
        point = np.zeros(3) if base_point is None else np.asarray(base_point, dtype=float)
        return cls(base_point=point, direction=eye[2], e1=eye[0], e2=eye[1])

    @classmethod
    def from_direction(
        cls, base_point: np.ndarray, direction: np.ndarray, seed: Optional[np.ndarray] = None
    ) -> "NormalFrame":
        """
        Orthonormal frame around a unit direction.

        Gram-Schmidt on ``seed``, or on the coordinate axis least aligned with
        the direction when no seed is given or the seed is nearly parallel.
        """
        f = np.asarray(direction, dtype=float)
        e1 = None
        if seed is not None:
            e1 = seed - np.dot(seed, f) * f
            if np.linalg.norm(e1) < 1e-8:
                e1 = None
        if e1 is None:
            axis = np.zeros(3)
            axis[int(np.argmin(np.abs(f)))] = 1.0
            e1 = axis - np.dot(axis, f) * f
        e1 = e1 / np.linalg.norm(e1)
        e2 = np.cross(f, e1)
        return cls(base_point=np.asarray(base_point, dtype=float), direction=f, e1=e1, e2=e2)

    def rotated(self, angle: float) -> "NormalFrame":
        """The same normal plane with the basis rotated by ``angle``."""
        c, s = np.cos(angle), np.sin(angle)
        return NormalFrame(
            base_point=self.base_point,
            direction=self.direction,
            e1=c * self.e1 + s * self.e2,
            e2=-s * self.e1 + c * self.e2,
        )

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {"base_point": self.base_point, "direction": self.direction, "e1": self.e1, "e2": self.e2}
        )


class LinearPoincareMap(BaseModel):
    """P_t(x) in a source and a target frame, plus the full 3x3 data it came from."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    source: NormalFrame
    target: NormalFrame
    elapsed: float
    fundamental: np.ndarray
    logdet: float
    speed_ratio: float = Field(description="|X(X_t x)| / |X(x)|")
    frame_dependent: bool = True

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


class NormalCocycle(BaseModel):
    """
    2x2 maps between normal frames along a partition 0 = t_0 <= ... <= t_n.

    maps[i] represents P_{t_{i+1} - t_i}(X_{t_i}(x)) from frames[i] to frames[i+1].
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    partition: np.ndarray
    frames: List[NormalFrame]
    maps: np.ndarray

    @model_validator(mode="after")
    def check_counts(self) -> "NormalCocycle":
        if len(self.frames) != len(self.partition):
            raise ValueError("frame count must equal partition length")
        if self.maps.shape != (len(self.partition) - 1, 2, 2):
            raise ValueError("map count must equal partition length minus one")
        if np.any(np.diff(self.partition) < 0):
            raise ValueError("partition must be nondecreasing")
        return self

    @classmethod
    def from_maps(
        cls, maps: Sequence[np.ndarray], partition: Optional[Sequence[float]] = None
    ) -> "NormalCocycle":
        """Synthetic cocycle in canonical frames (unit gaps by default)."""
        maps = np.asarray(maps, dtype=float).reshape(-1, 2, 2)
        if partition is None:
            partition = np.arange(len(maps) + 1, dtype=float)
        partition = np.asarray(partition, dtype=float)
        frames = [NormalFrame.canonical() for _ in partition]
        return cls(partition=partition, frames=frames, maps=maps)

    @property
    def length(self) -> int:
        return len(self.maps)

    @property
    def duration(self) -> float:
        return float(self.partition[-1] - self.partition[0])

    def product(self, i: int = 0, j: Optional[int] = None) -> np.ndarray:
        """maps[j-1] ... maps[i], the cocycle from t_i to t_j."""
        j = self.length if j is None else j
        out = np.eye(2)
        for k in range(i, j):
            out = self.maps[k] @ out
        return out

    def total(self) -> np.ndarray:
        return self.product(0, self.length)

    def with_maps(self, maps: np.ndarray) -> "NormalCocycle":
        """Same partition and frames, new maps."""
        return NormalCocycle(partition=self.partition, frames=self.frames, maps=np.asarray(maps))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "partition": to_jsonable(self.partition),
            "frames": [frame.to_dict() for frame in self.frames],
            "maps": [matrix_rows(m) for m in self.maps],
            "frame_dependent": True,
        }


def _integrator(integrator: Optional[FlowIntegrator], tol: Optional[float]) -> FlowIntegrator:
    integrator = integrator or FlowIntegrator()
    return integrator.with_tolerance(tol) if tol is not None else integrator


def normal_frame(
    spec: VectorFieldSpec, x: np.ndarray, integrator: Optional[FlowIntegrator] = None
) -> NormalFrame:
    """Deterministic frame at x, seeded by the axis least aligned with X(x)."""
    integrator = integrator or FlowIntegrator()
    x = spec.domain.reduce(np.asarray(x, dtype=float))
    v = integrator.evaluate_field(spec, x)
    return NormalFrame.from_direction(x, v / np.linalg.norm(v))


def project_normal(frame: NormalFrame, v: np.ndarray) -> np.ndarray:
    """Coordinates of π_x(v) in the frame."""
    return frame.basis @ np.asarray(v, dtype=float)


def transport_frame(
    spec: VectorFieldSpec, frame: NormalFrame, positions: np.ndarray
) -> NormalFrame:
    """Carry a frame along sampled positions by projecting and re-orthonormalizing."""
    current = frame
    for p in np.atleast_2d(positions)[1:]:
        v = np.asarray(spec.field(p), dtype=float)
        current = NormalFrame.from_direction(p, v / np.linalg.norm(v), seed=current.e1)
    return current


def linear_poincare(
    spec: VectorFieldSpec,
    x: np.ndarray,
    t: float,
    tol: Optional[float] = None,
    integrator: Optional[FlowIntegrator] = None,
    source: Optional[NormalFrame] = None,
) -> LinearPoincareMap:
    """Matrix of π_{X_t(x)} ∘ DX_t(x) restricted to N_x, in transported frames."""
    integrator = _integrator(integrator, tol)
    source = source or normal_frame(spec, x, integrator)
    segment, tangent = integrator.flow_with_tangent(spec, source.base_point, t)
    target = transport_frame(spec, source, segment.positions)
    matrix = target.basis @ tangent.fundamental @ source.basis.T
    speed_start = np.linalg.norm(spec.field(segment.start))
    speed_end = np.linalg.norm(spec.field(segment.end))
    return LinearPoincareMap(
        matrix=matrix,
        source=source,
        target=target,
        elapsed=float(t),
        fundamental=tangent.fundamental,
        logdet=tangent.logdet,
        speed_ratio=float(speed_end / speed_start),
    )


def cocycle_along(
    spec: VectorFieldSpec,
    x: np.ndarray,
    partition: Sequence[float],
    tol: Optional[float] = None,
    max_gap: float = 1.0,
    integrator: Optional[FlowIntegrator] = None,
) -> NormalCocycle:
    """
    Per-gap linear Poincaré maps along the orbit of x.

    Raises:
        ValueError: if the partition does not start at 0, is not strictly
            increasing, or has a gap longer than ``max_gap``.
    """
    partition = np.asarray(partition, dtype=float)
    gaps = np.diff(partition)
    if len(partition) < 2 or partition[0] != 0:
        raise ValueError("partition must start at 0 and have at least two points")
    if np.any(gaps <= 0):
        raise ValueError("partition must be strictly increasing")
    if np.any(gaps > max_gap * (1 + 1e-12)):
        raise ValueError(f"partition gaps must not exceed {max_gap}")

    integrator = _integrator(integrator, tol)
    frame = normal_frame(spec, x, integrator)
    frames = [frame]
    maps = []
    for gap in gaps:
        piece = linear_poincare(spec, frame.base_point, gap, integrator=integrator, source=frame)
        maps.append(piece.matrix)
        frame = piece.target
        frames.append(frame)
    logger.debug(f"Built cocycle of {len(maps)} maps over [0, {partition[-1]:.6g}] for {spec.name}")
    return NormalCocycle(partition=partition, frames=frames, maps=np.asarray(maps))


def monodromy(
    spec: VectorFieldSpec,
    p: np.ndarray,
    period: float,
    tol: Optional[float] = None,
    integrator: Optional[FlowIntegrator] = None,
) -> Tuple[np.ndarray, LinearPoincareMap]:
    """
    Period map of the linear Poincaré flow expressed in the base frame at p.

    The transported end frame is rotated back onto the base frame, so the
    result is an endomorphism of N_p with frame-invariant spectrum.
    """
    lp = linear_poincare(spec, p, period, tol=tol, integrator=integrator)
    back = lp.source.basis @ lp.target.basis.T
    return back @ lp.matrix, lp


def multipliers_2x2(matrix: np.ndarray) -> Tuple[complex, complex]:
    """Eigenvalues of a 2x2 matrix from trace and determinant, sorted by modulus."""
    m = np.asarray(matrix, dtype=float)
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        root = np.sqrt(disc)
        big = 0.5 * (tr + np.copysign(root, tr))
        small = det / big if big != 0 else 0.0
        pair = (complex(small), complex(big))
    else:
        re, im = 0.5 * tr, 0.5 * np.sqrt(-disc)
        pair = (complex(re, -im), complex(re, im))
    return tuple(sorted(pair, key=abs))


class CocycleBound(BaseModel):
    """Sampled estimate of C = sup |P_t(x)| over t in [0, 1]."""

    value: float
    raw_max: float
    inflation: float
    n_probes: int
    seed: int


def estimate_cocycle_bound(
    spec: VectorFieldSpec,
    n_probes: int = 10_000,
    seed: int = 0,
    inflation: float = 1.25,
    times_per_point: int = 20,
    integrator: Optional[FlowIntegrator] = None,
) -> CocycleBound:
    """
    Estimate C by probing |P_t(x)| at random points and times in (0, 1].

    The spectral norm of P_t is frame-independent, so each probe is
    |Π_{X_t x} DX_t(x) B_x| for any orthonormal basis B_x of N_x.
    """
    integrator = integrator or FlowIntegrator()
    rng = np.random.default_rng(seed)
    n_points = max(1, -(-n_probes // times_per_point))
    points = spec.domain.sample_uniform(rng, n_points)
    times = np.linspace(0.0, 1.0, times_per_point + 1)[1:]
    raw_max = 0.0
    for x in points:
        frame = normal_frame(spec, x, integrator)
        positions, fundamentals = integrator.tangent_series(spec, frame.base_point, times)
        for position, fundamental in zip(positions, fundamentals):
            v = np.asarray(spec.field(position), dtype=float)
            f = v / np.linalg.norm(v)
            projected = fundamental @ frame.basis.T
            projected = projected - np.outer(f, f @ projected)
            raw_max = max(raw_max, float(np.linalg.norm(projected, 2)))
    logger.info(
        f"Cocycle bound for {spec.name}: raw max {raw_max:.6g} over {n_points * len(times)} probes"
    )
    return CocycleBound(
        value=raw_max * inflation,
        raw_max=raw_max,
        inflation=inflation,
        n_probes=n_points * len(times),
        seed=seed,
    )
