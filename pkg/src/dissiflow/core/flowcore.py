"""
Field evaluation, trajectory integration, variational (tangent) equation and
Liouville log-determinant tracking.

All integrations go through scipy's adaptive embedded Runge-Kutta pairs with
dense output. The tangent state integrates positions, the fundamental
matrix and the log-determinant together, so one error controller governs
every derived quantity.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import DOP853, RK45, solve_ivp

from ..exceptions import (
    ConfigError,
    OutOfDomain,
    SingularityDetected,
    StepSizeUnderflow,
)
from .domain import DomainKind
from .field import VectorFieldSpec

logger = logging.getLogger(__name__)

METHODS = {"RK45": RK45, "DOP853": DOP853}
# Function evaluations per accepted step made only to build dense output.
DENSE_EXTRA_EVALS = {"RK45": 0, "DOP853": 3}


class IntegrationStats(BaseModel):
    """Work counters summed over all integration chunks."""

    steps: int = 0
    rejected_steps: int = 0
    nfev: int = 0
    chunks: int = 0

    def add(self, other: "IntegrationStats") -> "IntegrationStats":
        return IntegrationStats(
            steps=self.steps + other.steps,
            rejected_steps=self.rejected_steps + other.rejected_steps,
            nfev=self.nfev + other.nfev,
            chunks=self.chunks + other.chunks,
        )


class TrajectorySegment(BaseModel):
    """
    An integrated orbit piece.

    Sample times run from 0 to ``elapsed`` (decreasing when elapsed < 0) with
    spacing at most the integrator's sample spacing. Positions are reduced
    into the fundamental domain.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    start: np.ndarray
    end: np.ndarray
    elapsed: float
    times: np.ndarray
    positions: np.ndarray
    stats: IntegrationStats = Field(default_factory=IntegrationStats)


class TangentState(BaseModel):
    """Fundamental matrix DX_t(x) and the Liouville accumulator at time t."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base_point: np.ndarray
    elapsed: float
    fundamental: np.ndarray
    logdet: float

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.fundamental))


@dataclass
class DensePiece:
    """One integration chunk: global times [t0, t1], local dense solution."""

    t0: float
    t1: float
    start: np.ndarray
    sol: Callable[[np.ndarray], np.ndarray]

    def positions(self, times: np.ndarray) -> np.ndarray:
        """Unreduced positions at global times inside the piece, shape (n, 3)."""
        return np.atleast_2d(self.sol(np.asarray(times) - self.t0)[:3].T)


@dataclass
class BatchResult:
    """Positions (and optionally log-determinants) of many trajectories on a time grid."""

    times: np.ndarray
    positions: np.ndarray
    logdet: Optional[np.ndarray]
    escaped: np.ndarray
    escape_time: np.ndarray


class FlowIntegrator:
    """
    Adaptive integrator for VectorFieldSpec flows.

    Args:
        tol: relative tolerance, in (0, 1e-3]
        method: "RK45" (default) or "DOP853"
        atol_ratio: absolute tolerance as a fraction of tol
        sample_spacing: maximum time between dense trajectory samples
        singularity_floor: fields slower than this raise SingularityDetected
        fd_step: relative step of the central-difference Jacobian fallback
        chunk_time: longest single solve; suspensions always use 1
    """

    def __init__(
        self,
        tol: float = 1e-8,
        method: str = "RK45",
        atol_ratio: float = 1e-3,
        sample_spacing: float = 0.05,
        singularity_floor: float = 1e-12,
        fd_step: float = 1e-5,
        chunk_time: float = 50.0,
    ) -> None:
        if not 0 < tol <= 1e-3:
            raise ConfigError(f"tol must lie in (0, 1e-3], got {tol}", key="tolerances.tol")
        if method not in METHODS:
            raise ConfigError(
                f"method must be one of {sorted(METHODS)}, got '{method}'",
                key="tolerances.method",
            )
        if sample_spacing <= 0 or chunk_time <= 0:
            raise ConfigError("sample_spacing and chunk_time must be positive")
        self.tol = tol
        self.method = method
        self.atol_ratio = atol_ratio
        self.sample_spacing = sample_spacing
        self.singularity_floor = singularity_floor
        self.fd_step = fd_step
        self.chunk_time = chunk_time

    def with_tolerance(self, tol: float) -> "FlowIntegrator":
        """Copy with a different relative tolerance."""
        return FlowIntegrator(
            tol=tol,
            method=self.method,
            atol_ratio=self.atol_ratio,
            sample_spacing=self.sample_spacing,
            singularity_floor=self.singularity_floor,
            fd_step=self.fd_step,
            chunk_time=self.chunk_time,
        )

    # Field evaluation

    def evaluate_field(self, spec: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
        """X(x) at a point of the domain."""
        x = np.asarray(x, dtype=float)
        domain = spec.domain
        if domain.kind == DomainKind.BOX and not domain.contains(x):
            raise OutOfDomain(f"{x.tolist()} lies outside the box of {spec.name}", point=x)
        v = np.asarray(spec.field(domain.reduce(x)), dtype=float)
        speed = float(np.linalg.norm(v))
        if not speed >= self.singularity_floor:
            raise SingularityDetected(
                f"|X| = {speed:.3e} below floor {self.singularity_floor:.0e} at {x.tolist()}",
                point=x,
                speed=speed,
            )
        return v

    def jacobian(self, spec: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian when provided, else central differences."""
        x = np.asarray(x, dtype=float)
        if spec.jacobian is not None:
            return np.asarray(spec.jacobian(x), dtype=float)
        return self.fd_jacobian(spec, x)

    def fd_jacobian(self, spec: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
        h = self.fd_step * (1.0 + float(np.linalg.norm(x)))
        offsets = h * np.eye(3)
        points = np.concatenate([x[:, None] + offsets, x[:, None] - offsets], axis=1)
        values = np.asarray(spec.field(points), dtype=float)
        return (values[:, :3] - values[:, 3:]) / (2.0 * h)

    def divergence(self, spec: VectorFieldSpec, x: np.ndarray) -> float:
        """Analytic divergence when provided, else the trace of the difference Jacobian."""
        x = np.asarray(x, dtype=float)
        domain = spec.domain
        if domain.kind == DomainKind.BOX and not domain.contains(x):
            raise OutOfDomain(f"{x.tolist()} lies outside the box of {spec.name}", point=x)
        x = domain.reduce(x)
        if spec.divergence is not None:
            return float(spec.divergence(x))
        return float(np.trace(self.jacobian(spec, x)))

    def _divergence_many(self, spec: VectorFieldSpec, xs: np.ndarray) -> np.ndarray:
        """Divergence at the columns of a (3, n) array."""
        if spec.divergence is not None:
            return np.broadcast_to(np.asarray(spec.divergence(xs), dtype=float), xs.shape[1:])
        h = self.fd_step * (1.0 + np.linalg.norm(xs, axis=0))
        total = np.zeros(xs.shape[1])
        for axis in range(3):
            shift = np.zeros_like(xs)
            shift[axis] = h
            total += (spec.field(xs + shift)[axis] - spec.field(xs - shift)[axis]) / (2.0 * h)
        return total

    # Right-hand sides

    def _position_field(self, spec: VectorFieldSpec) -> Callable[[np.ndarray], np.ndarray]:
        domain = spec.domain
        floor = self.singularity_floor
        wrap = domain.kind == DomainKind.FLAT_TORUS

        def velocity(x: np.ndarray) -> np.ndarray:
            v = np.asarray(spec.field(domain.reduce(x) if wrap else x), dtype=float)
            if not np.linalg.norm(v) >= floor:
                raise SingularityDetected(
                    f"|X| below floor {floor:.0e} at {x.tolist()} on {spec.name}", point=x
                )
            return v

        return velocity

    def _rhs(self, spec: VectorFieldSpec, mode: str) -> Callable[[float, np.ndarray], np.ndarray]:
        velocity = self._position_field(spec)
        domain = spec.domain
        wrap = domain.kind == DomainKind.FLAT_TORUS

        if mode == "position":

            def rhs(t: float, y: np.ndarray) -> np.ndarray:
                return velocity(y)

        elif mode == "logdet":

            def rhs(t: float, y: np.ndarray) -> np.ndarray:
                x = y[:3]
                xr = domain.reduce(x) if wrap else x
                return np.concatenate([velocity(x), [self._divergence_at(spec, xr)]])

        else:

            def rhs(t: float, y: np.ndarray) -> np.ndarray:
                x = y[:3]
                xr = domain.reduce(x) if wrap else x
                jac = self.jacobian(spec, xr)
                phi = y[3:12].reshape(3, 3)
                div = (
                    float(spec.divergence(xr)) if spec.divergence is not None else float(np.trace(jac))
                )
                return np.concatenate([velocity(x), (jac @ phi).ravel(), [div]])

        return rhs

    def _divergence_at(self, spec: VectorFieldSpec, x: np.ndarray) -> float:
        if spec.divergence is not None:
            return float(spec.divergence(x))
        return float(np.trace(self.fd_jacobian(spec, x)))

    # Solving

    def _chunk(self, spec: VectorFieldSpec) -> float:
        if spec.domain.kind == DomainKind.SUSPENSION:
            return min(1.0, self.chunk_time)
        return self.chunk_time

    def _solve(
        self,
        spec: VectorFieldSpec,
        rhs: Callable,
        y0: np.ndarray,
        duration: float,
        tol: Optional[float] = None,
        box_event: bool = True,
        truncate: bool = False,
    ):
        rtol = tol or self.tol
        events = None
        if box_event and spec.domain.kind == DomainKind.BOX:
            domain = spec.domain

            def leave_box(t: float, y: np.ndarray) -> float:
                return domain.exit_margin(y[:3])

            leave_box.terminal = True
            leave_box.direction = -1
            events = [leave_box]

        sol = solve_ivp(
            rhs,
            (0.0, duration),
            y0,
            method=self.method,
            dense_output=True,
            rtol=rtol,
            atol=rtol * self.atol_ratio,
            events=events,
        )
        if sol.status == -1:
            raise StepSizeUnderflow(f"{spec.name}: {sol.message}", start=y0[:3])
        if sol.status == 1 and not truncate:
            self._raise_exit(spec, sol, y0)
        return sol

    @staticmethod
    def _raise_exit(spec: VectorFieldSpec, sol, y0: np.ndarray, offset: float = 0.0):
        t_exit = offset + float(sol.t_events[0][0])
        raise OutOfDomain(
            f"trajectory of {spec.name} left the box at t = {t_exit:.6g}",
            start=y0[:3],
            time=t_exit,
            exit_point=sol.y_events[0][0][:3],
        )

    def _stats(self, sol) -> IntegrationStats:
        steps = max(len(sol.t) - 1, 0)
        per_attempt = METHODS[self.method].n_stages
        attempts = (sol.nfev - 2 - DENSE_EXTRA_EVALS[self.method] * steps) / per_attempt
        return IntegrationStats(
            steps=steps,
            rejected_steps=max(int(round(attempts)) - steps, 0),
            nfev=int(sol.nfev),
            chunks=1,
        )

    def _check_start(self, spec: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (3,):
            raise ValueError(f"expected a 3-vector, got shape {x.shape}")
        self.evaluate_field(spec, x)
        return spec.domain.reduce(x)

    def _chunks(self, spec: VectorFieldSpec, t: float) -> List[float]:
        chunk = self._chunk(spec)
        n = max(1, math.ceil(abs(t) / chunk - 1e-12))
        edges = np.linspace(0.0, t, n + 1)
        return list(edges)

    def iter_pieces(
        self, spec: VectorFieldSpec, x: np.ndarray, t: float, tol: Optional[float] = None
    ) -> Iterator[DensePiece]:
        """
        Integrate positions chunk by chunk, yielding dense pieces.

        Each piece starts from the reduced end of the previous one. A
        trajectory that leaves a box still yields its last piece, cut at
        the exit time, before OutOfDomain is raised.
        """
        start = self._check_start(spec, x)
        rhs = self._rhs(spec, "position")
        edges = self._chunks(spec, t)
        for a, b in zip(edges[:-1], edges[1:]):
            sol = self._solve(spec, rhs, start, b - a, tol=tol, truncate=True)
            if sol.status == 1:
                t_exit = float(sol.t_events[0][0])
                yield DensePiece(t0=a, t1=a + t_exit, start=start, sol=sol.sol)
                self._raise_exit(spec, sol, start, offset=a)
            yield DensePiece(t0=a, t1=b, start=start, sol=sol.sol)
            start = spec.domain.reduce(sol.y[:3, -1])

    def _sample_grid(self, t: float) -> np.ndarray:
        if t == 0:
            return np.zeros(1)
        n = max(1, math.ceil(abs(t) / self.sample_spacing - 1e-12))
        return np.linspace(0.0, t, n + 1)

    def flow(
        self, spec: VectorFieldSpec, x: np.ndarray, t: float, tol: Optional[float] = None
    ) -> TrajectorySegment:
        """Integrate X_t(x) with dense samples."""
        start = self._check_start(spec, x)
        if t == 0:
            return TrajectorySegment(
                start=start, end=start.copy(), elapsed=0.0, times=np.zeros(1), positions=start[None, :]
            )
        rhs = self._rhs(spec, "position")
        return self._integrate(spec, rhs, start, t, tol, tangent=False)[0]

    def flow_with_tangent(
        self, spec: VectorFieldSpec, x: np.ndarray, t: float, tol: Optional[float] = None
    ) -> Tuple[TrajectorySegment, TangentState]:
        """Integrate the trajectory together with DX_t(x) and log det DX_t(x)."""
        start = self._check_start(spec, x)
        if t == 0:
            segment = TrajectorySegment(
                start=start, end=start.copy(), elapsed=0.0, times=np.zeros(1), positions=start[None, :]
            )
            return segment, TangentState(base_point=start, elapsed=0.0, fundamental=np.eye(3), logdet=0.0)
        rhs = self._rhs(spec, "tangent")
        return self._integrate(spec, rhs, start, t, tol, tangent=True)

    def _integrate(self, spec, rhs, start, t, tol, tangent: bool):
        domain = spec.domain
        grid = self._sample_grid(t)
        edges = self._chunks(spec, t)
        positions = np.empty((len(grid), 3))
        stats = IntegrationStats()
        phi_total = np.eye(3)
        logdet = 0.0
        current = start
        for index, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            y0 = np.concatenate([current, np.eye(3).ravel(), [0.0]]) if tangent else current
            sol = self._solve(spec, rhs, y0, b - a, tol=tol)
            stats = stats.add(self._stats(sol))
            last = index == len(edges) - 2
            if t > 0:
                mask = (grid >= a) & ((grid < b) | last)
            else:
                mask = (grid <= a) & ((grid > b) | last)
            if mask.any():
                positions[mask] = domain.reduce(sol.sol(grid[mask] - a)[:3].T)
            end_raw = sol.y[:3, -1]
            if tangent:
                current, red_jac = domain.reduce_with_jacobian(end_raw)
                phi_total = red_jac @ sol.y[3:12, -1].reshape(3, 3) @ phi_total
                logdet += float(sol.y[12, -1])
            else:
                current = domain.reduce(end_raw)
        positions[-1] = current
        segment = TrajectorySegment(
            start=start, end=current, elapsed=float(t), times=grid, positions=positions, stats=stats
        )
        if not tangent:
            return segment, None
        state = TangentState(base_point=start, elapsed=float(t), fundamental=phi_total, logdet=logdet)
        return segment, state

    def liouville_logdet(
        self, spec: VectorFieldSpec, x: np.ndarray, t: float, tol: Optional[float] = None
    ) -> float:
        """Integral of div X along the orbit segment, i.e. log det DX_t(x)."""
        start = self._check_start(spec, x)
        if t == 0:
            return 0.0
        rhs = self._rhs(spec, "logdet")
        total = 0.0
        current = start
        edges = self._chunks(spec, t)
        for a, b in zip(edges[:-1], edges[1:]):
            sol = self._solve(spec, rhs, np.concatenate([current, [0.0]]), b - a, tol=tol)
            total += float(sol.y[3, -1])
            current = spec.domain.reduce(sol.y[:3, -1])
        return total

    def logdet_series(
        self, spec: VectorFieldSpec, x: np.ndarray, times: Sequence[float], tol: Optional[float] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Positions and log-determinants at increasing nonnegative times."""
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) < 0) or np.any(times < 0):
            raise ValueError("times must be nonnegative and increasing")
        start = self._check_start(spec, x)
        t_end = float(times[-1]) if len(times) else 0.0
        positions = np.tile(start, (len(times), 1))
        logdets = np.zeros(len(times))
        if t_end == 0:
            return positions, logdets
        rhs = self._rhs(spec, "logdet")
        edges = self._chunks(spec, t_end)
        current = start
        offset = 0.0
        for index, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            sol = self._solve(spec, rhs, np.concatenate([current, [0.0]]), b - a, tol=tol)
            last = index == len(edges) - 2
            mask = (times >= a) & ((times < b) | last)
            if mask.any():
                values = sol.sol(times[mask] - a)
                positions[mask] = spec.domain.reduce(values[:3].T)
                logdets[mask] = offset + values[3]
            offset += float(sol.y[3, -1])
            current = spec.domain.reduce(sol.y[:3, -1])
        return positions, logdets

    def tangent_series(
        self, spec: VectorFieldSpec, x: np.ndarray, times: Sequence[float], tol: Optional[float] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Reduced positions (n, 3) and fundamental matrices (n, 3, 3) at increasing times >= 0."""
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) < 0) or np.any(times < 0):
            raise ValueError("times must be nonnegative and increasing")
        start = self._check_start(spec, x)
        positions = np.tile(start, (len(times), 1))
        fundamentals = np.tile(np.eye(3), (len(times), 1, 1))
        t_end = float(times[-1]) if len(times) else 0.0
        if t_end == 0:
            return positions, fundamentals
        rhs = self._rhs(spec, "tangent")
        edges = self._chunks(spec, t_end)
        accumulated = np.eye(3)
        current = start
        for index, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            y0 = np.concatenate([current, np.eye(3).ravel(), [0.0]])
            sol = self._solve(spec, rhs, y0, b - a, tol=tol)
            last = index == len(edges) - 2
            for k in np.flatnonzero((times >= a) & ((times < b) | last)):
                y = sol.sol(times[k] - a)
                positions[k], red_jac = spec.domain.reduce_with_jacobian(y[:3])
                fundamentals[k] = red_jac @ y[3:12].reshape(3, 3) @ accumulated
            current, red_jac = spec.domain.reduce_with_jacobian(sol.y[:3, -1])
            accumulated = red_jac @ sol.y[3:12, -1].reshape(3, 3) @ accumulated
        return positions, fundamentals

    def sample_orbit(
        self, spec: VectorFieldSpec, x: np.ndarray, t: float, n: int, tol: Optional[float] = None
    ) -> np.ndarray:
        """n reduced positions evenly spaced in time along [0, t)."""
        times = np.arange(n) * (t / n)
        positions = np.empty((n, 3))
        for piece in self.iter_pieces(spec, x, t, tol=tol):
            mask = (times >= piece.t0) & (times < piece.t1)
            if mask.any():
                positions[mask] = spec.domain.reduce(piece.positions(times[mask]))
        return positions

    # Vectorized Monte Carlo integration

    def flow_batch(
        self,
        spec: VectorFieldSpec,
        points: np.ndarray,
        times: Sequence[float],
        with_logdet: bool = False,
        tol: Optional[float] = None,
    ) -> BatchResult:
        """
        Integrate many initial points as one system, sampled at ``times``.

        On boxes, a C1 cutoff outside the box freezes escaped trajectories;
        escapes are detected from the sampled positions. Singularity checks
        are skipped here.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) < 0) or times[0] < 0:
            raise ValueError("times must be nonnegative and increasing")
        n = len(points)
        domain = spec.domain
        kind = domain.kind
        width = 3 + (1 if with_logdet else 0)

        if kind == DomainKind.BOX:
            lower = np.asarray(domain.lower)[:, None]
            upper = np.asarray(domain.upper)[:, None]
            ramp = 0.05 * float(np.min(np.asarray(domain.upper) - np.asarray(domain.lower)))

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            state = y.reshape(width, n)
            x = state[:3]
            xr = np.mod(x, np.asarray(domain.periods)[:, None]) if kind == DomainKind.FLAT_TORUS else x
            v = np.asarray(spec.field(xr), dtype=float)
            if kind == DomainKind.BOX:
                outside = np.max(np.maximum(lower - x, x - upper), axis=0)
                s = np.clip(outside / ramp, 0.0, 1.0)
                v = v * (1.0 - 3.0 * s**2 + 2.0 * s**3)
            if not with_logdet:
                return v.ravel()
            return np.vstack([v, self._divergence_many(spec, xr)[None, :]]).ravel()

        rtol = tol or self.tol
        positions = np.empty((len(times), n, 3))
        logdet = np.zeros((len(times), n)) if with_logdet else None
        t_end = float(times[-1])
        current = domain.reduce(points) if kind != DomainKind.BOX else points.copy()
        offset = np.zeros(n)
        edges = self._chunks(spec, t_end) if t_end > 0 else [0.0, 0.0]
        for index, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            last = index == len(edges) - 2
            mask = (times >= a) & ((times < b) | last)
            y0 = current.T.ravel() if not with_logdet else np.vstack([current.T, np.zeros((1, n))]).ravel()
            if b == a:
                positions[mask] = current
                continue
            sol = solve_ivp(
                rhs, (0.0, b - a), y0, method=self.method, dense_output=True,
                rtol=rtol, atol=rtol * self.atol_ratio,
            )
            if sol.status == -1:
                raise StepSizeUnderflow(f"{spec.name}: batch integration failed: {sol.message}")
            if mask.any():
                values = sol.sol(times[mask] - a).reshape(width, n, -1)
                positions[mask] = self._reduce_batch(spec, values[:3].transpose(2, 1, 0))
                if with_logdet:
                    logdet[mask] = offset[None, :] + values[3].T
            end = sol.y[:, -1].reshape(width, n)
            current = self._reduce_batch(spec, end[:3].T[None])[0]
            if with_logdet:
                offset = offset + end[3]

        if kind == DomainKind.BOX:
            outside = ~np.all(
                (positions >= np.asarray(domain.lower)) & (positions <= np.asarray(domain.upper)),
                axis=2,
            )
            escaped = outside.any(axis=0)
            first = np.where(escaped, np.argmax(outside, axis=0), -1)
            escape_time = np.where(escaped, times[np.maximum(first, 0)], np.inf)
        else:
            escaped = np.zeros(n, dtype=bool)
            escape_time = np.full(n, np.inf)
        return BatchResult(
            times=times, positions=positions, logdet=logdet, escaped=escaped, escape_time=escape_time
        )

    @staticmethod
    def _reduce_batch(spec: VectorFieldSpec, positions: np.ndarray) -> np.ndarray:
        """Reduce an (m, n, 3) stack of positions."""
        m, n, _ = positions.shape
        return spec.domain.reduce(positions.reshape(m * n, 3)).reshape(m, n, 3)


_DEFAULT = FlowIntegrator()


def evaluate_field(spec: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
    """X(x); raises SingularityDetected or OutOfDomain."""
    return _DEFAULT.evaluate_field(spec, x)


def flow(spec: VectorFieldSpec, x: np.ndarray, t: float, tol: float = 1e-8) -> TrajectorySegment:
    return _DEFAULT.with_tolerance(tol).flow(spec, x, t)


def flow_with_tangent(
    spec: VectorFieldSpec, x: np.ndarray, t: float, tol: float = 1e-8
) -> Tuple[TrajectorySegment, TangentState]:
    return _DEFAULT.with_tolerance(tol).flow_with_tangent(spec, x, t)


def divergence(spec: VectorFieldSpec, x: np.ndarray) -> float:
    return _DEFAULT.divergence(spec, x)


def liouville_logdet(spec: VectorFieldSpec, x: np.ndarray, t: float, tol: float = 1e-8) -> float:
    return _DEFAULT.with_tolerance(tol).liouville_logdet(spec, x, t)


__all__ = [
    "BatchResult",
    "DensePiece",
    "FlowIntegrator",
    "IntegrationStats",
    "TangentState",
    "TrajectorySegment",
    "divergence",
    "evaluate_field",
    "flow",
    "flow_with_tangent",
    "liouville_logdet",
]
