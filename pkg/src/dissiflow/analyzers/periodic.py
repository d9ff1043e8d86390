"""
Periodic orbits: Poincaré-section return maps, damped Newton shooting on the
return-map displacement, Floquet multipliers and the sink/saddle/dissipative
classification, and a multi-start orbit census.
"""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq, lsq_linear
from scipy.stats import qmc

from ..core.field import SectionSpec, VectorFieldSpec
from ..core.flowcore import FlowIntegrator
from ..exceptions import (
    DissiflowError,
    IntegrationFailure,
    LeftDomain,
    NewtonDiverged,
    NoReturn,
    OrbitSearchError,
    OutOfDomain,
)
from ..utils.serialization import matrix_rows, to_jsonable
from .linpoincare import NormalFrame, monodromy, multipliers_2x2

logger = logging.getLogger(__name__)

SADDLE_CLOSURE_NOTE = (
    "Saddle*_d (limits of dissipative saddles of nearby flows) is approximated "
    "by the closure of the cataloged dissipative saddles of this flow"
)


class OrbitClass(str, Enum):
    SINK = "Sink"
    SOURCE = "Source"
    SADDLE = "Saddle"
    NON_HYPERBOLIC = "NonHyperbolic"


class ReturnPoint(BaseModel):
    """A k-th return to a section."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: np.ndarray
    time: float
    returns: int = 1


class PeriodicOrbit(BaseModel):
    """A closed orbit with its Floquet data."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = "orbit"
    point: np.ndarray
    period: float = Field(gt=0)
    monodromy: np.ndarray
    frame: NormalFrame
    lam: complex
    mu: complex
    det_full: float = Field(description="det DX_t(p) over one period")
    logdet: float
    orbit_class: OrbitClass
    dissipative: bool
    residual: float
    returns: int = 1
    section_index: int = 0
    newton_iterations: int = 0

    @property
    def is_saddle(self) -> bool:
        return self.orbit_class == OrbitClass.SADDLE

    @property
    def is_dissipative_saddle(self) -> bool:
        return self.is_saddle and self.dissipative

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "point": to_jsonable(self.point),
            "period": to_jsonable(self.period),
            "monodromy": matrix_rows(self.monodromy),
            "frame": self.frame.to_dict(),
            "frame_dependent": True,
            "lambda": to_jsonable(self.lam),
            "mu": to_jsonable(self.mu),
            "det": to_jsonable(self.det_full),
            "logdet": to_jsonable(self.logdet),
            "class": self.orbit_class.value,
            "dissipative": self.dissipative,
            "residual": to_jsonable(self.residual),
            "returns": self.returns,
            "section": self.section_index,
        }

    def to_row(self) -> Dict[str, Any]:
        """One CSV row."""
        return {
            "name": self.name,
            "p_x": self.point[0],
            "p_y": self.point[1],
            "p_z": self.point[2],
            "period": self.period,
            "lambda_re": self.lam.real,
            "lambda_im": self.lam.imag,
            "mu_re": self.mu.real,
            "mu_im": self.mu.imag,
            "det": self.det_full,
            "class": self.orbit_class.value,
            "dissipative": self.dissipative,
            "residual": self.residual,
        }


class CensusCoverage(BaseModel):
    """Search budget consumed by a census."""

    seeds: int = 0
    newton_runs: int = 0
    converged: int = 0
    duplicates: int = 0
    failures: Dict[str, int] = Field(default_factory=dict)


CATALOG_COLUMNS = [
    "name", "p_x", "p_y", "p_z", "period", "lambda_re", "lambda_im",
    "mu_re", "mu_im", "det", "class", "dissipative", "residual",
]


class OrbitCatalog(BaseModel):
    """Deduplicated periodic orbits sorted by period."""

    orbits: List[PeriodicOrbit] = Field(default_factory=list)
    coverage: CensusCoverage = Field(default_factory=CensusCoverage)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.orbits)

    def by_class(self, orbit_class: OrbitClass) -> List[PeriodicOrbit]:
        return [o for o in self.orbits if o.orbit_class == orbit_class]

    @property
    def sinks(self) -> List[PeriodicOrbit]:
        return self.by_class(OrbitClass.SINK)

    @property
    def saddles(self) -> List[PeriodicOrbit]:
        return self.by_class(OrbitClass.SADDLE)

    @property
    def dissipative(self) -> List[PeriodicOrbit]:
        """Per_d: the dissipative orbits."""
        return [o for o in self.orbits if o.dissipative]

    @property
    def dissipative_saddles(self) -> List[PeriodicOrbit]:
        """Saddle_d."""
        return [o for o in self.orbits if o.is_dissipative_saddle]

    def class_counts(self) -> Dict[str, int]:
        counts = {c.value: 0 for c in OrbitClass}
        for orbit in self.orbits:
            counts[orbit.orbit_class.value] += 1
        counts["dissipative"] = len(self.dissipative)
        counts["dissipative_saddles"] = len(self.dissipative_saddles)
        return counts

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([o.to_row() for o in self.orbits], columns=CATALOG_COLUMNS)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "orbits": [o.to_dict() for o in self.orbits],
            "counts": self.class_counts(),
            "coverage": to_jsonable(self.coverage),
            "metadata": to_jsonable(self.metadata),
        }


def classify(
    lam: complex, mu: complex, det: Optional[float] = None, tol_eig: float = 1e-6
) -> Tuple[OrbitClass, bool]:
    """
    Class from the multiplier moduli and the dissipative flag from |det|.

    ``det`` defaults to λμ; pass det DX over the period when available.
    """
    moduli = sorted((abs(lam), abs(mu)))
    if any(abs(m - 1.0) <= tol_eig for m in moduli):
        orbit_class = OrbitClass.NON_HYPERBOLIC
    elif moduli[1] < 1.0:
        orbit_class = OrbitClass.SINK
    elif moduli[0] > 1.0:
        orbit_class = OrbitClass.SOURCE
    else:
        orbit_class = OrbitClass.SADDLE
    det_value = abs(lam * mu) if det is None else abs(det)
    return orbit_class, bool(det_value < 1.0 - tol_eig)


class PeriodicOrbitFinder:
    """
    Return maps and Newton shooting on one flow.

    Args:
        spec: the flow
        integrator: integrator used for every return map
        horizon: longest time searched for a return
        newton_tol: convergence threshold on the return displacement
        max_iter: Newton iteration cap
        fd_step: step of the central-difference return-map Jacobian
        tol_eig: hyperbolicity margin around modulus 1
    """

    MIN_RETURN_TIME = 1e-6
    JUMP_GUARD = 0.25

    def __init__(
        self,
        spec: VectorFieldSpec,
        integrator: Optional[FlowIntegrator] = None,
        horizon: float = 50.0,
        newton_tol: float = 1e-8,
        max_iter: int = 30,
        fd_step: float = 1e-6,
        tol_eig: float = 1e-6,
    ) -> None:
        self.spec = spec
        self.integrator = integrator or FlowIntegrator(tol=1e-10)
        self.horizon = horizon
        self.newton_tol = newton_tol
        self.max_iter = max_iter
        self.fd_step = fd_step
        self.tol_eig = tol_eig

    # Return map

    def _signed_distance(self, section: SectionSpec, points: np.ndarray) -> np.ndarray:
        disp = self.spec.domain.displacement(section.anchor_array, np.atleast_2d(points))
        return np.atleast_2d(disp) @ section.normal_array

    def _in_plane(self, section: SectionSpec, points: np.ndarray) -> np.ndarray:
        disp = self.spec.domain.displacement(section.anchor_array, np.atleast_2d(points))
        return np.atleast_2d(disp) @ section.basis().T

    def return_map(
        self,
        section: SectionSpec,
        x: np.ndarray,
        returns: int = 1,
        horizon: Optional[float] = None,
    ) -> ReturnPoint:
        """
        The ``returns``-th crossing of the section in the normal direction.

        Crossings are bracketed on a dense grid of the signed distance and
        refined by root finding on the dense output. Crossings outside the
        half-width are ignored.
        """
        horizon = horizon or self.horizon
        x = self.spec.domain.reduce(np.asarray(x, dtype=float))
        d0 = float(self._signed_distance(section, x)[0])
        if abs(d0) > 1e-6 * (1.0 + np.linalg.norm(x)):
            raise ValueError(f"{x.tolist()} is not on the section plane (distance {d0:.3e})")
        if np.linalg.norm(self._in_plane(section, x)[0]) > section.half_width:
            raise ValueError(f"{x.tolist()} lies outside the section half-width")

        compact = self.spec.domain.is_compact
        spacing = self.integrator.sample_spacing
        found = 0
        prev_t, prev_d = 0.0, d0
        try:
            for piece in self.integrator.iter_pieces(self.spec, x, horizon):
                n = max(2, math.ceil((piece.t1 - piece.t0) / spacing) + 1)
                grid = np.linspace(piece.t0, piece.t1, n)[1:]
                raw = piece.positions(grid)
                dist = self._signed_distance(section, self.spec.domain.reduce(raw))
                times = np.concatenate([[prev_t], grid])
                values = np.concatenate([[prev_d], dist])
                for i in range(len(grid)):
                    a, b = values[i], values[i + 1]
                    if not (a < 0.0 <= b):
                        continue
                    if compact and b - a > self.JUMP_GUARD:
                        continue
                    t_cross = self._refine(section, piece, times[i], times[i + 1], a, b)
                    if t_cross < self.MIN_RETURN_TIME:
                        continue
                    point = self.spec.domain.reduce(piece.positions([t_cross])[0])
                    if np.linalg.norm(self._in_plane(section, point)[0]) > section.half_width:
                        continue
                    found += 1
                    if found == returns:
                        return ReturnPoint(point=point, time=float(t_cross), returns=returns)
                prev_t, prev_d = float(grid[-1]), float(dist[-1])
        except OutOfDomain as e:
            raise LeftDomain(
                f"trajectory from {x.tolist()} left the domain before returning", start=x
            ) from e
        raise NoReturn(
            f"no {returns}-th return to the section within horizon {horizon}",
            start=x,
            horizon=horizon,
        )

    def _refine(self, section, piece, t_a: float, t_b: float, d_a: float, d_b: float) -> float:
        if d_b == 0.0:
            return float(t_b)

        def signed(t: float) -> float:
            position = self.spec.domain.reduce(piece.positions([t])[0])
            return float(self._signed_distance(section, position)[0])

        # The bracket start may come from the previous piece.
        t_a = max(t_a, piece.t0)
        if signed(t_a) >= 0.0:
            return float(t_a)
        return float(brentq(signed, t_a, t_b, xtol=1e-13, rtol=4 * np.finfo(float).eps))

    # Newton shooting

    def _displacement(self, section: SectionSpec, coords: np.ndarray, returns: int, horizon: float):
        start = section.point(coords)
        result = self.return_map(section, start, returns=returns, horizon=horizon)
        gap = self.spec.domain.displacement(start, result.point)
        return section.basis() @ gap, result

    def _jacobian(self, section, coords, returns, horizon) -> np.ndarray:
        jac = np.empty((2, 2))
        for j in range(2):
            h = self.fd_step * (1.0 + abs(coords[j]))
            step = np.zeros(2)
            step[j] = h
            forward, _ = self._displacement(section, coords + step, returns, horizon)
            backward, _ = self._displacement(section, coords - step, returns, horizon)
            jac[:, j] = (forward - backward) / (2.0 * h)
        return jac

    def find_periodic_orbit(
        self,
        section: SectionSpec,
        seed: np.ndarray,
        returns: int = 1,
        horizon: Optional[float] = None,
        section_index: int = 0,
        name: str = "orbit",
    ) -> PeriodicOrbit:
        """
        Damped Newton on the in-plane return displacement G(s) = R^k(s) - s.

        Raises:
            NonTransversalSection: section not transverse at its anchor
            NewtonDiverged: no convergence within max_iter, or no decrease
        """
        section.check_transversal(self.spec)
        horizon = horizon or self.horizon
        coords = self._in_plane(section, np.asarray(seed, dtype=float))[0]
        residual, result = self._displacement(section, coords, returns, horizon)

        for iteration in range(1, self.max_iter + 1):
            norm = float(np.linalg.norm(residual))
            if norm <= self.newton_tol:
                break
            step = lsq_linear(self._jacobian(section, coords, returns, horizon), -residual).x
            accepted = False
            for _ in range(12):
                trial = coords + step
                try:
                    trial_residual, trial_result = self._displacement(section, trial, returns, horizon)
                except (OrbitSearchError, IntegrationFailure):
                    step = 0.5 * step
                    continue
                if np.linalg.norm(trial_residual) < norm:
                    coords, residual, result = trial, trial_residual, trial_result
                    accepted = True
                    break
                step = 0.5 * step
            if not accepted:
                raise NewtonDiverged(
                    f"no decrease of |G| = {norm:.3e} at iteration {iteration}",
                    coords=coords,
                    returns=returns,
                )
        else:
            norm = float(np.linalg.norm(residual))
            if norm > self.newton_tol:
                raise NewtonDiverged(
                    f"|G| = {norm:.3e} after {self.max_iter} iterations", coords=coords, returns=returns
                )
            iteration = self.max_iter

        point = section.point(coords)
        period = self._minimal_period(point, result.time)
        return self.orbit_data(
            point, period, returns=returns, section_index=section_index,
            name=name, iterations=iteration,
        )

    def _minimal_period(self, point: np.ndarray, period: float) -> float:
        """
        Smallest closing period reachable by dividing t by j = 2..5.

        The reduction repeats on each reduced period until no divisor
        closes, so a six-fold return comes back to the true period.
        """
        closure = max(100.0 * self.newton_tol, 1e-6)
        reduced = True
        while reduced:
            reduced = False
            for j in range(5, 1, -1):
                if period / j < self.MIN_RETURN_TIME:
                    continue
                segment = self.integrator.flow(self.spec, point, period / j)
                if float(self.spec.domain.distance(point, segment.end)) <= closure:
                    period = period / j
                    reduced = True
                    break
        return period

    def orbit_data(
        self,
        point: np.ndarray,
        period: float,
        returns: int = 1,
        section_index: int = 0,
        name: str = "orbit",
        iterations: int = 0,
    ) -> PeriodicOrbit:
        """Monodromy, multipliers and class of a converged orbit."""
        matrix, lp = monodromy(self.spec, point, period, integrator=self.integrator)
        lam, mu = multipliers_2x2(matrix)
        det_full = float(np.linalg.det(lp.fundamental))
        orbit_class, dissipative = classify(lam, mu, det=det_full, tol_eig=self.tol_eig)
        residual = float(self.spec.domain.distance(lp.source.base_point, lp.target.base_point))
        return PeriodicOrbit(
            name=name,
            point=lp.source.base_point,
            period=period,
            monodromy=matrix,
            frame=lp.source,
            lam=lam,
            mu=mu,
            det_full=det_full,
            logdet=lp.logdet,
            orbit_class=orbit_class,
            dissipative=dissipative,
            residual=residual,
            returns=returns,
            section_index=section_index,
            newton_iterations=iterations,
        )

    def orbit_samples(self, orbit: PeriodicOrbit, n: int) -> np.ndarray:
        return self.integrator.sample_orbit(self.spec, orbit.point, orbit.period, n)


def return_map(
    spec: VectorFieldSpec,
    section: SectionSpec,
    x: np.ndarray,
    tol: float = 1e-10,
    horizon: float = 50.0,
    returns: int = 1,
) -> Tuple[np.ndarray, float]:
    """First (or k-th) return point and time."""
    finder = PeriodicOrbitFinder(spec, FlowIntegrator(tol=tol), horizon=horizon)
    result = finder.return_map(section, x, returns=returns)
    return result.point, result.time


def find_periodic_orbit(
    spec: VectorFieldSpec,
    section: SectionSpec,
    seed: np.ndarray,
    tol: float = 1e-10,
    returns: int = 1,
    horizon: float = 50.0,
) -> PeriodicOrbit:
    finder = PeriodicOrbitFinder(spec, FlowIntegrator(tol=tol), horizon=horizon)
    return finder.find_periodic_orbit(section, seed, returns=returns)


# Census


def section_seeds(section: SectionSpec, n_seeds: int, seed: int, width: float = 0.5) -> np.ndarray:
    """Grid plus scrambled Halton points on [-w, w]^2 in section coordinates."""
    w = min(section.half_width, width)
    side = max(1, int(math.sqrt(n_seeds / 2)))
    axis = (np.arange(side) + 0.5) / side
    grid = np.array([(a, b) for a in axis for b in axis]).reshape(-1, 2)
    n_random = max(n_seeds - len(grid), 0)
    halton = qmc.Halton(d=2, scramble=True, seed=seed).random(n_random) if n_random else np.empty((0, 2))
    unit = np.vstack([grid, halton])[:n_seeds]
    return w * (2.0 * unit - 1.0)


def auto_section(spec: VectorFieldSpec, seed: int = 0) -> SectionSpec:
    """A section through a sampled point, orthogonal to the field there."""
    rng = np.random.default_rng(seed)
    anchor = spec.domain.sample_uniform(rng, 1)[0]
    return SectionSpec(anchor=tuple(anchor), normal=tuple(spec.field(anchor)))


def _polyline_distance(domain, points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point to a closed polyline, with minimum-image segments."""
    starts = polyline
    segments = domain.displacement(polyline, np.roll(polyline, -1, axis=0))
    lengths = np.maximum(np.einsum("ij,ij->i", segments, segments), 1e-300)
    out = np.empty(len(points))
    for i, p in enumerate(points):
        rel = domain.displacement(starts, np.broadcast_to(p, starts.shape))
        s = np.clip(np.einsum("ij,ij->i", rel, segments) / lengths, 0.0, 1.0)
        out[i] = float(np.min(np.linalg.norm(rel - s[:, None] * segments, axis=1)))
    return out


class OrbitCensus:
    """
    Multi-start periodic-orbit search over the flow's sections.

    Seeds run concurrently; results are merged in seed order, so the catalog
    does not depend on scheduling.
    """

    CANDIDATE_SAMPLES = 64
    REFERENCE_SAMPLES = 512

    def __init__(
        self,
        finder: PeriodicOrbitFinder,
        n_seeds: int = 200,
        period_bound: float = 10.0,
        seed: int = 0,
        threads: int = 1,
        eps_dedup: float = 1e-4,
        max_returns: int = 8,
        seed_width: float = 0.5,
        sections: Optional[Sequence[SectionSpec]] = None,
    ) -> None:
        if n_seeds <= 0 or period_bound <= 0:
            raise ValueError("the census budget must be positive")
        self.finder = finder
        self.spec = finder.spec
        self.n_seeds = n_seeds
        self.period_bound = period_bound
        self.seed = seed
        self.threads = max(1, threads)
        self.eps_dedup = eps_dedup
        self.max_returns = max_returns
        self.seed_width = seed_width
        self.sections = list(sections or self.spec.sections) or [auto_section(self.spec, seed)]

    def _k_max(self, section: SectionSpec) -> int:
        first = self.finder.return_map(
            section, section.anchor_array, returns=1, horizon=self.period_bound
        )
        return max(1, min(self.max_returns, int(math.floor(self.period_bound / first.time))))

    def _search_seed(self, index: int, section_index: int, coords: np.ndarray, k_max: int):
        section = self.sections[section_index]
        found, failures = [], []
        for k in range(1, k_max + 1):
            horizon = 1.5 * self.period_bound + 1.0
            try:
                orbit = self.finder.find_periodic_orbit(
                    section, section.point(coords), returns=k, horizon=horizon,
                    section_index=section_index,
                )
            except DissiflowError as e:
                logger.debug(f"Seed {index} (k={k}) failed: {e.reason}: {e.message}")
                failures.append(e.reason)
                continue
            if orbit.period <= self.period_bound * (1 + 1e-9):
                found.append(orbit)
            else:
                failures.append("period-above-bound")
        return found, failures

    def run(self) -> OrbitCatalog:
        logger.info(
            f"Orbit census for {self.spec.name}: {self.n_seeds} seeds per section, "
            f"period bound {self.period_bound}"
        )
        coverage = CensusCoverage()
        failure_counts: Counter = Counter()
        tasks = []
        for section_index, section in enumerate(self.sections):
            try:
                section.check_transversal(self.spec)
                k_max = self._k_max(section)
            except DissiflowError as e:
                logger.warning(f"Section {section_index} unusable: {e.message}")
                failure_counts[e.reason] += 1
                continue
            seeds = section_seeds(section, self.n_seeds, self.seed + section_index, self.seed_width)
            for coords in seeds:
                tasks.append((len(tasks), section_index, coords, k_max))
        coverage.seeds = len(tasks)

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results = list(pool.map(lambda task: self._search_seed(*task), tasks))

        catalog_orbits: List[PeriodicOrbit] = []
        samples: List[np.ndarray] = []
        for (_, _, _, k_max), (found, failures) in zip(tasks, results):
            coverage.newton_runs += k_max
            coverage.converged += len(found)
            failure_counts.update(failures)
            for orbit in found:
                if self._is_duplicate(orbit, catalog_orbits, samples):
                    coverage.duplicates += 1
                    continue
                catalog_orbits.append(orbit)
                samples.append(self.finder.orbit_samples(orbit, self.REFERENCE_SAMPLES))

        order = sorted(
            range(len(catalog_orbits)),
            key=lambda i: (round(catalog_orbits[i].period, 9), tuple(np.round(catalog_orbits[i].point, 9))),
        )
        orbits = []
        for rank, i in enumerate(order):
            orbits.append(catalog_orbits[i].model_copy(update={"name": f"orbit-{rank}"}))
        coverage.failures = dict(sorted(failure_counts.items()))

        catalog = OrbitCatalog(
            orbits=orbits,
            coverage=coverage,
            metadata={
                "flow": self.spec.name,
                "period_bound": self.period_bound,
                "n_seeds": self.n_seeds,
                "seed": self.seed,
                "eps_dedup": self.eps_dedup,
                "max_returns": self.max_returns,
                "sections": [s.model_dump() for s in self.sections],
                "saddle_star_d": SADDLE_CLOSURE_NOTE,
            },
        )
        if not orbits:
            logger.warning(f"Census found no periodic orbits for {self.spec.name}")
        else:
            logger.info(f"Census found {len(orbits)} orbits: {catalog.class_counts()}")
        return catalog

    def _is_duplicate(
        self, orbit: PeriodicOrbit, known: List[PeriodicOrbit], samples: List[np.ndarray]
    ) -> bool:
        candidates = [
            i for i, other in enumerate(known)
            if abs(other.period - orbit.period) <= 1e-3 * max(other.period, orbit.period)
        ]
        if not candidates:
            return False
        probe = self.finder.orbit_samples(orbit, self.CANDIDATE_SAMPLES)
        for i in candidates:
            if np.max(_polyline_distance(self.spec.domain, probe, samples[i])) <= self.eps_dedup:
                return True
        return False


def enumerate_orbits(
    spec: VectorFieldSpec,
    n_seeds: int = 200,
    period_bound: float = 10.0,
    tol: float = 1e-10,
    seed: int = 0,
    threads: int = 1,
    **options: Any,
) -> OrbitCatalog:
    """Best-effort census of periodic orbits with period at most ``period_bound``."""
    finder = PeriodicOrbitFinder(spec, FlowIntegrator(tol=tol), horizon=1.5 * period_bound + 1.0)
    return OrbitCensus(
        finder, n_seeds=n_seeds, period_bound=period_bound, seed=seed, threads=threads, **options
    ).run()
