"""
The dissipative region and the measure-theoretic probes around it:
mean divergence, finite-horizon Λ_δ membership, the Markov tail bound,
Birkhoff empirical measures, ω-limit samples, weak-basin and trapped-set
Monte Carlo estimates, and attractor checks against trapping neighborhoods.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from scipy.spatial import cKDTree
from scipy.stats import binomtest

from ..core.domain import DomainKind
from ..core.field import VectorFieldSpec
from ..core.flowcore import FlowIntegrator
from ..core.regions import Neighborhood, RegionShape
from ..exceptions import NotContained
from ..utils.serialization import to_jsonable
from .linpoincare import linear_poincare
from .periodic import OrbitCatalog, OrbitClass, PeriodicOrbit

logger = logging.getLogger(__name__)

MIN_FATTENING = 1e-3


def wilson_interval(hits: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(hits), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# Region


class ComponentRole(str, Enum):
    SINK = "sink"
    SADDLE = "saddle"
    OTHER = "non-hyperbolic"


class RegionComponent(BaseModel):
    """A fattened dissipative orbit."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    orbit: str
    role: ComponentRole
    eps_fat: float = Field(gt=0)
    samples: np.ndarray
    boxsize: Optional[np.ndarray] = None

    _tree_cache: Optional[cKDTree] = PrivateAttr(default=None)

    def tree(self) -> cKDTree:
        if self._tree_cache is None:
            self._tree_cache = cKDTree(self.samples, boxsize=self.boxsize)
        return self._tree_cache

    def distance(self, points: np.ndarray) -> np.ndarray:
        distance, _ = self.tree().query(np.atleast_2d(points))
        return distance


class RegionApprox(BaseModel):
    """Union of fattened dissipative orbits, split into sinks and saddles."""

    components: List[RegionComponent] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.components

    @property
    def sinks(self) -> List[RegionComponent]:
        return [c for c in self.components if c.role == ComponentRole.SINK]

    @property
    def saddles(self) -> List[RegionComponent]:
        return [c for c in self.components if c.role == ComponentRole.SADDLE]

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of reduced points: nearest-sample distance <= eps_fat of some component."""
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        for component in self.components:
            inside |= component.distance(pts) <= component.eps_fat
        return inside

    def distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        if self.empty:
            return np.full(len(pts), np.inf)
        return np.min([c.distance(pts) for c in self.components], axis=0)

    def restricted(self, names: Sequence[str]) -> "RegionApprox":
        """The components built from the named orbits."""
        keep = [c for c in self.components if c.orbit in set(names)]
        return RegionApprox(components=keep, provenance={**self.provenance, "restricted_to": list(names)})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "empty": self.empty,
            "flags": ["EmptyRegion"] if self.empty else [],
            "components": [
                {"orbit": c.orbit, "role": c.role.value, "eps_fat": c.eps_fat, "samples": len(c.samples)}
                for c in self.components
            ],
            "sinks": [c.orbit for c in self.sinks],
            "saddles": [c.orbit for c in self.saddles],
            "provenance": to_jsonable(self.provenance),
        }


def densified_samples(
    spec: VectorFieldSpec,
    orbit: PeriodicOrbit,
    spacing: float,
    integrator: Optional[FlowIntegrator] = None,
    max_samples: int = 200_000,
) -> np.ndarray:
    """Orbit samples with consecutive distance at most ``spacing``."""
    integrator = integrator or FlowIntegrator()
    coarse = integrator.sample_orbit(spec, orbit.point, orbit.period, 512)
    steps = spec.domain.distance(coarse, np.roll(coarse, -1, axis=0))
    n = int(min(max_samples, max(512, math.ceil(2.0 * float(np.max(steps)) * 512 / spacing))))
    if n == 512:
        return coarse
    return integrator.sample_orbit(spec, orbit.point, orbit.period, n)


def dissipative_region(
    spec: VectorFieldSpec,
    catalog: OrbitCatalog,
    eps_fat: Optional[float] = None,
    integrator: Optional[FlowIntegrator] = None,
) -> RegionApprox:
    """
    Fattened union of the cataloged dissipative orbits.

    The default radius per orbit is 10x its closure residual, floored at 1e-3.
    """
    integrator = integrator or FlowIntegrator()
    boxsize = spec.domain.kd_boxsize
    roles = {OrbitClass.SINK: ComponentRole.SINK, OrbitClass.SADDLE: ComponentRole.SADDLE}
    components = []
    for orbit in catalog.dissipative:
        radius = eps_fat if eps_fat is not None else max(10.0 * orbit.residual, MIN_FATTENING)
        samples = densified_samples(spec, orbit, radius / 2.0, integrator)
        if boxsize is not None:
            samples = np.mod(samples, boxsize)
        components.append(
            RegionComponent(
                orbit=orbit.name,
                role=roles.get(orbit.orbit_class, ComponentRole.OTHER),
                eps_fat=radius,
                samples=samples,
                boxsize=boxsize,
            )
        )
    region = RegionApprox(
        components=components,
        provenance={
            "flow": spec.name,
            "orbits": [c.orbit for c in components],
            "periodic_boundary": boxsize is not None,
        },
    )
    if region.empty:
        logger.warning(f"Dissipative region of {spec.name} is empty")
    else:
        logger.info(
            f"Dissipative region: {len(region.sinks)} sink and {len(region.saddles)} saddle components"
        )
    return region


# Divergence and determinants


def mean_divergence(
    spec: VectorFieldSpec, x: np.ndarray, t: float, integrator: Optional[FlowIntegrator] = None
) -> float:
    """(1/t) log det DX_t(x)."""
    if t <= 0:
        raise ValueError("t must be positive")
    integrator = integrator or FlowIntegrator()
    return integrator.liouville_logdet(spec, x, t) / t


class LambdaDeltaResult(BaseModel):
    member: bool
    delta: float
    n_probe: float
    horizon: float
    checked_times: int
    first_violation: Optional[float] = None
    witness_times: List[float] = Field(default_factory=list)


def lambda_delta_member(
    spec: VectorFieldSpec,
    x: np.ndarray,
    delta: float,
    n_probe: float,
    horizon: float,
    spacing: float = 1.0,
    integrator: Optional[FlowIntegrator] = None,
) -> LambdaDeltaResult:
    """Check log det DX_t(x) < t log(1 + δ) on a grid of times in [N_probe, horizon]."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if horizon <= n_probe:
        raise ValueError("horizon must exceed N_probe")
    integrator = integrator or FlowIntegrator()
    times = np.arange(n_probe, horizon + 0.5 * spacing, spacing)
    times = times[times <= horizon + 1e-12]
    _, logdets = integrator.logdet_series(spec, x, times)
    violations = times[logdets >= times * math.log1p(delta)]
    return LambdaDeltaResult(
        member=len(violations) == 0,
        delta=delta,
        n_probe=n_probe,
        horizon=horizon,
        checked_times=len(times),
        first_violation=float(violations[0]) if len(violations) else None,
        witness_times=[float(t) for t in violations],
    )


class MarkovTailRow(BaseModel):
    n: int
    time: float
    fraction: float
    bound: float
    standard_error: float
    passed: bool


class MarkovTailTable(BaseModel):
    rho: float
    s: float
    samples: int
    seed: int
    normalized: bool = Field(description="True on box domains, where escaped samples are excluded")
    rows: List[MarkovTailRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def _batches(n: int, batch_size: int, seed: int) -> List[Tuple[int, np.random.Generator]]:
    n_batches = max(1, math.ceil(n / batch_size))
    children = np.random.SeedSequence(seed).spawn(n_batches)
    sizes = [min(batch_size, n - i * batch_size) for i in range(n_batches)]
    return [(size, np.random.default_rng(child)) for size, child in zip(sizes, children)]


def _run_batches(fn: Callable, batches: List, threads: int) -> List:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda args: fn(*args), batches))


def markov_tail_probe(
    spec: VectorFieldSpec,
    rho: float,
    s: float,
    n_range: Sequence[int],
    n_samples: int = 10_000,
    seed: int = 0,
    batch_size: int = 5_000,
    threads: int = 1,
    integrator: Optional[FlowIntegrator] = None,
) -> MarkovTailTable:
    """
    Empirical m(Ω(n)) = m{x : |det DX_{ns}(x)| >= (1+ρ)^{ns}} against (1+ρ)^{-ns}.

    A row passes when the fraction is at most bound + 3 standard errors.
    """
    if rho <= 0 or s <= 0:
        raise ValueError("rho and s must be positive")
    integrator = integrator or FlowIntegrator(tol=1e-6)
    ns = sorted(set(int(n) for n in n_range))
    times = np.array([n * s for n in ns], dtype=float)
    thresholds = times * math.log1p(rho)

    def run(size: int, rng: np.random.Generator):
        points = spec.domain.sample_uniform(rng, size)
        result = integrator.flow_batch(spec, points, times, with_logdet=True)
        keep = ~result.escaped
        exceed = result.logdet[:, keep] >= thresholds[:, None] - 1e-12
        return exceed.sum(axis=1), int(keep.sum())

    outputs = _run_batches(run, _batches(n_samples, batch_size, seed), threads)
    counts = np.sum([c for c, _ in outputs], axis=0)
    total = sum(k for _, k in outputs)
    rows = []
    for n, t, count in zip(ns, times, counts):
        fraction = count / total if total else 0.0
        bound = (1.0 + rho) ** (-t)
        se = math.sqrt(fraction * (1.0 - fraction) / total) if total else 0.0
        rows.append(
            MarkovTailRow(
                n=n, time=float(t), fraction=float(fraction), bound=bound,
                standard_error=se, passed=bool(fraction <= bound + 3.0 * se),
            )
        )
    return MarkovTailTable(
        rho=rho, s=s, samples=total, seed=seed,
        normalized=spec.domain.kind == DomainKind.BOX, rows=rows,
    )


# Empirical measures and ω-limits


class EmpiricalMeasure(BaseModel):
    """μ_{x,t}: Gauss-Legendre weighted positions along [0, t]."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base_point: np.ndarray
    time: float
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """∫ f dμ for f taking (3, n) positions."""
        values = np.broadcast_to(np.asarray(fn(self.points.T), dtype=float), self.weights.shape)
        return float(np.dot(self.weights, values))


def birkhoff_measure(
    spec: VectorFieldSpec,
    x: np.ndarray,
    t: float,
    spacing: float = 0.1,
    nodes: int = 8,
    integrator: Optional[FlowIntegrator] = None,
) -> EmpiricalMeasure:
    """Uniform time average of point masses along [0, t]."""
    if t <= 0:
        raise ValueError("t must be positive")
    integrator = integrator or FlowIntegrator()
    n_sub = max(1, math.ceil(t / spacing))
    h = t / n_sub
    base_nodes, base_weights = np.polynomial.legendre.leggauss(nodes)
    left = np.arange(n_sub) * h
    times = (left[:, None] + 0.5 * h * (base_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(base_weights * 0.5 * h / t, n_sub)
    positions, _ = integrator.logdet_series(spec, x, times)
    return EmpiricalMeasure(
        base_point=spec.domain.reduce(np.asarray(x, dtype=float)),
        time=float(t),
        points=positions,
        weights=weights / weights.sum(),
    )


def divergence_integral(spec: VectorFieldSpec, measure: EmpiricalMeasure, integrator: Optional[FlowIntegrator] = None) -> float:
    """∫ div X dμ."""
    integrator = integrator or FlowIntegrator()
    if spec.divergence is not None:
        return measure.integrate(spec.divergence)
    return measure.integrate(lambda pts: np.array([integrator.divergence(spec, p) for p in pts.T]))


class OmegaLimitSample(BaseModel):
    """Centers of ε-grid cells visited during [t_transient, t_transient + t_window]."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    points: np.ndarray
    eps: float
    t_transient: float
    t_window: float
    coverage: Optional[float] = None


def omega_limit_sample(
    spec: VectorFieldSpec,
    x: np.ndarray,
    t_transient: float,
    t_window: float,
    eps: float,
    integrator: Optional[FlowIntegrator] = None,
) -> OmegaLimitSample:
    """
    Outer approximation of ω(x) for a finite horizon.

    On compact domains the coverage (occupied cells over all cells) of the
    chart is reported as an equidistribution statistic.
    """
    if t_transient <= 0 or t_window <= 0 or eps <= 0:
        raise ValueError("t_transient, t_window and eps must be positive")
    integrator = integrator or FlowIntegrator()
    start = integrator.flow(spec, x, t_transient).end
    segment = integrator.flow(spec, start, t_window)
    chart = spec.domain.chart_coordinates(segment.positions)
    cells = np.unique(np.floor(chart / eps).astype(np.int64), axis=0)
    coverage = None
    if spec.domain.kind == DomainKind.FLAT_TORUS:
        total = np.prod(np.ceil(np.asarray(spec.domain.periods) / eps))
        coverage = float(len(cells) / total)
    elif spec.domain.kind == DomainKind.SUSPENSION:
        coverage = float(len(cells) / math.ceil(1.0 / eps) ** 3)
    points = (cells + 0.5) * eps
    if spec.domain.kind == DomainKind.SUSPENSION:
        powers = spec.domain.fiber_power(points[:, 2])
        points = np.column_stack([np.einsum("nij,nj->ni", powers, points[:, :2]), points[:, 2]])
    return OmegaLimitSample(
        points=points, eps=eps, t_transient=t_transient, t_window=t_window, coverage=coverage
    )


# Monte Carlo basin and trapped-set estimates


class Fate(str, Enum):
    HIT = "hits-region"
    MISS = "misses-region"
    LEFT = "left-domain"
    UNDECIDED = "undecided"


class BasinEstimate(BaseModel):
    """Weak-basin Monte Carlo estimate with Wilson interval and per-sample fates."""

    region: str
    n: int
    hits: int
    estimate: float
    ci_low: float
    ci_high: float
    fates: List[Fate] = Field(default_factory=list)
    fate_counts: Dict[str, int] = Field(default_factory=dict)
    seed: int
    t_transient: float
    horizon: float
    flags: List[str] = Field(default_factory=list)

    def to_dict(self, with_fates: bool = False) -> Dict[str, Any]:
        data = to_jsonable(self)
        if not with_fates:
            data.pop("fates")
        return data


def weak_basin_estimate(
    spec: VectorFieldSpec,
    region: RegionApprox,
    n_samples: int = 1000,
    t_transient: float = 50.0,
    horizon: float = 200.0,
    seed: int = 0,
    check_spacing: float = 0.5,
    batch_size: int = 1000,
    threads: int = 1,
    integrator: Optional[FlowIntegrator] = None,
    name: str = "dissipative-region",
) -> BasinEstimate:
    """
    Fraction of uniformly sampled points whose orbit visits the region in
    [t_transient, horizon] and again in the final quarter of that window.
    """
    if n_samples < 100:
        raise ValueError("weak-basin estimates need at least 100 samples")
    if not 0 < t_transient < horizon:
        raise ValueError("need 0 < t_transient < horizon")
    if region.empty:
        logger.warning(f"Weak-basin estimate for {name}: region is empty")
        return BasinEstimate(
            region=name, n=n_samples, hits=0, estimate=0.0, ci_low=0.0, ci_high=0.0,
            seed=seed, t_transient=t_transient, horizon=horizon, flags=["EmptyRegion"],
        )
    integrator = integrator or FlowIntegrator(tol=1e-6)
    times = np.arange(t_transient, horizon + 0.5 * check_spacing, check_spacing)
    times = times[times <= horizon + 1e-12]
    times = np.concatenate([[0.0], times]) if times[0] > 0 else times
    window = times >= t_transient
    final = times >= horizon - 0.25 * (horizon - t_transient)

    def run(size: int, rng: np.random.Generator) -> List[Fate]:
        points = spec.domain.sample_uniform(rng, size)
        result = integrator.flow_batch(spec, points, times)
        m, n, _ = result.positions.shape
        inside = region.contains(result.positions.reshape(m * n, 3)).reshape(m, n)
        fates = []
        for k in range(n):
            if result.escaped[k]:
                fates.append(Fate.LEFT)
            elif inside[window, k].any():
                fates.append(Fate.HIT if inside[final, k].any() else Fate.MISS)
            else:
                fates.append(Fate.UNDECIDED)
        return fates

    logger.info(f"Weak-basin estimate for {name}: {n_samples} samples, horizon {horizon}")
    outputs = _run_batches(run, _batches(n_samples, batch_size, seed), threads)
    fates = [fate for batch in outputs for fate in batch]
    hits = sum(1 for f in fates if f == Fate.HIT)
    low, high = wilson_interval(hits, len(fates))
    counts = {f.value: 0 for f in Fate}
    for fate in fates:
        counts[fate.value] += 1
    return BasinEstimate(
        region=name, n=len(fates), hits=hits, estimate=hits / len(fates),
        ci_low=low, ci_high=high, fates=fates, fate_counts=counts,
        seed=seed, t_transient=t_transient, horizon=horizon,
    )


class TrappedSetRow(BaseModel):
    N: float
    estimate: float
    ci_low: float
    ci_high: float
    count: int


class TrappedSetTable(BaseModel):
    neighborhood: str
    n: int
    seed: int
    rows: List[TrappedSetRow] = Field(default_factory=list)


def trapped_set_measure(
    spec: VectorFieldSpec,
    neighborhood: Neighborhood,
    n_values: Sequence[float],
    n_samples: int = 1000,
    seed: int = 0,
    spacing: float = 0.25,
    batch_size: int = 1000,
    threads: int = 1,
    integrator: Optional[FlowIntegrator] = None,
) -> TrappedSetTable:
    """m{x : X_t(x) in U for all 0 <= t <= N} for each N, from first exit times on a grid."""
    integrator = integrator or FlowIntegrator(tol=1e-6)
    n_values = sorted(float(v) for v in n_values)
    t_max = n_values[-1]
    times = np.arange(0.0, t_max + 0.5 * spacing, spacing)
    times = np.unique(np.concatenate([times[times <= t_max], n_values]))

    def run(size: int, rng: np.random.Generator) -> np.ndarray:
        points = spec.domain.sample_uniform(rng, size)
        if t_max == 0:
            inside = neighborhood.contains(points)[None, :]
        else:
            result = integrator.flow_batch(spec, points, times)
            m, n, _ = result.positions.shape
            inside = neighborhood.contains(result.positions.reshape(m * n, 3)).reshape(m, n)
            if spec.domain.kind == DomainKind.BOX:
                inside &= ~(np.asarray(times)[:, None] >= result.escape_time[None, :])
        outside = ~inside
        return np.where(outside.any(axis=0), times[np.argmax(outside, axis=0)], np.inf)

    outputs = _run_batches(run, _batches(n_samples, batch_size, seed), threads)
    exits = np.concatenate(outputs)
    rows = []
    for N in n_values:
        count = int(np.sum(exits > N))
        low, high = wilson_interval(count, len(exits))
        rows.append(TrappedSetRow(N=N, estimate=count / len(exits), ci_low=low, ci_high=high, count=count))
    return TrappedSetTable(neighborhood=neighborhood.shape.value, n=len(exits), seed=seed, rows=rows)


# Attractor evidence


class AttractorVerdict(BaseModel):
    candidate: str
    trapping: bool
    convergence: bool
    inward_failures: int
    escape_failures: int
    boundary_samples: int
    max_final_distance: float
    eps: float
    horizon: float
    tau_trap: float

    @property
    def attractor_evidence(self) -> bool:
        return self.trapping and self.convergence

    def to_dict(self) -> Dict[str, Any]:
        data = to_jsonable(self)
        data["attractor_evidence"] = self.attractor_evidence
        return data


Candidate = Union[PeriodicOrbit, RegionApprox, None]


def _candidate_distance(
    spec: VectorFieldSpec, candidate: Candidate, integrator: FlowIntegrator
) -> Tuple[str, Callable[[np.ndarray], np.ndarray], Optional[np.ndarray]]:
    if candidate is None:
        return "whole-space", lambda pts: np.zeros(len(pts)), None
    if isinstance(candidate, RegionApprox):
        samples = np.vstack([c.samples for c in candidate.components]) if not candidate.empty else None
        return "region", candidate.distance, samples
    samples = densified_samples(spec, candidate, 1e-3, integrator)
    tree = cKDTree(np.mod(samples, spec.domain.kd_boxsize) if spec.domain.kd_boxsize is not None else samples,
                   boxsize=spec.domain.kd_boxsize)
    return candidate.name, lambda pts: tree.query(pts)[0], samples


def attractor_check(
    spec: VectorFieldSpec,
    candidate: Candidate,
    neighborhood: Neighborhood,
    horizon: float = 50.0,
    tau_trap: float = 1.0,
    eps: float = 1e-2,
    n_boundary: int = 200,
    n_interior: int = 200,
    seed: int = 0,
    integrator: Optional[FlowIntegrator] = None,
) -> AttractorVerdict:
    """
    Trapping: boundary samples of U point strictly inward and stay in U over
    [0, τ_trap]. Convergence: interior samples end within ε of the candidate.

    Raises:
        NotContained: the candidate set leaves U
    """
    integrator = integrator or FlowIntegrator(tol=1e-8)
    rng = np.random.default_rng(seed)
    label, distance, samples = _candidate_distance(spec, candidate, integrator)
    if samples is not None and not np.all(neighborhood.contains(samples)):
        raise NotContained(f"candidate {label} is not contained in the neighborhood", candidate=label)

    points, normals = neighborhood.boundary_samples(rng, n_boundary)
    inward_failures = escape_failures = 0
    if len(points):
        velocity = np.asarray(spec.field(points.T), dtype=float).T
        inward_failures = int(np.sum(np.einsum("ij,ij->i", velocity, normals) >= 0.0))
        times = np.linspace(0.0, tau_trap, 11)[1:]
        result = integrator.flow_batch(spec, points, times)
        m, n, _ = result.positions.shape
        stays = neighborhood.contains(result.positions.reshape(m * n, 3)).reshape(m, n)
        escape_failures = int(np.sum(~stays.all(axis=0) | result.escaped))

    if neighborhood.shape == RegionShape.WHOLE:
        interior = spec.domain.sample_uniform(rng, n_interior)
    else:
        interior = neighborhood.sample(rng, n_interior)
    final = integrator.flow_batch(spec, interior, [0.0, horizon])
    end = spec.domain.reduce(final.positions[-1])
    if spec.domain.kd_boxsize is not None:
        end = np.mod(end, spec.domain.kd_boxsize)
    distances = np.where(final.escaped, np.inf, distance(end))
    max_distance = float(np.max(distances))

    verdict = AttractorVerdict(
        candidate=label,
        trapping=inward_failures == 0 and escape_failures == 0,
        convergence=max_distance <= eps,
        inward_failures=inward_failures,
        escape_failures=escape_failures,
        boundary_samples=len(points),
        max_final_distance=max_distance,
        eps=eps,
        horizon=horizon,
        tau_trap=tau_trap,
    )
    logger.info(
        f"Attractor check for {label}: trapping={verdict.trapping}, convergence={verdict.convergence}"
    )
    return verdict


# Determinant bookkeeping


class DeterminantDiscrepancy(BaseModel):
    time: float
    mean_log_det_full: float
    mean_log_det_normal: float
    difference: float


def determinant_discrepancy(
    spec: VectorFieldSpec, x: np.ndarray, t: float, integrator: Optional[FlowIntegrator] = None
) -> DeterminantDiscrepancy:
    """
    (1/t) log|det DX_t| next to (1/t) log|det P_t|; they differ by the
    flow-speed term (1/t) log(|X(X_t x)| / |X(x)|).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    lp = linear_poincare(spec, x, t, integrator=integrator)
    full = lp.logdet / t
    normal = (lp.logdet - math.log(lp.speed_ratio)) / t
    return DeterminantDiscrepancy(
        time=float(t), mean_log_det_full=full, mean_log_det_normal=normal, difference=full - normal
    )
