"""
Stable/unstable normal directions, the graph-norm angle between them, and
sampled certificates for contraction rate, angle bound, dominated splitting
and hyperbolicity.
"""

import logging
import math
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.field import VectorFieldSpec
from ..core.flowcore import FlowIntegrator
from ..exceptions import MissingDirections, NotADissipativeSaddle, NotASaddle, PerpendicularPair
from ..utils.serialization import to_jsonable
from .linpoincare import NormalCocycle, cocycle_along, multipliers_2x2, normal_frame
from .periodic import OrbitCatalog, PeriodicOrbit

logger = logging.getLogger(__name__)

DOMINATION_BOUND = 0.5


class DirectionPair(BaseModel):
    """Unit N^s and N^u directions in the normal frame at a base point."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base_point: np.ndarray
    stable: np.ndarray
    unstable: np.ndarray
    source: str = ""

    @model_validator(mode="after")
    def check_units(self) -> "DirectionPair":
        for name in ("stable", "unstable"):
            v = getattr(self, name)
            if v.shape != (2,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValueError(f"{name} direction must be a unit 2-vector")
        if abs(abs(float(np.dot(self.stable, self.unstable))) - 1.0) < 1e-14:
            raise ValueError("stable and unstable directions coincide")
        return self


class DirectionField(BaseModel):
    """N^s and N^u at every partition point of a cocycle, in its frames."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    stable: np.ndarray
    unstable: np.ndarray


class CertificateKind(str, Enum):
    DOMINATED = "dominated"
    CONTRACTION_RATE = "contraction-rate"
    ANGLE = "angle"
    HYPERBOLIC = "hyperbolic"


class CertificateSample(BaseModel):
    """One sampled inequality: lhs <relation> bound."""

    label: str
    time: float
    lhs: float
    bound: float
    relation: str
    margin: float
    passed: bool


class SplittingCertificate(BaseModel):
    """
    Sample-based evidence for one inequality family.

    The verdict is the conjunction of all samples. Margins are finite except
    for the +inf angle sentinel of perpendicular splittings.
    """

    subject: str
    kind: CertificateKind
    parameters: Dict[str, Any] = Field(default_factory=dict)
    samples: List[CertificateSample] = Field(default_factory=list)
    verdict: bool = True

    @model_validator(mode="after")
    def compute_verdict(self) -> "SplittingCertificate":
        self.verdict = all(s.passed for s in self.samples)
        return self

    @property
    def worst(self) -> Optional[CertificateSample]:
        if not self.samples:
            return None
        return min(self.samples, key=lambda s: s.margin)

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(self)


def _sample(label: str, time: float, lhs: float, bound: float, relation: str) -> CertificateSample:
    if relation in ("<", "<="):
        margin = bound - lhs
        passed = lhs < bound if relation == "<" else lhs <= bound
    else:
        margin = lhs - bound
        passed = lhs > bound if relation == ">" else lhs >= bound
    return CertificateSample(
        label=label, time=float(time), lhs=float(lhs), bound=float(bound),
        relation=relation, margin=float(margin), passed=bool(passed),
    )


def _eigenvector(matrix: np.ndarray, value: float) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    first = np.array([a[0, 1], value - a[0, 0]])
    second = np.array([value - a[1, 1], a[1, 0]])
    v = first if np.linalg.norm(first) >= np.linalg.norm(second) else second
    if np.linalg.norm(v) < 1e-300:
        v = np.array([1.0, 0.0]) if abs(a[0, 0] - value) <= abs(a[1, 1] - value) else np.array([0.0, 1.0])
    v = v / np.linalg.norm(v)
    if v[np.flatnonzero(np.abs(v) > 1e-15)[0]] < 0:
        v = -v
    return v


def eigen_directions(
    orbit_or_matrix: Union[PeriodicOrbit, np.ndarray], base_point: Optional[np.ndarray] = None
) -> DirectionPair:
    """
    Eigenvectors of a saddle's 2x2 monodromy for λ (N^s) and μ (N^u).

    Raises:
        NotASaddle: orbit class is not Saddle, or the matrix is not a real saddle
    """
    if isinstance(orbit_or_matrix, PeriodicOrbit):
        orbit = orbit_or_matrix
        if not orbit.is_saddle:
            raise NotASaddle(f"{orbit.name} is a {orbit.orbit_class.value}", orbit=orbit.name)
        matrix, point, source = orbit.monodromy, orbit.point, orbit.name
        lam, mu = orbit.lam.real, orbit.mu.real
    else:
        matrix = np.asarray(orbit_or_matrix, dtype=float)
        point = np.zeros(3) if base_point is None else np.asarray(base_point, dtype=float)
        source = "matrix"
        lam_c, mu_c = multipliers_2x2(matrix)
        if lam_c.imag != 0 or not abs(lam_c) < 1 < abs(mu_c):
            raise NotASaddle(f"matrix multipliers {lam_c}, {mu_c} are not a real saddle pair")
        lam, mu = lam_c.real, mu_c.real
    return DirectionPair(
        base_point=point,
        stable=_eigenvector(matrix, lam),
        unstable=_eigenvector(matrix, mu),
        source=source,
    )


def graph_angle(e: np.ndarray, f: np.ndarray) -> float:
    """
    |L| where F is the graph of L: E -> E^⊥; |tan| of the angle from E to F.

    Raises:
        PerpendicularPair: F = E^⊥
    """
    e = np.asarray(e, dtype=float)
    f = np.asarray(f, dtype=float)
    e = e / np.linalg.norm(e)
    a = float(np.dot(f, e))
    b = float(np.dot(f, np.array([-e[1], e[0]])))
    if abs(a) <= 1e-12 * np.linalg.norm(f):
        raise PerpendicularPair("F is the orthogonal complement of E")
    return abs(b / a)


def check_contraction_rate(orbit: PeriodicOrbit, lambda_rate: float) -> SplittingCertificate:
    """Single-sample check |λ(p)| < λ_rate^{t_p}."""
    if not 0 < lambda_rate < 1:
        raise ValueError("lambda_rate must lie in (0, 1)")
    if not orbit.is_dissipative_saddle:
        raise NotADissipativeSaddle(
            f"{orbit.name} is not a dissipative saddle", orbit=orbit.name
        )
    bound = lambda_rate ** orbit.period
    return SplittingCertificate(
        subject=orbit.name,
        kind=CertificateKind.CONTRACTION_RATE,
        parameters={"lambda_rate": lambda_rate, "period": orbit.period},
        samples=[_sample("stable multiplier", orbit.period, abs(orbit.lam), bound, "<")],
    )


def check_angle_bound(
    subjects: Union[OrbitCatalog, Iterable[Union[PeriodicOrbit, DirectionPair]]],
    alpha: float,
    subject: str = "catalog",
) -> SplittingCertificate:
    """
    angle(N^s, N^u) > α for every saddle.

    Non-saddle orbits are skipped. Perpendicular pairs count as +inf.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    items = subjects.orbits if isinstance(subjects, OrbitCatalog) else list(subjects)
    samples = []
    for item in items:
        if isinstance(item, PeriodicOrbit):
            if not item.is_saddle:
                continue
            pair = eigen_directions(item)
            time = item.period
        else:
            pair, time = item, 0.0
        try:
            angle = graph_angle(pair.stable, pair.unstable)
        except PerpendicularPair:
            angle = math.inf
        samples.append(_sample(pair.source or "pair", time, angle, alpha, ">"))
    minimum = min((s.lhs for s in samples), default=math.inf)
    return SplittingCertificate(
        subject=subject,
        kind=CertificateKind.ANGLE,
        parameters={"alpha": alpha, "minimum_angle": minimum},
        samples=samples,
    )


def _check_directions(cocycle: NormalCocycle, directions: Optional[DirectionField]) -> None:
    n = len(cocycle.partition)
    if directions is None or len(directions.stable) != n or len(directions.unstable) != n:
        raise MissingDirections("directions must be given at every partition point")


def _pairs_at_distance(partition: np.ndarray, T: float) -> List[Tuple[int, int]]:
    tol = 1e-9 * max(1.0, abs(T))
    pairs = []
    for i, t in enumerate(partition):
        j = int(np.searchsorted(partition, t + T - tol))
        if j < len(partition) and abs(partition[j] - (t + T)) <= tol and j > i:
            pairs.append((i, j))
    return pairs


def restricted_product(
    cocycle: NormalCocycle, directions: DirectionField, i: int, j: int
) -> Tuple[float, float]:
    """|P_{t_i -> t_j} E_i| and |P_{t_i -> t_j}^{-1} F_j| for unit E_i, F_j."""
    product = cocycle.product(i, j)
    e = directions.stable[i] / np.linalg.norm(directions.stable[i])
    f = directions.unstable[j] / np.linalg.norm(directions.unstable[j])
    forward = float(np.linalg.norm(product @ e))
    backward = float(np.linalg.norm(np.linalg.solve(product, f)))
    return forward, backward


def check_dominated(
    cocycle: NormalCocycle, directions: Optional[DirectionField], T: float, subject: str = "orbit"
) -> SplittingCertificate:
    """
    |P_T|E(x)| |P_{-T}|F(X_T x)| <= 1/2 at every partition point x with t + T
    also in the partition.
    """
    _check_directions(cocycle, directions)
    pairs = _pairs_at_distance(cocycle.partition, T)
    if not pairs:
        raise MissingDirections(f"no partition points at distance T = {T}")
    samples = []
    for i, j in pairs:
        forward, backward = restricted_product(cocycle, directions, i, j)
        samples.append(
            _sample("domination", cocycle.partition[i], forward * backward, DOMINATION_BOUND, "<=")
        )
    spacing = float(np.min(np.diff(cocycle.partition))) if cocycle.length else 0.0
    return SplittingCertificate(
        subject=subject,
        kind=CertificateKind.DOMINATED,
        parameters={"T": T, "spacing": spacing, "bound": DOMINATION_BOUND},
        samples=samples,
    )


def smallest_dominating_time(
    cocycle: NormalCocycle,
    directions: DirectionField,
    candidates: Optional[Sequence[float]] = None,
    subject: str = "orbit",
) -> Tuple[Optional[float], Optional[SplittingCertificate]]:
    """Smallest sampled T whose domination certificate passes."""
    if candidates is None:
        spacing = float(np.min(np.diff(cocycle.partition)))
        candidates = np.arange(1, int(cocycle.duration / spacing) + 1) * spacing
    for T in candidates:
        try:
            certificate = check_dominated(cocycle, directions, float(T), subject=subject)
        except MissingDirections:
            continue
        if certificate.verdict:
            return float(T), certificate
    return None, None


def check_hyperbolic(
    cocycle: NormalCocycle,
    directions: Optional[DirectionField],
    K: float,
    lambda_exp: float,
    horizon: Optional[float] = None,
    subject: str = "orbit",
) -> SplittingCertificate:
    """|P_t|N^s| <= K e^{-λt} and |P_{-t}|N^u| <= K e^{-λt} on the partition up to the horizon."""
    if K < 1:
        raise ValueError("K must be at least 1")
    _check_directions(cocycle, directions)
    horizon = cocycle.duration if horizon is None else horizon
    samples = []
    for j in range(1, len(cocycle.partition)):
        t = float(cocycle.partition[j] - cocycle.partition[0])
        if t > horizon * (1 + 1e-12):
            break
        if t == 0:
            continue
        forward, backward = restricted_product(cocycle, directions, 0, j)
        bound = K * math.exp(-lambda_exp * t)
        samples.append(_sample("stable", t, forward, bound, "<="))
        samples.append(_sample("unstable", t, backward, bound, "<="))
    return SplittingCertificate(
        subject=subject,
        kind=CertificateKind.HYPERBOLIC,
        parameters={"K": K, "lambda": lambda_exp, "horizon": horizon},
        samples=samples,
    )


def constant_directions(cocycle: NormalCocycle, pair: DirectionPair) -> DirectionField:
    """The same directions at every partition point (constant synthetic cocycles)."""
    n = len(cocycle.partition)
    return DirectionField(stable=np.tile(pair.stable, (n, 1)), unstable=np.tile(pair.unstable, (n, 1)))


def orbit_cocycle(
    spec: VectorFieldSpec,
    orbit: PeriodicOrbit,
    horizon: float,
    spacing: float = 0.1,
    extra_offsets: Sequence[float] = (),
    integrator: Optional[FlowIntegrator] = None,
) -> Tuple[NormalCocycle, DirectionField]:
    """
    Cocycle along a saddle orbit with eigendirections transported to every
    partition point.

    Stable directions are pulled back from the next multiple of the period
    and unstable ones pushed forward from the previous multiple, so no
    transport runs longer than one period.
    """
    pair = eigen_directions(orbit)
    tau = orbit.period
    reach = horizon + max(extra_offsets, default=0.0)
    end = math.ceil(reach / tau - 1e-12) * tau
    grid = np.arange(0.0, end + 0.5 * spacing, spacing)
    points = [grid[grid <= end]]
    points += [grid + offset for offset in extra_offsets]
    points.append(np.arange(0, round(end / tau) + 1) * tau)
    partition = np.unique(np.round(np.concatenate(points), 12))
    partition = partition[partition <= end + 1e-9]
    gaps = np.diff(partition)
    partition = np.concatenate([[partition[0]], partition[1:][gaps > 1e-9]])
    max_gap = max(spacing, float(np.max(np.diff(partition))))
    cocycle = cocycle_along(spec, orbit.point, partition, max_gap=max_gap, integrator=integrator)

    base = cocycle.frames[0].basis
    multiples = [int(np.argmin(np.abs(partition - k * tau))) for k in range(round(end / tau) + 1)]
    stable = np.empty((len(partition), 2))
    unstable = np.empty((len(partition), 2))
    for k, index in enumerate(multiples):
        rotation = cocycle.frames[index].basis @ base.T
        stable[index] = rotation @ pair.stable
        unstable[index] = rotation @ pair.unstable
    for i in range(len(partition)):
        if i in multiples:
            continue
        nxt = min(m for m in multiples if m > i)
        prv = max(m for m in multiples if m < i)
        s = np.linalg.solve(cocycle.product(i, nxt), stable[nxt])
        u = cocycle.product(prv, i) @ unstable[prv]
        stable[i] = s / np.linalg.norm(s)
        unstable[i] = u / np.linalg.norm(u)
    for arr in (stable, unstable):
        arr /= np.linalg.norm(arr, axis=1, keepdims=True)
    return cocycle, DirectionField(stable=stable, unstable=unstable)


class OseledetsDirections(BaseModel):
    """Finite-time stable/unstable directions at a non-periodic point."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pair: DirectionPair
    horizon: float
    stable_drift: float
    unstable_drift: float
    converged: bool


def _sin_between(a: np.ndarray, b: np.ndarray) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return abs(a[0] * b[1] - a[1] * b[0])


def oseledets_directions(
    spec: VectorFieldSpec,
    x: np.ndarray,
    horizon: float = 20.0,
    drift_tol: float = 1e-8,
    integrator: Optional[FlowIntegrator] = None,
) -> OseledetsDirections:
    """
    Power iteration: N^u from pushing a generic vector forward over
    [-horizon, 0], N^s from pulling one back over [0, horizon].

    The drift is the change of direction when the horizon shrinks by one
    time unit.
    """
    integrator = integrator or FlowIntegrator()
    if horizon < 2:
        raise ValueError("horizon must be at least 2 time units")
    n = int(math.ceil(horizon))
    partition = np.linspace(0.0, horizon, n + 1)
    generic = np.array([1.0, 1.0]) / math.sqrt(2.0)

    frame = normal_frame(spec, x, integrator)
    ahead = cocycle_along(spec, frame.base_point, partition, integrator=integrator)
    back_start = integrator.flow(spec, frame.base_point, -horizon).end
    behind = cocycle_along(spec, back_start, partition, integrator=integrator)

    def pull_back(start_index: int) -> np.ndarray:
        v = generic
        for k in range(start_index - 1, -1, -1):
            v = np.linalg.solve(ahead.maps[k], v)
            v = v / np.linalg.norm(v)
        return v

    def push_forward(start_index: int) -> np.ndarray:
        v = generic
        for k in range(start_index, behind.length):
            v = behind.maps[k] @ v
            v = v / np.linalg.norm(v)
        return v

    stable = pull_back(n)
    stable_short = pull_back(n - 1)
    # Express the pushed vector in the canonical frame at x.
    rotation = frame.basis @ behind.frames[-1].basis.T
    unstable = rotation @ push_forward(0)
    unstable_short = rotation @ push_forward(1)

    stable_drift = _sin_between(stable, stable_short)
    unstable_drift = _sin_between(unstable, unstable_short)
    for v in (stable, unstable):
        nz = np.flatnonzero(np.abs(v) > 1e-15)[0]
        if v[nz] < 0:
            v *= -1
    if _sin_between(stable, unstable) < 1e-12:
        raise MissingDirections(
            f"finite-time directions at {frame.base_point.tolist()} collapse onto each other",
            horizon=horizon,
        )
    pair = DirectionPair(
        base_point=frame.base_point,
        stable=stable / np.linalg.norm(stable),
        unstable=unstable / np.linalg.norm(unstable),
        source="oseledets",
    )
    converged = stable_drift < drift_tol and unstable_drift < drift_tol
    logger.debug(
        f"Oseledets directions at {frame.base_point.tolist()}: drift "
        f"{stable_drift:.2e}/{unstable_drift:.2e}"
    )
    return OseledetsDirections(
        pair=pair,
        horizon=horizon,
        stable_drift=stable_drift,
        unstable_drift=unstable_drift,
        converged=converged,
    )
