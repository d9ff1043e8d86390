"""
Cocycle-level perturbations of dissipative saddles.

Every construction here is exact 2x2 linear algebra on normal cocycles:
damping and uniform contraction of a whole cocycle, the shear that turns a
dissipative saddle with a small angle into a sink, and the graph
perturbation family that forces the stable multiplier down while keeping
the unstable one. Budgets tie the perturbation sizes to an allowance ε
relative to the cocycle bound C.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import (
    BadPartition,
    DenominatorNonpositive,
    EqualEigenvalues,
    Infeasible,
    MissingDirections,
    NotDissipative,
    PeriodTooShort,
    PerpendicularPair,
    ZeroAngle,
)
from ..utils.serialization import matrix_rows, to_jsonable
from .linpoincare import NormalCocycle, multipliers_2x2
from .periodic import PeriodicOrbit
from .splitting import DirectionField, eigen_directions, graph_angle, restricted_product

logger = logging.getLogger(__name__)

SHRINK = 0.99


class SaddleData(BaseModel):
    """Multipliers, stable/unstable graph angle and period of a saddle orbit."""

    lam: float = Field(description="Stable multiplier, |λ| < 1")
    mu: float = Field(description="Unstable multiplier, |μ| > 1")
    gamma: float = Field(ge=0, description="Graph angle between N^s and N^u")
    tau: float = Field(gt=0, description="Period")

    @model_validator(mode="after")
    def check_saddle(self) -> "SaddleData":
        if not abs(self.lam) < 1 < abs(self.mu):
            raise ValueError(f"need |lam| < 1 < |mu|, got lam={self.lam}, mu={self.mu}")
        return self

    @property
    def dissipative(self) -> bool:
        return abs(self.lam * self.mu) < 1

    @classmethod
    def from_orbit(cls, orbit: PeriodicOrbit) -> "SaddleData":
        pair = eigen_directions(orbit)
        return cls(
            lam=float(np.real(orbit.lam)),
            mu=float(np.real(orbit.mu)),
            gamma=graph_angle(pair.stable, pair.unstable),
            tau=orbit.period,
        )


class PerturbationBudget(BaseModel):
    """Sizes ε₀, ε₁, m derived from (C, ε, λ_rate, α)."""

    C: float = Field(gt=0)
    eps: float = Field(gt=0)
    lambda_rate: float = Field(gt=0, lt=1)
    alpha: float = Field(gt=0)
    eps0: float = Field(gt=0)
    eps1: float = Field(gt=0)
    m: int = Field(ge=1)
    delta: float = Field(gt=0, description="Damping exponent with |1 - e^{-δ/2}| < ε/C")

    def growth_lhs(self) -> float:
        return self.eps1 * (1.0 + self.eps1) ** self.m

    def margins(self) -> Dict[str, float]:
        """Each inequality as rhs - lhs; all must be positive (the first may be zero)."""
        return {
            "size": self.eps - (2 * self.eps0 + self.eps0**2) * self.C,
            "rate": 1.0 - (1.0 + self.eps1) * self.lambda_rate,
            "angle": (self.alpha / (1.0 + self.alpha)) * self.eps0 - self.eps1,
            "growth": self.growth_lhs() - (2.0 / self.alpha + 4.0),
        }

    @model_validator(mode="after")
    def check_inequalities(self) -> "PerturbationBudget":
        margins = self.margins()
        if margins["size"] < -1e-15 * self.eps:
            raise ValueError("(2 eps0 + eps0^2) C must not exceed eps")
        for key in ("rate", "angle"):
            if margins[key] <= 0:
                raise ValueError(f"budget violates the {key} inequality")
        if margins["growth"] < 0:
            raise ValueError("eps1 (1 + eps1)^m is below 2/alpha + 4")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = to_jsonable(self)
        data["margins"] = to_jsonable(self.margins())
        return data


def _spectral_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, 2))


def _check_gaps(cocycle: NormalCocycle) -> np.ndarray:
    gaps = np.diff(cocycle.partition)
    if np.any(gaps > 1.0 + 1e-12):
        raise BadPartition("partition gaps must not exceed one time unit", max_gap=float(gaps.max()))
    return gaps


# Whole-cocycle perturbations


def allowance_delta(eps: float, C: float) -> float:
    """δ with |1 - e^{-δ/2}| < ε/C."""
    if eps <= 0 or C <= 0:
        raise ValueError("eps and C must be positive")
    return -2.0 * math.log1p(-SHRINK * min(eps / C, 1.0))


def delta_damped_cocycle(cocycle: NormalCocycle, delta: float) -> NormalCocycle:
    """
    Scale map i by e^{-Δt_i δ/2}, so the product determinant gains exactly
    e^{-τδ} for total time τ.

    Raises:
        BadPartition: a gap is longer than one time unit
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    gaps = _check_gaps(cocycle)
    factors = np.exp(-0.5 * delta * gaps)
    return cocycle.with_maps(cocycle.maps * factors[:, None, None])


def damping_deviations(cocycle: NormalCocycle, delta: float) -> np.ndarray:
    """|L_i - P_i| for the damped cocycle."""
    damped = delta_damped_cocycle(cocycle, delta)
    return np.array([_spectral_norm(a - b) for a, b in zip(damped.maps, cocycle.maps)])


class ContractionResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    cocycle: NormalCocycle
    delta: float
    multipliers: Tuple[complex, complex]
    is_sink: bool
    max_deviation: float

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "delta": self.delta,
                "multipliers": list(self.multipliers),
                "is_sink": self.is_sink,
                "max_deviation": self.max_deviation,
                "product": matrix_rows(self.cocycle.total()),
            }
        )


def uniform_contraction_cocycle(cocycle: NormalCocycle, delta: float) -> ContractionResult:
    """Scale map i by (1-δ)^{Δt_i}; both multipliers of the product scale by (1-δ)^τ."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    gaps = _check_gaps(cocycle)
    factors = (1.0 - delta) ** gaps
    perturbed = cocycle.with_maps(cocycle.maps * factors[:, None, None])
    multipliers = multipliers_2x2(perturbed.total())
    deviations = [_spectral_norm(a - b) for a, b in zip(perturbed.maps, cocycle.maps)]
    return ContractionResult(
        cocycle=perturbed,
        delta=delta,
        multipliers=multipliers,
        is_sink=all(abs(z) < 1 for z in multipliers),
        max_deviation=max(deviations, default=0.0),
    )


# Shear construction


def saddle_matrix_form(data: SaddleData) -> np.ndarray:
    """
    The period map in the N^s ⊕ (N^s)^⊥ frame: [[λ, (μ-λ)/γ], [0, μ]].

    Raises:
        ZeroAngle: γ = 0
    """
    if data.gamma <= 0:
        raise ZeroAngle("graph angle must be positive", gamma=data.gamma)
    return np.array([[data.lam, (data.mu - data.lam) / data.gamma], [0.0, data.mu]])


def shear_matrix(data: SaddleData) -> np.ndarray:
    """
    [[1, 0], [((λ+μ)/(λ-μ)) γ, 1]].

    Raises:
        EqualEigenvalues: λ = μ
    """
    if data.lam == data.mu:
        raise EqualEigenvalues("shear needs distinct eigenvalues", lam=data.lam)
    return np.array([[1.0, 0.0], [(data.lam + data.mu) / (data.lam - data.mu) * data.gamma, 1.0]])


class SinkReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    shear: np.ndarray
    trace: float
    det: float
    eigenvalues: Tuple[complex, complex]
    modulus: float
    shear_norm: float
    is_sink: bool

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "matrix": matrix_rows(self.matrix),
                "shear": matrix_rows(self.shear),
                "trace": self.trace,
                "det": self.det,
                "eigenvalues": list(self.eigenvalues),
                "modulus": self.modulus,
                "shear_norm": self.shear_norm,
                "is_sink": self.is_sink,
            }
        )


def sink_via_shear(data: SaddleData) -> SinkReport:
    """
    A·P for a dissipative saddle: traceless with det λμ, so the multipliers
    are ±i√|λμ| when λμ > 0 and a sink either way.

    Raises:
        NotDissipative: |λμ| >= 1
    """
    if not data.dissipative:
        raise NotDissipative("sink via shear needs |lam mu| < 1", lam=data.lam, mu=data.mu)
    shear = shear_matrix(data)
    product = shear @ saddle_matrix_form(data)
    eigenvalues = multipliers_2x2(product)
    modulus = max(abs(z) for z in eigenvalues)
    return SinkReport(
        matrix=product,
        shear=shear,
        trace=float(np.trace(product)),
        det=float(np.linalg.det(product)),
        eigenvalues=eigenvalues,
        modulus=float(modulus),
        shear_norm=_spectral_norm(shear - np.eye(2)),
        is_sink=modulus < 1,
    )


# Budgets and bounds


def _smallest_m(eps1: float, target: float) -> int:
    """Smallest m >= 1 with ε₁(1+ε₁)^m >= target, checked in log space."""
    log_target = math.log(target)
    log_eps1 = math.log(eps1)
    rate = math.log1p(eps1)
    m = max(1, math.ceil((log_target - log_eps1) / rate))
    while log_eps1 + m * rate < log_target:
        m += 1
    while m > 1 and log_eps1 + (m - 1) * rate >= log_target:
        m -= 1
    # log-space rounding can leave the direct product a hair short
    while eps1 * (1.0 + eps1) ** m < target:
        m += 1
    return m


def choose_budget(C: float, eps: float, lambda_rate: float, alpha: float) -> PerturbationBudget:
    """
    ε₀ = min(1, ε/(3C)), ε₁ = 0.99 min(αε₀/(1+α), (1-λ_rate)/(2λ_rate)) and
    the smallest m with ε₁(1+ε₁)^m >= 2/α + 4.

    Raises:
        Infeasible: no positive ε₁ satisfies the constraints
    """
    if C <= 0 or eps <= 0 or alpha <= 0:
        raise ValueError("C, eps and alpha must be positive")
    if not 0 < lambda_rate < 1:
        raise ValueError("lambda_rate must lie in (0, 1)")
    eps0 = min(1.0, eps / (3.0 * C))
    eps1 = SHRINK * min(alpha / (1.0 + alpha) * eps0, (1.0 - lambda_rate) / (2.0 * lambda_rate))
    if not (math.isfinite(eps1) and eps1 > 0):
        raise Infeasible("no positive eps1 satisfies the budget", C=C, eps=eps)
    m = _smallest_m(eps1, 2.0 / alpha + 4.0)
    budget = PerturbationBudget(
        C=C, eps=eps, lambda_rate=lambda_rate, alpha=alpha,
        eps0=eps0, eps1=eps1, m=m, delta=allowance_delta(eps, C),
    )
    logger.debug(f"Budget: eps0={eps0:.6g}, eps1={eps1:.6g}, m={m}")
    return budget


def graph_norm_bound(alpha: float, coefficient: float) -> float:
    """((1+α)/α)·coefficient."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (1.0 + alpha) / alpha * coefficient


def angle_collapse_bound(eps1: float, m: int) -> float:
    """
    2 / (ε₁(1+ε₁)^m - 4).

    Raises:
        DenominatorNonpositive: ε₁(1+ε₁)^m <= 4
    """
    denominator = eps1 * (1.0 + eps1) ** m - 4.0
    if denominator <= 0:
        raise DenominatorNonpositive("eps1 (1 + eps1)^m must exceed 4", eps1=eps1, m=m)
    return 2.0 / denominator


def escape_multiple(lambda_rate: float, tau: float) -> int:
    """k₀ = ⌈log(1/2) / (τ log λ_rate)⌉; λ_rate^{k τ} <= 1/2 from k₀ on."""
    if not 0 < lambda_rate < 1 or tau <= 0:
        raise ValueError("need 0 < lambda_rate < 1 and tau > 0")
    return max(1, math.ceil(math.log(0.5) / (tau * math.log(lambda_rate)) - 1e-12))


# Graph perturbation family


class GraphPerturbation(BaseModel):
    """Perturbed cocycle over the unit partition of [0, τ] and its spectral consequences."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    base: NormalCocycle
    perturbed: NormalCocycle
    deviations: np.ndarray
    stable_multiplier: float
    unstable_multiplier: float
    expected_stable: float
    det: float
    s_coefficient: float
    p_norm: float
    s_norm: float
    angle_at_m: float
    angle_bound: float
    non_domination_ratio: float

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations))

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "partition": self.perturbed.partition,
                "maps": [matrix_rows(a) for a in self.perturbed.maps],
                "deviations": self.deviations,
                "max_deviation": self.max_deviation,
                "stable_multiplier": self.stable_multiplier,
                "unstable_multiplier": self.unstable_multiplier,
                "expected_stable": self.expected_stable,
                "det": self.det,
                "s_coefficient": self.s_coefficient,
                "p_norm": self.p_norm,
                "s_norm": self.s_norm,
                "angle_at_m": self.angle_at_m,
                "angle_bound": self.angle_bound,
                "non_domination_ratio": self.non_domination_ratio,
            }
        )


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def graph_perturbation_family(
    data: SaddleData,
    budget: PerturbationBudget,
    u: Optional[np.ndarray] = None,
    v: Optional[np.ndarray] = None,
) -> GraphPerturbation:
    """
    Force the stable multiplier to (1+ε₁)^{2m+1-n} λ while keeping μ.

    The partition is t_i = i for i <= n = ⌊τ⌋ plus t_{n+1} = τ; the base map
    over a gap of length h is diag(|λ|^{h/τ}, |μ|^{h/τ}) in the (v, u) basis,
    with the multiplier signs carried by the first gap. The perturbed maps are
    L_0 = T_1 D_0 P, L_j = T_{j+1} D_j, and L_n = S T_0 D_n, where P(u) = u + ε₁ v,
    S(u) = u - c v and T_j scales v by (1+ε₁) for j <= m and by (1+ε₁)^{-1}
    after. u and v default to the unit vectors at graph angle γ.

    Raises:
        NotDissipative: |λμ| >= 1
        PeriodTooShort: τ <= 2m + 1
    """
    if not data.dissipative:
        raise NotDissipative("graph perturbation needs |lam mu| < 1", lam=data.lam, mu=data.mu)
    m, eps1 = budget.m, budget.eps1
    if data.tau <= 2 * m + 1:
        raise PeriodTooShort(f"period {data.tau} must exceed 2m + 1 = {2 * m + 1}", tau=data.tau, m=m)

    v = _unit(v if v is not None else [1.0, 0.0])
    if u is None:
        normal = np.array([-v[1], v[0]])
        u = _unit(v + data.gamma * normal) if data.gamma > 0 else normal
    u = _unit(u)
    basis = np.column_stack([v, u])
    inverse = np.linalg.inv(basis)

    n = int(math.floor(data.tau))
    partition = np.append(np.arange(n + 1, dtype=float), data.tau)
    gaps = np.diff(partition)
    signs = np.diag([np.sign(data.lam), np.sign(data.mu)])
    diagonal = [np.diag([abs(data.lam) ** (h / data.tau), abs(data.mu) ** (h / data.tau)]) for h in gaps]
    diagonal[0] = signs @ diagonal[0]

    def scale(j: int) -> np.ndarray:
        return np.diag([(1.0 + eps1) if j <= m else 1.0 / (1.0 + eps1), 1.0])

    forced = (1.0 + eps1) ** (2 * m + 1 - n)
    c = eps1 * forced * data.lam / data.mu
    p_map = np.array([[1.0, eps1], [0.0, 1.0]])
    s_map = np.array([[1.0, -c], [0.0, 1.0]])

    perturbed_coords = []
    for j, d in enumerate(diagonal):
        if j < n:
            step = scale(j + 1) @ d
        else:
            step = s_map @ scale(0) @ d
        if j == 0:
            step = step @ p_map
        perturbed_coords.append(step)

    def to_frame(a: np.ndarray) -> np.ndarray:
        return basis @ a @ inverse

    base = NormalCocycle.from_maps([to_frame(d) for d in diagonal], partition)
    perturbed = base.with_maps(np.array([to_frame(a) for a in perturbed_coords]))
    deviations = np.array([_spectral_norm(a - b) for a, b in zip(perturbed.maps, base.maps)])

    product = np.eye(2)
    for a in perturbed_coords:
        product = a @ product
    # product is upper triangular in (v, u): v and u are eigenvectors
    stable, unstable = float(product[0, 0]), float(product[1, 1])

    image = np.array([0.0, 1.0])
    for a in perturbed_coords[:m]:
        image = a @ image
    try:
        angle = graph_angle(v, basis @ image)
    except PerpendicularPair:
        angle = math.inf
    stable_growth = abs(np.prod([d[0, 0] for d in diagonal[:m]]))
    unstable_growth = abs(np.prod([d[1, 1] for d in diagonal[:m]]))

    logger.info(
        f"Graph perturbation: tau={data.tau}, m={m}, stable {data.lam:.6g} -> {stable:.6g}"
    )
    return GraphPerturbation(
        base=base,
        perturbed=perturbed,
        deviations=deviations,
        stable_multiplier=stable,
        unstable_multiplier=unstable,
        expected_stable=forced * data.lam,
        det=float(np.linalg.det(product)),
        s_coefficient=float(c),
        p_norm=_spectral_norm(to_frame(p_map) - np.eye(2)),
        s_norm=_spectral_norm(to_frame(s_map) - np.eye(2)),
        angle_at_m=float(angle),
        angle_bound=angle_collapse_bound(eps1, m),
        non_domination_ratio=float(stable_growth / unstable_growth),
    )


# Non-domination


class NonDominationWitness(BaseModel):
    holds: bool
    T: float
    witness_times: List[float] = Field(default_factory=list)
    failing_times: List[float] = Field(default_factory=list)
    min_product: float


def non_domination_witness(
    cocycle: NormalCocycle, directions: Optional[DirectionField], T: float
) -> NonDominationWitness:
    """
    |P_t|E(x)| |P_{-t}|F(X_t x)| >= 1/2 for every partition time 0 < t <= T.

    Raises:
        MissingDirections: directions are not given on the whole partition
    """
    n = len(cocycle.partition)
    if directions is None or len(directions.stable) != n or len(directions.unstable) != n:
        raise MissingDirections("directions must be given at every partition point")
    start = cocycle.partition[0]
    witness, failing, products = [], [], []
    for j in range(1, n):
        t = float(cocycle.partition[j] - start)
        if t > T * (1 + 1e-12):
            break
        if t == 0:
            continue
        forward, backward = restricted_product(cocycle, directions, 0, j)
        products.append(forward * backward)
        (witness if forward * backward >= 0.5 else failing).append(t)
    if not products:
        raise MissingDirections(f"no partition points in (0, {T}]")
    return NonDominationWitness(
        holds=not failing, T=T, witness_times=witness, failing_times=failing, min_product=min(products)
    )


# Report


def full_report(
    data: SaddleData,
    C: Optional[float] = None,
    eps: Optional[float] = None,
    lambda_rate: Optional[float] = None,
    alpha: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Every surgery output for one saddle. Budget-dependent parts run only when
    all four budget inputs are given; a period too short for the graph
    perturbation is recorded rather than raised.
    """
    report: Dict[str, Any] = {"saddle": to_jsonable(data), "dissipative": data.dissipative}
    report["matrix_form"] = matrix_rows(saddle_matrix_form(data))
    report["shear"] = matrix_rows(shear_matrix(data))
    sink = sink_via_shear(data)
    report["sink"] = sink.to_dict()
    report["shear_bound_holds"] = None
    if lambda_rate is not None:
        bound = (2.0 / (1.0 - lambda_rate) + 1.0) * data.gamma
        report["shear_bound"] = bound
        report["shear_bound_holds"] = bool(sink.shear_norm <= bound + 1e-12)

    if None not in (C, eps, lambda_rate, alpha):
        budget = choose_budget(C, eps, lambda_rate, alpha)
        report["budget"] = budget.to_dict()
        report["graph_norm_bound"] = graph_norm_bound(alpha, budget.eps1)
        report["angle_collapse_bound"] = angle_collapse_bound(budget.eps1, budget.m)
        report["escape_multiple"] = escape_multiple(lambda_rate, data.tau)
        try:
            report["graph_perturbation"] = graph_perturbation_family(data, budget).to_dict()
        except PeriodTooShort as e:
            report["graph_perturbation"] = e.to_dict()
    return to_jsonable(report)
