"""Tests for the perturbation constructions on saddle cocycles."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from dissiflow.analyzers.linpoincare import NormalCocycle, multipliers_2x2
from dissiflow.analyzers.splitting import DirectionPair, constant_directions, eigen_directions
from dissiflow.analyzers.surgery import (
    SaddleData,
    allowance_delta,
    angle_collapse_bound,
    choose_budget,
    damping_deviations,
    delta_damped_cocycle,
    escape_multiple,
    full_report,
    graph_norm_bound,
    graph_perturbation_family,
    non_domination_witness,
    saddle_matrix_form,
    shear_matrix,
    sink_via_shear,
    uniform_contraction_cocycle,
)
from dissiflow.exceptions import (
    BadPartition,
    DenominatorNonpositive,
    MissingDirections,
    NotDissipative,
    PeriodTooShort,
    ZeroAngle,
)

CAT = np.array([[2.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def small_budget():
    """ε₀ = 1, ε₁ = 0.9, m = 3."""
    return choose_budget(C=1.0, eps=3.0, lambda_rate=0.25, alpha=10.0)


class TestSaddleData:
    """Tests for SaddleData validation."""

    def test_requires_saddle(self):
        with pytest.raises(ValidationError):
            SaddleData(lam=0.5, mu=0.9, gamma=0.1, tau=1.0)

    def test_dissipative_flag(self):
        assert SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0).dissipative
        assert not SaddleData(lam=0.5, mu=2.0, gamma=0.1, tau=1.0).dissipative


class TestShear:
    """Tests for the shear construction of a sink."""

    def test_matrix_form(self):
        data = SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0)
        np.testing.assert_allclose(saddle_matrix_form(data), [[0.5, 11.0], [0.0, 1.6]])
        assert shear_matrix(data)[1, 0] == pytest.approx(-0.190909, abs=1e-6)

    def test_sink_from_dissipative_saddle(self):
        report = sink_via_shear(SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0))
        assert report.trace == pytest.approx(0.0, abs=1e-12)
        assert report.det == pytest.approx(0.8)
        assert report.modulus == pytest.approx(math.sqrt(0.8))
        assert report.is_sink
        assert report.shear_norm == pytest.approx(2.1 / 1.1 * 0.1)
        lam, mu = report.eigenvalues
        assert lam.real == pytest.approx(0.0, abs=1e-12)
        assert lam == mu.conjugate()

    def test_modulus_is_root_of_det(self):
        report = sink_via_shear(SaddleData(lam=0.25, mu=2.0, gamma=0.3, tau=1.0))
        assert report.modulus == pytest.approx(math.sqrt(0.5))

    def test_negative_multipliers(self):
        """λμ < 0 gives a real pair ±√|λμ|."""
        report = sink_via_shear(SaddleData(lam=-0.5, mu=1.6, gamma=0.2, tau=1.0))
        assert report.is_sink
        assert report.modulus == pytest.approx(math.sqrt(0.8))

    def test_volume_preserving_saddle_refused(self):
        with pytest.raises(NotDissipative):
            sink_via_shear(SaddleData(lam=0.5, mu=2.0, gamma=0.1, tau=1.0))

    def test_zero_angle(self):
        with pytest.raises(ZeroAngle):
            saddle_matrix_form(SaddleData(lam=0.5, mu=1.6, gamma=0.0, tau=1.0))


class TestBudget:
    """Tests for choose_budget and the closed-form bounds."""

    def test_budget_inequalities(self):
        budget = choose_budget(C=10.0, eps=0.1, lambda_rate=0.9, alpha=0.5)
        assert budget.eps0 == pytest.approx(1.0 / 300.0)
        assert budget.eps1 == pytest.approx(0.99 / 900.0)
        assert all(value >= 0 for value in budget.margins().values())
        target = 2.0 / 0.5 + 4.0
        assert budget.eps1 * (1.0 + budget.eps1) ** budget.m >= target
        assert budget.eps1 * (1.0 + budget.eps1) ** (budget.m - 1) < target
        assert 8000 < budget.m < 8200

    def test_small_budget(self, small_budget):
        assert small_budget.eps0 == 1.0
        assert small_budget.eps1 == pytest.approx(0.9)
        assert small_budget.m == 3
        assert small_budget.margins()["size"] == pytest.approx(0.0, abs=1e-12)

    def test_rate_must_be_below_one(self):
        with pytest.raises(ValueError):
            choose_budget(C=1.0, eps=0.1, lambda_rate=1.0, alpha=1.0)

    def test_allowance_delta(self):
        delta = allowance_delta(eps=0.1, C=10.0)
        assert abs(1.0 - math.exp(-delta / 2.0)) < 0.1 / 10.0
        assert delta == pytest.approx(-2.0 * math.log(1.0 - 0.99 * 0.01))

    def test_closed_forms(self):
        assert graph_norm_bound(1.0, 0.1) == pytest.approx(0.2)
        assert angle_collapse_bound(1.0, 3) == pytest.approx(0.5)
        with pytest.raises(DenominatorNonpositive):
            angle_collapse_bound(1.0, 2)

    def test_escape_multiple(self):
        """0.9^7 <= 1/2 < 0.9^6."""
        assert escape_multiple(0.9, 1.0) == 7
        assert escape_multiple(0.5, 1.0) == 1


class TestCocyclePerturbations:
    """Tests for damped and uniformly contracted cocycles."""

    def test_damped_identity(self):
        cocycle = NormalCocycle.from_maps([np.eye(2)] * 3)
        damped = delta_damped_cocycle(cocycle, 0.2)
        assert np.linalg.det(damped.total()) == pytest.approx(math.exp(-0.6))
        np.testing.assert_allclose(damping_deviations(cocycle, 0.2), 1.0 - math.exp(-0.1))

    def test_damping_uneven_gaps(self):
        """The determinant gains e^{-τδ} for total time τ."""
        cocycle = NormalCocycle.from_maps([CAT] * 3, [0.0, 0.5, 1.5, 2.25])
        damped = delta_damped_cocycle(cocycle, 0.4)
        ratio = np.linalg.det(damped.total()) / np.linalg.det(cocycle.total())
        assert ratio == pytest.approx(math.exp(-0.4 * 2.25))

    def test_long_gap_rejected(self):
        cocycle = NormalCocycle.from_maps([np.eye(2)], [0.0, 2.0])
        with pytest.raises(BadPartition):
            delta_damped_cocycle(cocycle, 0.1)

    def test_uniform_contraction_makes_sink(self):
        cocycle = NormalCocycle.from_maps([np.diag([0.5, 1.2])] * 3)
        result = uniform_contraction_cocycle(cocycle, 0.5)
        assert result.is_sink
        assert max(abs(z) for z in result.multipliers) == pytest.approx(1.2**3 * 0.125)
        assert result.max_deviation == pytest.approx(0.6)

    def test_uniform_contraction_too_weak(self):
        result = uniform_contraction_cocycle(NormalCocycle.from_maps([CAT] * 2), 0.5)
        assert not result.is_sink


class TestGraphPerturbation:
    """Tests for graph_perturbation_family."""

    def test_forced_stable_multiplier(self, small_budget):
        """(1+ε₁)^{2m+1-n} λ with n = 10."""
        data = SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=10.5)
        family = graph_perturbation_family(data, small_budget)
        assert family.expected_stable == pytest.approx(0.5 * 1.9**-3)
        assert family.stable_multiplier == pytest.approx(family.expected_stable, rel=1e-10)
        assert family.unstable_multiplier == pytest.approx(1.6, rel=1e-10)
        assert family.det == pytest.approx(0.8 * 1.9**-3, rel=1e-10)
        assert len(family.deviations) == 11
        assert family.perturbed.duration == pytest.approx(10.5)

    def test_product_multipliers_in_frame(self, small_budget):
        data = SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=10.5)
        family = graph_perturbation_family(data, small_budget)
        lam, mu = multipliers_2x2(family.perturbed.total())
        assert abs(lam) == pytest.approx(family.expected_stable, rel=1e-8)
        assert abs(mu) == pytest.approx(1.6, rel=1e-8)

    def test_local_perturbation_norms(self, small_budget):
        data = SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=10.5)
        family = graph_perturbation_family(data, small_budget)
        assert family.p_norm <= graph_norm_bound(small_budget.alpha, small_budget.eps1)
        assert family.angle_bound == pytest.approx(angle_collapse_bound(0.9, 3))
        assert family.angle_at_m > 0

    def test_period_too_short(self, small_budget):
        with pytest.raises(PeriodTooShort):
            graph_perturbation_family(SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=7.0), small_budget)

    def test_needs_dissipative_saddle(self, small_budget):
        with pytest.raises(NotDissipative):
            graph_perturbation_family(SaddleData(lam=0.5, mu=2.5, gamma=20.0, tau=10.5), small_budget)


class TestNonDomination:
    """Tests for non_domination_witness."""

    def test_identity_cocycle_is_not_dominated(self):
        cocycle = NormalCocycle.from_maps([np.eye(2)] * 4)
        pair = DirectionPair(base_point=np.zeros(3), stable=np.array([1.0, 0.0]), unstable=np.array([0.0, 1.0]))
        witness = non_domination_witness(cocycle, constant_directions(cocycle, pair), T=4.0)
        assert witness.holds
        assert witness.witness_times == [1.0, 2.0, 3.0, 4.0]
        assert witness.min_product == pytest.approx(1.0)

    def test_cat_cocycle_is_dominated(self):
        cocycle = NormalCocycle.from_maps([CAT] * 3)
        witness = non_domination_witness(cocycle, constant_directions(cocycle, eigen_directions(CAT)), T=3.0)
        assert not witness.holds
        assert witness.failing_times == [1.0, 2.0, 3.0]

    def test_missing_directions(self):
        with pytest.raises(MissingDirections):
            non_domination_witness(NormalCocycle.from_maps([CAT]), None, T=1.0)


class TestFullReport:
    """Tests for the combined surgery report."""

    def test_without_budget(self):
        report = full_report(SaddleData(lam=0.5, mu=1.6, gamma=0.1, tau=1.0))
        assert report["dissipative"] is True
        assert report["sink"]["is_sink"] is True
        np.testing.assert_allclose(report["matrix_form"], [[0.5, 11.0], [0.0, 1.6]])
        assert "budget" not in report
        assert report["shear_bound_holds"] is None

    def test_with_budget(self):
        data = SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=10.5)
        report = full_report(data, C=1.0, eps=3.0, lambda_rate=0.25, alpha=10.0)
        assert report["budget"]["m"] == 3
        assert report["escape_multiple"] == escape_multiple(0.25, 10.5)
        assert report["graph_perturbation"]["stable_multiplier"] == pytest.approx(0.5 * 1.9**-3)
        assert report["shear_bound_holds"] is True

    def test_short_period_recorded(self):
        data = SaddleData(lam=0.5, mu=1.6, gamma=20.0, tau=5.0)
        report = full_report(data, C=1.0, eps=3.0, lambda_rate=0.25, alpha=10.0)
        assert report["graph_perturbation"]["error"] == "PeriodTooShort"
