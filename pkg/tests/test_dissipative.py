"""Tests for the dissipative region and its measure-theoretic probes."""

import math

import numpy as np
import pytest

from dissiflow.analyzers.dissipative import (
    Fate,
    attractor_check,
    birkhoff_measure,
    determinant_discrepancy,
    dissipative_region,
    divergence_integral,
    lambda_delta_member,
    markov_tail_probe,
    mean_divergence,
    omega_limit_sample,
    trapped_set_measure,
    weak_basin_estimate,
    wilson_interval,
)
from dissiflow.analyzers.linpoincare import NormalFrame
from dissiflow.analyzers.periodic import OrbitCatalog, OrbitClass, PeriodicOrbit
from dissiflow.core.domain import DomainSpec
from dissiflow.core.expressions import compile_field
from dissiflow.core.regions import Neighborhood
from dissiflow.core.registry import build_flow
from dissiflow.exceptions import NotContained

from .conftest import TWO_PI

SHELL = Neighborhood.shell(0.5, 1.5, -0.5, 0.5)


def circle_orbit(orbit_class):
    """The r = 1 cycle of the cylinder flow, already converged."""
    return PeriodicOrbit(
        name="orbit-0",
        point=np.array([1.0, 0.0, 0.0]),
        period=TWO_PI,
        monodromy=np.eye(2),
        frame=NormalFrame.canonical(np.array([1.0, 0.0, 0.0])),
        lam=complex(0.5),
        mu=complex(0.5 if orbit_class == OrbitClass.SINK else 1.5),
        det_full=0.1,
        logdet=math.log(0.1),
        orbit_class=orbit_class,
        dissipative=True,
        residual=0.0,
    )


@pytest.fixture
def sink_region(cylinder_sink):
    catalog = OrbitCatalog(orbits=[circle_orbit(OrbitClass.SINK)])
    return dissipative_region(cylinder_sink, catalog, eps_fat=0.05)


@pytest.fixture
def saddle_region(cylinder):
    catalog = OrbitCatalog(orbits=[circle_orbit(OrbitClass.SADDLE)])
    return dissipative_region(cylinder, catalog, eps_fat=0.05)


class TestWilsonInterval:
    """Tests for wilson_interval."""

    def test_no_samples(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_half(self):
        low, high = wilson_interval(50, 100)
        assert low < 0.5 < high
        assert 0.5 - low == pytest.approx(high - 0.5, rel=1e-9)

    def test_all_hits(self):
        low, high = wilson_interval(200, 200)
        assert high == pytest.approx(1.0)
        assert 0.97 < low < 1.0


class TestDissipativeRegion:
    """Tests for the fattened union of dissipative orbits."""

    def test_membership(self, sink_region):
        assert not sink_region.empty
        assert [c.orbit for c in sink_region.sinks] == ["orbit-0"]
        inside = sink_region.contains(np.array([[1.02, 0.0, 0.0], [0.0, -0.99, 0.01], [1.2, 0.0, 0.0]]))
        assert inside.tolist() == [True, True, False]

    def test_saddle_role(self, saddle_region):
        assert len(saddle_region.saddles) == 1
        assert saddle_region.to_dict()["saddles"] == ["orbit-0"]

    def test_non_dissipative_orbits_excluded(self, cylinder):
        orbit = circle_orbit(OrbitClass.SADDLE).model_copy(update={"dissipative": False})
        region = dissipative_region(cylinder, OrbitCatalog(orbits=[orbit]))
        assert region.empty
        assert region.to_dict()["flags"] == ["EmptyRegion"]
        assert np.isinf(region.distance(np.zeros(3))).all()


class TestDivergenceProbes:
    """Tests for mean divergence, Λ_δ membership and determinants."""

    def test_mean_divergence_on_cycle(self, cylinder):
        assert mean_divergence(cylinder, np.array([1.0, 0.0, 0.0]), TWO_PI) == pytest.approx(-1.0, abs=1e-6)

    def test_mean_divergence_volume_preserving(self, catmap):
        assert mean_divergence(catmap, np.array([0.2, 0.1, 0.3]), 3.0) == pytest.approx(0.0, abs=1e-10)

    def test_contracting_orbit_is_member(self, cylinder):
        result = lambda_delta_member(cylinder, np.array([1.0, 0.0, 0.0]), delta=0.05, n_probe=1, horizon=20)
        assert result.member
        assert result.first_violation is None
        assert result.checked_times == 20

    def test_expanding_field_is_not_member(self):
        """div = 0.1 beats log(1.05) from the first checked time."""
        spec = compile_field(["1", "0", "0.1*z"], DomainSpec.box((-1, -1, -1), (100, 1, 1)))
        result = lambda_delta_member(spec, np.array([0.0, 0.0, 0.1]), delta=0.05, n_probe=1, horizon=20)
        assert not result.member
        assert result.first_violation == pytest.approx(1.0)
        assert len(result.witness_times) == 20

    def test_horizon_must_exceed_probe(self, cylinder):
        with pytest.raises(ValueError):
            lambda_delta_member(cylinder, np.array([1.0, 0.0, 0.0]), delta=0.1, n_probe=5, horizon=5)

    def test_determinant_discrepancy_on_cycle(self, cylinder):
        """Constant speed on the cycle makes full and normal determinants agree."""
        result = determinant_discrepancy(cylinder, np.array([1.0, 0.0, 0.0]), TWO_PI)
        assert result.mean_log_det_full == pytest.approx(-1.0, abs=1e-6)
        assert result.difference == pytest.approx(0.0, abs=1e-6)


class TestMarkovTail:
    """Tests for markov_tail_probe."""

    def test_sink_flow_passes(self, cylinder_sink):
        table = markov_tail_probe(cylinder_sink, rho=0.1, s=1.0, n_range=[1, 2, 4], n_samples=200, batch_size=100)
        assert table.normalized
        assert table.samples == 200
        assert [row.n for row in table.rows] == [1, 2, 4]
        assert table.passed
        assert table.rows[0].bound == pytest.approx(1.1 ** -1)

    def test_reproducible_across_threads(self, cylinder_sink):
        kwargs = dict(rho=0.05, s=0.5, n_range=[1, 2], n_samples=120, seed=9, batch_size=40)
        serial = markov_tail_probe(cylinder_sink, threads=1, **kwargs)
        pooled = markov_tail_probe(cylinder_sink, threads=3, **kwargs)
        assert serial.model_dump() == pooled.model_dump()

    def test_volume_preserving_rotation(self, rotation):
        table = markov_tail_probe(rotation, rho=0.1, s=1.0, n_range=[1], n_samples=50)
        assert not table.normalized
        assert table.rows[0].fraction == 0.0

    def test_torus_flow_batches(self):
        """Sign-changing divergence on the torus; batches of 500 points."""
        spec = build_flow("morse-smale-torus")
        table = markov_tail_probe(spec, rho=0.1, s=1.0, n_range=[1, 2, 3], n_samples=2000, batch_size=500)
        assert table.samples == 2000
        assert not table.normalized
        assert all(row.passed for row in table.rows)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["rotation", "morse-smale-torus", "catmap-suspension"])
    def test_tail_bound_on_torus_flows(self, name):
        """m(Ω(n)) stays below (1+ρ)^{-ns} + 3 SE for n = 1..10 with 10^5 samples."""
        table = markov_tail_probe(
            build_flow(name), rho=0.1, s=1.0, n_range=range(1, 11), n_samples=100_000, threads=4
        )
        assert table.samples == 100_000
        assert [row.n for row in table.rows] == list(range(1, 11))
        for row in table.rows:
            assert row.fraction <= row.bound + 3.0 * row.standard_error
        assert table.passed


class TestEmpiricalMeasures:
    """Tests for Birkhoff measures and ω-limit samples."""

    def test_measure_on_cycle(self, cylinder):
        measure = birkhoff_measure(cylinder, np.array([1.0, 0.0, 0.0]), TWO_PI)
        assert measure.weights.sum() == pytest.approx(1.0)
        assert divergence_integral(cylinder, measure) == pytest.approx(-1.0, abs=1e-6)
        assert measure.integrate(lambda pts: pts[0]) == pytest.approx(0.0, abs=1e-6)

    def test_omega_limit_near_cycle(self, cylinder_sink):
        sample = omega_limit_sample(cylinder_sink, np.array([1.3, 0.0, 0.3]), 30.0, TWO_PI, 0.05)
        radii = np.hypot(sample.points[:, 0], sample.points[:, 1])
        assert np.all(np.abs(radii - 1.0) < 0.1)
        assert np.all(np.abs(sample.points[:, 2]) < 0.1)
        assert sample.coverage is None

    def test_rotation_coverage(self, rotation):
        sample = omega_limit_sample(rotation, np.zeros(3), 1.0, 30.0, 0.5)
        assert 0.5 < sample.coverage <= 1.0


class TestWeakBasin:
    """Tests for weak_basin_estimate."""

    def test_empty_region(self, cylinder):
        estimate = weak_basin_estimate(cylinder, dissipative_region(cylinder, OrbitCatalog()), n_samples=100)
        assert estimate.estimate == 0.0
        assert (estimate.ci_low, estimate.ci_high) == (0.0, 0.0)
        assert estimate.flags == ["EmptyRegion"]

    def test_too_few_samples(self, cylinder_sink, sink_region):
        with pytest.raises(ValueError):
            weak_basin_estimate(cylinder_sink, sink_region, n_samples=50)

    def test_sink_attracts_the_shell(self, cylinder_sink, sink_region):
        estimate = weak_basin_estimate(
            cylinder_sink, sink_region, n_samples=200, t_transient=20.0, horizon=30.0, seed=1, batch_size=100
        )
        assert estimate.estimate == 1.0
        assert estimate.ci_low > 0.97
        assert estimate.fate_counts[Fate.HIT.value] == 200

    def test_saddle_loses_the_shell(self, cylinder, saddle_region):
        """Off z = 0 every sample leaves the box."""
        estimate = weak_basin_estimate(
            cylinder, saddle_region, n_samples=200, t_transient=10.0, horizon=20.0, seed=1, batch_size=100
        )
        assert estimate.hits == 0
        assert estimate.ci_high < 0.02
        assert estimate.fate_counts[Fate.LEFT.value] == 200
        assert "fates" not in estimate.to_dict()

    @pytest.mark.slow
    def test_sink_basin_interval(self, cylinder_sink, sink_region):
        estimate = weak_basin_estimate(
            cylinder_sink, sink_region, n_samples=1000, t_transient=20.0, horizon=40.0, seed=2, threads=2
        )
        assert estimate.ci_low > 0.99


class TestTrappedSet:
    """Tests for trapped_set_measure."""

    def test_sink_keeps_the_shell(self, cylinder_sink):
        table = trapped_set_measure(cylinder_sink, SHELL, [0.0, 2.0, 5.0], n_samples=100, seed=3)
        assert [row.estimate for row in table.rows] == [1.0, 1.0, 1.0]
        assert table.neighborhood == "cylindrical-shell"

    def test_saddle_drains_the_shell(self, cylinder):
        """|z| e^N must stay below 0.5."""
        table = trapped_set_measure(cylinder, SHELL, [0.0, 1.0, 5.0], n_samples=200, seed=3)
        estimates = [row.estimate for row in table.rows]
        assert estimates[0] == 1.0
        assert estimates == sorted(estimates, reverse=True)
        assert estimates[-1] < 0.05


class TestAttractorCheck:
    """Tests for attractor_check."""

    def test_sink_cycle_is_an_attractor(self, cylinder_sink):
        verdict = attractor_check(
            cylinder_sink, circle_orbit(OrbitClass.SINK), SHELL,
            horizon=30.0, eps=0.01, n_boundary=60, n_interior=60, seed=4,
        )
        assert verdict.trapping
        assert verdict.convergence
        assert verdict.attractor_evidence
        assert verdict.to_dict()["attractor_evidence"] is True

    def test_saddle_cycle_fails_trapping(self, cylinder):
        verdict = attractor_check(
            cylinder, circle_orbit(OrbitClass.SADDLE), SHELL,
            horizon=5.0, n_boundary=60, n_interior=20, seed=4,
        )
        assert not verdict.trapping
        assert verdict.inward_failures > 0
        assert not verdict.attractor_evidence

    def test_candidate_outside_neighborhood(self, cylinder_sink):
        with pytest.raises(NotContained):
            attractor_check(
                cylinder_sink, circle_orbit(OrbitClass.SINK), Neighborhood.shell(1.2, 1.5, -0.5, 0.5),
                n_boundary=10, n_interior=10,
            )
