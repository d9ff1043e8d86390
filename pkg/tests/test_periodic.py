"""Tests for return maps, Newton shooting and the orbit census."""

import math

import numpy as np
import pytest

from dissiflow.analyzers.periodic import (
    OrbitCatalog,
    OrbitClass,
    PeriodicOrbitFinder,
    classify,
    enumerate_orbits,
    find_periodic_orbit,
    return_map,
    section_seeds,
)
from dissiflow.core.field import SectionSpec
from dissiflow.core.flowcore import FlowIntegrator
from dissiflow.exceptions import LeftDomain

from .conftest import TWO_PI

GOLDEN = (3.0 + math.sqrt(5.0)) / 2.0


class TestClassify:
    """Tests for the multiplier classification."""

    @pytest.mark.parametrize(
        "lam, mu, expected, dissipative",
        [
            (0.5, 1.6, OrbitClass.SADDLE, True),
            (0.5, 2.0, OrbitClass.SADDLE, False),
            (0.5, 0.5, OrbitClass.SINK, True),
            (2.0, 3.0, OrbitClass.SOURCE, False),
            (0.5, 1.0, OrbitClass.NON_HYPERBOLIC, True),
            (-0.5, -1.6, OrbitClass.SADDLE, True),
        ],
    )
    def test_classes(self, lam, mu, expected, dissipative):
        assert classify(lam, mu) == (expected, dissipative)

    def test_full_determinant_overrides_product(self):
        """The flag follows det DX over the period when it is given."""
        orbit_class, dissipative = classify(0.5, 2.0, det=0.5)
        assert orbit_class == OrbitClass.SADDLE
        assert dissipative


class TestReturnMap:
    """Tests for first returns to a section."""

    def test_cylinder_return(self, cylinder, cylinder_section):
        """Angular speed is 1, so the return time is 2π and r moves toward 1."""
        point, time = return_map(cylinder, cylinder_section, np.array([2.0, 0.0, 0.0]))
        assert time == pytest.approx(TWO_PI, rel=1e-8)
        assert 1.0 < point[0] < 2.0
        assert abs(point[1]) < 1e-8

    def test_second_return(self, cylinder, cylinder_section):
        finder = PeriodicOrbitFinder(cylinder, FlowIntegrator(tol=1e-10))
        result = finder.return_map(cylinder_section, np.array([1.0, 0.0, 0.0]), returns=2)
        assert result.time == pytest.approx(2 * TWO_PI, rel=1e-8)
        np.testing.assert_allclose(result.point, [1.0, 0.0, 0.0], atol=1e-7)

    def test_start_off_section(self, cylinder, cylinder_section):
        with pytest.raises(ValueError):
            return_map(cylinder, cylinder_section, np.array([1.0, 0.5, 0.0]))

    def test_leaving_box_is_reported(self, cylinder, cylinder_section):
        with pytest.raises(LeftDomain):
            return_map(cylinder, cylinder_section, np.array([1.0, 0.0, 5.0]))

    @pytest.mark.parametrize("z", [1e-6, -1e-6])
    def test_return_before_leaving_box(self, cylinder, cylinder_section, z):
        """z grows like e^t and leaves the box near t = 18, long after the return at 2π."""
        finder = PeriodicOrbitFinder(cylinder, FlowIntegrator(tol=1e-10))
        result = finder.return_map(cylinder_section, np.array([1.2, 0.0, z]))
        assert finder.horizon == 50.0
        assert result.time == pytest.approx(TWO_PI, rel=1e-8)
        assert result.point[2] == pytest.approx(z * math.exp(TWO_PI), rel=1e-6)

    def test_half_width_excludes_far_start(self, cylinder):
        section = SectionSpec(anchor=(1.0, 0.0, 0.0), normal=(0.0, 1.0, 0.0), half_width=0.1)
        with pytest.raises(ValueError):
            return_map(cylinder, section, np.array([1.5, 0.0, 0.0]))


class TestFindPeriodicOrbit:
    """Tests for Newton shooting."""

    def test_cylinder_saddle(self, cylinder, cylinder_section):
        """c = 1 makes r = 1 a dissipative saddle."""
        orbit = find_periodic_orbit(cylinder, cylinder_section, np.array([1.2, 0.0, 0.0]))
        assert orbit.period == pytest.approx(TWO_PI, rel=1e-7)
        np.testing.assert_allclose(orbit.point, [1.0, 0.0, 0.0], atol=1e-7)
        assert orbit.orbit_class == OrbitClass.SADDLE
        assert orbit.dissipative
        assert orbit.is_dissipative_saddle
        assert abs(orbit.mu) == pytest.approx(math.exp(TWO_PI), rel=1e-5)
        assert orbit.det_full == pytest.approx(math.exp(-TWO_PI), rel=1e-5)

    def test_cylinder_sink(self, cylinder_sink, cylinder_section):
        orbit = find_periodic_orbit(cylinder_sink, cylinder_section, np.array([0.8, 0.0, 0.2]))
        assert orbit.orbit_class == OrbitClass.SINK
        assert orbit.dissipative
        assert abs(orbit.point[2]) < 1e-7
        assert orbit.residual < 1e-6

    def test_catmap_fixed_orbit(self, catmap):
        """The orbit through q = 0 is a saddle that preserves volume."""
        section = catmap.sections[0]
        orbit = find_periodic_orbit(catmap, section, np.array([0.05, 0.05, 0.0]))
        assert orbit.period == pytest.approx(1.0, rel=1e-8)
        assert abs(orbit.lam) == pytest.approx(1.0 / GOLDEN, rel=1e-6)
        assert abs(orbit.mu) == pytest.approx(GOLDEN, rel=1e-6)
        assert orbit.orbit_class == OrbitClass.SADDLE
        assert not orbit.dissipative

    def test_saddle_from_off_plane_seed(self, cylinder, cylinder_section):
        """Newton steps in z must not lose the return to the box exit."""
        orbit = find_periodic_orbit(cylinder, cylinder_section, np.array([1.1, 0.0, 1e-3]))
        assert orbit.period == pytest.approx(TWO_PI, rel=1e-8)
        assert abs(orbit.point[2]) < 1e-8
        assert orbit.is_dissipative_saddle

    @pytest.mark.parametrize("returns", [2, 4, 6])
    def test_multiple_returns_reduce_to_minimal_period(self, catmap, returns):
        """A k-fold return to the fixed orbit reports period 1."""
        section = catmap.sections[0]
        orbit = find_periodic_orbit(catmap, section, np.array([1e-9, 1e-9, 0.0]), returns=returns)
        assert orbit.period == pytest.approx(1.0, rel=1e-8)

    def test_orbit_serializes(self, cylinder, cylinder_section):
        orbit = find_periodic_orbit(cylinder, cylinder_section, np.array([1.1, 0.0, 0.0]))
        data = orbit.to_dict()
        assert data["class"] == "Saddle"
        assert data["frame_dependent"] is True
        assert len(data["monodromy"]) == 2
        assert orbit.to_row()["period"] == pytest.approx(TWO_PI, rel=1e-7)


class TestSectionSeeds:
    """Tests for census seeds."""

    def test_seeds_are_reproducible_and_bounded(self, cylinder_section):
        first = section_seeds(cylinder_section, 20, seed=4, width=0.3)
        second = section_seeds(cylinder_section, 20, seed=4, width=0.3)
        np.testing.assert_array_equal(first, second)
        assert first.shape == (20, 2)
        assert np.all(np.abs(first) <= 0.3)


class TestOrbitCensus:
    """Tests for the multi-start census."""

    @pytest.mark.slow
    def test_sink_found_once(self, cylinder_sink):
        """All seeds converge to the same cycle, which is cataloged once."""
        catalog = enumerate_orbits(cylinder_sink, n_seeds=8, period_bound=7.0, seed=1)
        assert len(catalog) == 1
        orbit = catalog.orbits[0]
        assert orbit.name == "orbit-0"
        assert orbit.orbit_class == OrbitClass.SINK
        assert orbit.period == pytest.approx(TWO_PI, rel=1e-6)
        assert catalog.coverage.seeds == 8
        assert catalog.coverage.duplicates >= 1
        assert catalog.class_counts()["Sink"] == 1

    @pytest.mark.slow
    def test_thread_count_does_not_change_catalog(self, cylinder_sink):
        serial = enumerate_orbits(cylinder_sink, n_seeds=6, period_bound=7.0, seed=2, threads=1)
        pooled = enumerate_orbits(cylinder_sink, n_seeds=6, period_bound=7.0, seed=2, threads=3)
        assert [o.period for o in serial.orbits] == [o.period for o in pooled.orbits]
        assert serial.coverage.model_dump() == pooled.coverage.model_dump()

    @pytest.mark.slow
    def test_catmap_census_up_to_period_three(self, catmap):
        """A^n - I has 1, 5 and 16 fixed points, so periods <= 3 give 1 + 2 + 5 orbits."""
        catalog = enumerate_orbits(catmap, n_seeds=200, period_bound=3.0, seed=0)
        periods = sorted(round(orbit.period, 6) for orbit in catalog.orbits)
        assert periods == [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0]
        assert catalog.class_counts()["Saddle"] == 8
        for orbit in catalog.orbits:
            assert abs(orbit.mu) ** (1.0 / orbit.period) == pytest.approx(GOLDEN, rel=1e-8)

    def test_rotation_has_no_orbits(self, rotation):
        """Irrational rotation has no closed orbits."""
        catalog = enumerate_orbits(rotation, n_seeds=2, period_bound=1.0, seed=0)
        assert len(catalog) == 0
        assert catalog.coverage.converged == 0
        assert sum(catalog.coverage.failures.values()) > 0

    def test_empty_catalog_frame(self):
        catalog = OrbitCatalog()
        assert catalog.to_frame().empty
        assert catalog.sinks == []
