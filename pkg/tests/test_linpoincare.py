"""Tests for normal frames and the linear Poincaré cocycle."""

import math

import numpy as np
import pytest

from dissiflow.analyzers.linpoincare import (
    NormalCocycle,
    NormalFrame,
    cocycle_along,
    estimate_cocycle_bound,
    linear_poincare,
    monodromy,
    multipliers_2x2,
    normal_frame,
    project_normal,
)
from dissiflow.core.flowcore import FlowIntegrator

from .conftest import TWO_PI

GOLDEN = (3.0 + math.sqrt(5.0)) / 2.0


class TestNormalFrame:
    """Tests for frames of the normal plane."""

    def test_frame_on_cylinder_cycle(self, cylinder):
        """At (1, 0, 0) the frame is e1 = radial, e2 = -z."""
        frame = normal_frame(cylinder, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(frame.direction, [0, 1, 0])
        np.testing.assert_allclose(frame.e1, [1, 0, 0])
        np.testing.assert_allclose(frame.e2, [0, 0, -1])

    def test_frame_is_orthonormal(self, cylinder):
        frame = normal_frame(cylinder, np.array([0.4, 1.1, -0.3]))
        vectors = np.vstack([frame.direction, frame.e1, frame.e2])
        np.testing.assert_allclose(vectors @ vectors.T, np.eye(3), atol=1e-12)

    def test_projection_drops_flow_direction(self, cylinder):
        """π_x(X(x)) = 0."""
        x = np.array([0.4, 1.1, -0.3])
        frame = normal_frame(cylinder, x)
        np.testing.assert_allclose(project_normal(frame, cylinder.field(x)), [0, 0], atol=1e-12)

    def test_rotated_frame_keeps_plane(self):
        frame = NormalFrame.canonical().rotated(0.3)
        np.testing.assert_allclose(frame.basis @ frame.direction, [0, 0], atol=1e-12)
        assert np.linalg.norm(frame.e1) == pytest.approx(1.0)


class TestLinearPoincare:
    """Tests for P_t in transported frames."""

    def test_determinant_matches_liouville(self, cylinder, integrator):
        """det P_t = det DX_t · |X(x)| / |X(X_t x)|."""
        x = np.array([1.3, -0.2, 0.1])
        lp = linear_poincare(cylinder, x, 1.5, integrator=integrator)
        assert lp.determinant == pytest.approx(math.exp(lp.logdet) / lp.speed_ratio, rel=1e-6)

    def test_rotation_is_identity(self, rotation, integrator):
        lp = linear_poincare(rotation, np.array([0.1, 0.2, 0.3]), 2.0, integrator=integrator)
        np.testing.assert_allclose(lp.matrix, np.eye(2), atol=1e-10)
        assert lp.speed_ratio == pytest.approx(1.0)

    def test_cylinder_monodromy(self, cylinder, integrator):
        """Multipliers of the r = 1 cycle are e^{-4π} and e^{2π}."""
        matrix, lp = monodromy(cylinder, np.array([1.0, 0.0, 0.0]), TWO_PI, integrator=integrator)
        lam, mu = multipliers_2x2(matrix)
        assert abs(lam) == pytest.approx(math.exp(-2 * TWO_PI), rel=1e-3)
        assert abs(mu) == pytest.approx(math.exp(TWO_PI), rel=1e-6)
        assert lp.speed_ratio == pytest.approx(1.0, abs=1e-8)

    def test_catmap_monodromy(self, catmap, integrator):
        """The closed orbit through q = 0 has the eigenvalues of the gluing matrix."""
        matrix, _ = monodromy(catmap, np.zeros(3), 1.0, integrator=integrator)
        lam, mu = multipliers_2x2(matrix)
        assert abs(lam) == pytest.approx(1.0 / GOLDEN, rel=1e-7)
        assert abs(mu) == pytest.approx(GOLDEN, rel=1e-7)


class TestMultipliers:
    """Tests for multipliers_2x2."""

    def test_real_pair_sorted(self):
        lam, mu = multipliers_2x2(np.array([[2.0, 1.0], [1.0, 1.0]]))
        assert lam.real == pytest.approx(1.0 / GOLDEN)
        assert mu.real == pytest.approx(GOLDEN)

    def test_complex_pair(self):
        lam, mu = multipliers_2x2(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert abs(lam) == pytest.approx(1.0)
        assert lam == mu.conjugate()


class TestCocycle:
    """Tests for cocycles along orbits and synthetic cocycles."""

    def test_product_order(self):
        """product(i, j) = maps[j-1] ... maps[i]."""
        a = np.array([[1.0, 1.0], [0.0, 1.0]])
        b = np.array([[2.0, 0.0], [0.0, 0.5]])
        cocycle = NormalCocycle.from_maps([a, b])
        np.testing.assert_allclose(cocycle.product(0, 2), b @ a)
        np.testing.assert_allclose(cocycle.product(1, 1), np.eye(2))
        assert cocycle.duration == 2.0

    def test_cocycle_matches_single_map(self, cylinder, integrator):
        """Composed gaps have the singular values of one long map."""
        x = np.array([1.2, 0.0, 0.05])
        cocycle = cocycle_along(cylinder, x, [0.0, 0.5, 1.0, 1.5, 2.0], integrator=integrator)
        whole = linear_poincare(cylinder, x, 2.0, integrator=integrator)
        np.testing.assert_allclose(
            np.linalg.svd(cocycle.total(), compute_uv=False),
            np.linalg.svd(whole.matrix, compute_uv=False),
            rtol=1e-6,
        )
        assert len(cocycle.frames) == 5

    @pytest.mark.parametrize(
        "partition",
        [[0.5, 1.0], [0.0, 1.0, 1.0], [0.0, 2.0], [0.0]],
    )
    def test_bad_partition(self, cylinder, partition):
        with pytest.raises(ValueError):
            cocycle_along(cylinder, np.array([1.0, 0.0, 0.0]), partition)


class TestCocycleBound:
    """Tests for the sampled cocycle bound."""

    def test_rotation_bound_is_inflation(self, rotation):
        """The rotation cocycle is the identity, so C = inflation."""
        bound = estimate_cocycle_bound(rotation, n_probes=40, seed=3, inflation=1.25, times_per_point=10)
        assert bound.raw_max == pytest.approx(1.0, abs=1e-8)
        assert bound.value == pytest.approx(1.25, abs=1e-8)
        assert bound.n_probes == 40

    def test_bound_is_reproducible(self, cylinder_sink):
        integrator = FlowIntegrator(tol=1e-8)
        first = estimate_cocycle_bound(cylinder_sink, n_probes=20, seed=5, integrator=integrator)
        second = estimate_cocycle_bound(cylinder_sink, n_probes=20, seed=5, integrator=integrator)
        assert first.value == second.value
        assert first.value >= 1.0
