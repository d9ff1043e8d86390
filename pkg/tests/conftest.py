"""Shared flows and integrators for the dissiflow tests."""

import numpy as np
import pytest

from dissiflow.core.field import SectionSpec
from dissiflow.core.flowcore import FlowIntegrator
from dissiflow.core.registry import build_flow

TWO_PI = 2.0 * np.pi


@pytest.fixture
def rotation():
    return build_flow("rotation")


@pytest.fixture
def cylinder():
    """Limit cycle r = 1 with an expanding z direction (dissipative saddle)."""
    return build_flow("cylinder", {"c": 1.0})


@pytest.fixture
def cylinder_sink():
    """Limit cycle r = 1 with a contracting z direction (sink)."""
    return build_flow("cylinder", {"c": -1.0})


@pytest.fixture
def catmap():
    return build_flow("catmap-suspension")


@pytest.fixture
def integrator():
    return FlowIntegrator(tol=1e-10)


@pytest.fixture
def cylinder_section():
    return SectionSpec(anchor=(1.0, 0.0, 0.0), normal=(0.0, 1.0, 0.0))
