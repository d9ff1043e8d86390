"""
Analyzers for dissiflow.
"""

from .dissipative import RegionApprox, dissipative_region, weak_basin_estimate
from .linpoincare import NormalCocycle, linear_poincare
from .periodic import OrbitCatalog, OrbitCensus, PeriodicOrbit, PeriodicOrbitFinder
from .splitting import SplittingCertificate, check_dominated
from .surgery import PerturbationBudget, SaddleData, choose_budget

__all__ = [
    "NormalCocycle",
    "OrbitCatalog",
    "OrbitCensus",
    "PeriodicOrbit",
    "PeriodicOrbitFinder",
    "PerturbationBudget",
    "RegionApprox",
    "SaddleData",
    "SplittingCertificate",
    "check_dominated",
    "choose_budget",
    "dissipative_region",
    "linear_poincare",
    "weak_basin_estimate",
]
