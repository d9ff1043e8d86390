"""
dissiflow - Dissipative dynamics of nonsingular 3D flows
=========================================================

Periodic-orbit census, linear Poincaré cocycles, dominated-splitting
certificates, dissipative-region and basin estimates, and cocycle-level
perturbation constructions for vector fields on flat tori, suspensions and
trapping boxes.

Version: 1.0.0
"""

__version__ = "1.0.0"

from .config import AnalysisConfig
from .core.flowcore import FlowIntegrator
from .core.registry import available_flows, build_flow
from .exceptions import DissiflowError
from .pipeline import DissipativeFlowAnalyzer
from .validators import FieldValidator

__all__ = [
    "AnalysisConfig",
    "DissipativeFlowAnalyzer",
    "DissiflowError",
    "FieldValidator",
    "FlowIntegrator",
    "available_flows",
    "build_flow",
]
