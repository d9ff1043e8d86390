"""
Phase spaces, vector fields and the flow integrator.
"""

from .domain import DomainKind, DomainSpec
from .field import SectionSpec, VectorFieldSpec
from .flowcore import FlowIntegrator, TangentState, TrajectorySegment
from .regions import Neighborhood, RegionShape
from .registry import available_flows, build_flow

__all__ = [
    "DomainKind",
    "DomainSpec",
    "FlowIntegrator",
    "Neighborhood",
    "RegionShape",
    "SectionSpec",
    "TangentState",
    "TrajectorySegment",
    "VectorFieldSpec",
    "available_flows",
    "build_flow",
]
