"""Quasienergy anholonomy of periodically kicked systems with a rank-1 kick."""
from .floquet import KickedSystem, QuasiEnergySpectrum, build_floquet, quasienergies, validate_assumptions
from .flow import FlowGrid, HolonomyResult, SpectralFlow, derivative_check, holonomy, minimal_gap, track_flow
from .transport import TransportPlan, run_transport

__all__ = [
    "KickedSystem",
    "QuasiEnergySpectrum",
    "build_floquet",
    "quasienergies",
    "validate_assumptions",
    "FlowGrid",
    "HolonomyResult",
    "SpectralFlow",
    "derivative_check",
    "holonomy",
    "minimal_gap",
    "track_flow",
    "TransportPlan",
    "run_transport",
]

__version__ = "0.1.0"
