"""Phase-space analysis and shooting for self-similar blow-up profiles of a
porous-medium equation with spatially inhomogeneous sublinear reaction."""

from .params import Exponents, Parameters, Regime, derive_exponents
from .phase_systems import PhaseState, ProfilePoint, SystemId

__version__ = "0.1.0"

__all__ = ["Exponents", "Parameters", "PhaseState", "ProfilePoint", "Regime", "SystemId", "derive_exponents"]
