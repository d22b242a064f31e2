"""GRW collapse dynamics, fuzzy-link semantics and the marble counting anomaly."""

__version__ = "0.1.0"

from .amplitude import Amplitude
from .dynamics import GrwParams, HitRecord, apply_marble_hit, apply_sparse_hit, sample_next_hit
from .errors import CapacityError, DegenerateStateError, GrwFuzzyError, ShapeError, ValidationError
from .kernels import BACKEND
from .lattice import LatticeWavefunction, apply_lattice_hit, free_evolve, sample_hit_center
from .scenarios import Order, ScenarioConfig, TrialResult, monte_carlo
from .semantics import FuzzyConfig, Truth, enumeration_check, posr_verdict
from .state import ProductState, SparseState, Subsystem, TwoRegionMarble, expand

__all__ = [
    "Amplitude",
    "BACKEND",
    "CapacityError",
    "DegenerateStateError",
    "FuzzyConfig",
    "GrwFuzzyError",
    "GrwParams",
    "HitRecord",
    "LatticeWavefunction",
    "Order",
    "ProductState",
    "ScenarioConfig",
    "ShapeError",
    "SparseState",
    "Subsystem",
    "TrialResult",
    "Truth",
    "TwoRegionMarble",
    "ValidationError",
    "apply_lattice_hit",
    "apply_marble_hit",
    "apply_sparse_hit",
    "enumeration_check",
    "expand",
    "free_evolve",
    "monte_carlo",
    "posr_verdict",
    "sample_hit_center",
    "sample_next_hit",
]
