"""Simulation and analysis of memristor neural networks in the flux-charge domain."""
from .atlas import EquilibriumAtlas, build_atlas, classify
from .errors import MnnLabError, NumericalError, ValidationError
from .fcd import attracting_radius, check_boundedness, check_cooperative, fcd_vector_field
from .memristor import HpCharacteristic, PwlCharacteristic, charge, memductance, pwl_from_slopes
from .ode import ConvergenceCriterion, IntegratorOptions, integrate
from .topology import Topology, grid_topology, is_irreducible
from .vcd import ManifoldIndex, NetworkSpec, gamma_lift, invariants, vcd_vector_field

__all__ = [
    "ConvergenceCriterion", "EquilibriumAtlas", "HpCharacteristic", "IntegratorOptions",
    "ManifoldIndex", "MnnLabError", "NetworkSpec", "NumericalError", "PwlCharacteristic",
    "Topology", "ValidationError", "attracting_radius", "build_atlas", "charge",
    "check_boundedness", "check_cooperative", "classify", "fcd_vector_field", "gamma_lift",
    "grid_topology", "integrate", "invariants", "is_irreducible", "memductance",
    "pwl_from_slopes", "vcd_vector_field",
]
