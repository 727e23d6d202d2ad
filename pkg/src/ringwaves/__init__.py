"""Periodic traveling and standing waves on rings of coupled oscillators."""

from .galerkin import LoopState, loop_norm, residual, solve_slave
from .lattice import LatticeModel, build_model, circulant_basis
from .potentials import (
    PotentialSpec,
    bistable,
    evaluate,
    find_equilibrium,
    fpu,
    harmonic,
    hertz,
    pendulum,
    polynomial,
    toda,
    zero,
)
from .spectrum import dispersion, non_resonance_check, resonance_parameters
from .symmetry import build_isotropy, fixed_space, symmetry_residual

__version__ = "0.1.0"

__all__ = [
    "LoopState",
    "LatticeModel",
    "PotentialSpec",
    "__version__",
    "bistable",
    "build_isotropy",
    "build_model",
    "circulant_basis",
    "dispersion",
    "evaluate",
    "find_equilibrium",
    "fixed_space",
    "fpu",
    "harmonic",
    "hertz",
    "loop_norm",
    "non_resonance_check",
    "pendulum",
    "polynomial",
    "residual",
    "resonance_parameters",
    "solve_slave",
    "symmetry_residual",
    "toda",
    "zero",
]
