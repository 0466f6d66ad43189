"""Optimal control of collective spin squeezing with a genetic algorithm.

Open-system spin dynamics in the Dicke basis, squeezing metrics, an adaptive
GA over piecewise-constant pulse sequences and phase-space diagnostics.
"""
from .dynamics import NoiseParams, PulseSchedule, SequenceSimulator, evolve_sequence
from .ga import GAConfig, GAResult, run_ga
from .spin_core import DensityMatrix, build_spin_operators, coherent_spin_state
from .squeezing import xi_perp_squared, xi_z_squared

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "GAConfig",
    "GAResult",
    "NoiseParams",
    "PulseSchedule",
    "SequenceSimulator",
    "build_spin_operators",
    "coherent_spin_state",
    "evolve_sequence",
    "run_ga",
    "xi_perp_squared",
    "xi_z_squared",
]
