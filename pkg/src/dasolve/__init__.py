"""Simulation of a discrete-adiabatic linear-systems solver with eigenstate filtering."""

from .adiabatic import evolve, ideal_evolution_and_error, proof_operator_suite, spectral_split
from .bounds import asymptotic_constants, lemma_bound_suite, theorem1_bound, theorem2_bound
from .filtering import (
    FilterPlan,
    apply_filter_lcu,
    apply_filter_spectral,
    chebyshev_order,
    tilde_w,
    window_weights,
)
from .harness import RunConfig, SolveReport, solve, sweep, validate
from .problem import QlspInstance, hamiltonian, random_instance
from .schedule import Schedule, diff_coeffs, gap_profile
from .walk import WalkSequence, block_encode_H, reference_walk

__version__ = "0.1.0"

__all__ = [
    "FilterPlan", "QlspInstance", "RunConfig", "Schedule", "SolveReport", "WalkSequence",
    "apply_filter_lcu", "apply_filter_spectral", "asymptotic_constants", "block_encode_H",
    "chebyshev_order", "diff_coeffs", "evolve", "gap_profile", "hamiltonian",
    "ideal_evolution_and_error", "lemma_bound_suite", "proof_operator_suite", "random_instance",
    "reference_walk", "solve", "spectral_split", "sweep", "theorem1_bound", "theorem2_bound",
    "tilde_w", "validate", "window_weights",
]
