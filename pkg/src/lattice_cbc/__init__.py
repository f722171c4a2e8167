"""Fast component-by-component construction of rank-1 lattice rules for
L2 approximation in weighted Korobov spaces."""

from .approx import IndexSet, build_index_set, lattice_coefficients, evaluate_approximant, r_of
from .bounds import BoundInputs, error_bound, initial_error, sd_bound, tau, weighted_sums
from .cbc import GeneratingVector, construct, eval_Sd
from .kernel import OmegaTable, build_omega_table, bernoulli_poly, zeta_even, zeta_real
from .weights import WeightFamily, WeightKind, gamma_subset, study_weights, parse_weight_spec

__all__ = [
    "BoundInputs", "GeneratingVector", "IndexSet", "OmegaTable", "WeightFamily", "WeightKind",
    "bernoulli_poly", "build_index_set", "build_omega_table", "construct", "error_bound",
    "eval_Sd", "evaluate_approximant", "gamma_subset", "initial_error", "lattice_coefficients",
    "study_weights", "parse_weight_spec", "r_of", "sd_bound", "tau", "weighted_sums",
    "zeta_even", "zeta_real",
]
