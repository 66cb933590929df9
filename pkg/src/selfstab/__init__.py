"""Invariant measures of self-stabilizing diffusions in a double-well landscape.

The library computes, classifies and cross-validates the stationary
measures of one-dimensional McKean-Vlasov diffusions with a polynomial
double-well environment V and an even convex polynomial attraction F:
Gibbs-integral quadrature, small-noise expansion formulas, scalar and
moment-space self-consistency solvers, and an interacting-particle
simulator for independent validation.
"""

from .errors import (Blowup, BoundaryMinimum, DegenerateMinimum, InvalidConfig,
                     InvalidModel, NonconfiningPotential, NotConverged,
                     OddOrderContact, SelfStabError, ToleranceNotReached,
                     WrongPotential, ZeroMinimizer)
from .general_case import (CramerReport, FixedPointReport, cramer_tau,
                           effective_potential, find_outlying_moments,
                           fixed_point_density, mirror_moments, mirror_report,
                           moment_map, predicted_outlying_moments,
                           symmetric_invariant, symmetric_scalar_map)
from .laplace import (ExpansionResult, MinimizerReport, flat_minimum_integral,
                      global_minimizer, laplace_integral_o2,
                      laplace_moment_ratio, perturbed_minimizer,
                      perturbed_ratio, tail_equivalent)
from .linear_case import (ClosedFormPoint, FirstOrderMean, InvariantMeanSet,
                          LinearCaseConfig, chi, chi0, chi_prime,
                          example_closed_forms, find_invariant_means,
                          first_order_mean, invariant_density, psi,
                          tilted_potential)
from .model import (ConditionReport, EvenPolynomial, InteractionReport,
                    ModelSpec, PotentialReport, build_model,
                    model_from_config, outlying_condition, validate_interaction,
                    validate_potential)
from .particle import (ComparisonReport, SimConfig, SimOutput,
                       empirical_vs_density, simulate)
from .quadrature import (GibbsDensity, gibbs_expectation, gibbs_log_norm,
                         gibbs_moment, gibbs_moments, gibbs_quadrature)

__version__ = "0.1.0"

__all__ = [
    "Blowup", "BoundaryMinimum", "ClosedFormPoint", "ComparisonReport",
    "ConditionReport", "CramerReport", "DegenerateMinimum", "EvenPolynomial",
    "ExpansionResult", "FirstOrderMean", "FixedPointReport", "GibbsDensity",
    "InteractionReport", "InvalidConfig", "InvalidModel", "InvariantMeanSet",
    "LinearCaseConfig", "MinimizerReport", "ModelSpec", "NonconfiningPotential",
    "NotConverged", "OddOrderContact", "PotentialReport", "SelfStabError",
    "SimConfig", "SimOutput", "ToleranceNotReached", "WrongPotential",
    "ZeroMinimizer",
    "build_model", "chi", "chi0", "chi_prime", "cramer_tau",
    "effective_potential", "empirical_vs_density", "example_closed_forms",
    "find_invariant_means", "find_outlying_moments", "first_order_mean",
    "fixed_point_density", "flat_minimum_integral", "gibbs_expectation",
    "gibbs_log_norm", "gibbs_moment", "gibbs_moments", "gibbs_quadrature",
    "global_minimizer", "invariant_density", "laplace_integral_o2",
    "laplace_moment_ratio", "mirror_moments", "mirror_report", "model_from_config",
    "moment_map", "outlying_condition", "perturbed_minimizer", "perturbed_ratio",
    "predicted_outlying_moments", "psi", "simulate", "symmetric_invariant",
    "symmetric_scalar_map", "tail_equivalent", "tilted_potential",
    "validate_interaction", "validate_potential",
]
