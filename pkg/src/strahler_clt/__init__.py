"""Horton-Strahler branch counts on uniform random full binary trees."""

from .errors import DomainError, StructureError
from .exact import (ExactDist, count_S, count_ratio, dist_ratio, dist_S, expect, kernel,
                    transition_prob)
from .hypergeom import HypParams, check_derivative_identity, hyp2f1_terminating, mgf_s2
from .moments import (Target, asymptotic_check, central_moment_s2, check_prop2_recurrence,
                      mixed_moment_s2, negative_moment_s2, raw_moment_s2)
from .montecarlo import CltExperiment, McSummary, horton_check, ks_distance, run_experiment
from .trees import StrahlerProfile, Tree, bifurcation_ratio, enumerate_trees, sample_uniform, strahler

__all__ = [
    "CltExperiment", "DomainError", "ExactDist", "HypParams", "McSummary", "StrahlerProfile",
    "StructureError", "Target", "Tree", "asymptotic_check", "bifurcation_ratio",
    "central_moment_s2", "check_derivative_identity", "check_prop2_recurrence", "count_S",
    "count_ratio", "dist_S", "dist_ratio", "enumerate_trees", "expect", "horton_check",
    "hyp2f1_terminating", "kernel", "ks_distance", "mgf_s2", "mixed_moment_s2",
    "negative_moment_s2", "raw_moment_s2", "run_experiment", "sample_uniform", "strahler",
    "transition_prob",
]
