"""Workload tails for MAP/PH/1 queues and a corrected phase-type
approximation for MAP/G/1 queues with heavy-tailed service mixtures."""
from .analysis import AnalysisResult, ResultRow, run_analysis, run_checks
from .base_solver import BaseSolution, WorkloadDist, WorkloadTransform, solve_base
from .config import AnalysisConfig, load_config, parse_config
from .corrected import (AffineInH, CorrectedTail, CorrectionDecomposition, correction_transform,
                        corrected_tail, mg1_corollary_tail, perturb_roots, perturb_u,
                        theorem3_decompose)
from .distributions import HeavyComponent, MatrixExpDist, MixtureService, RationalLST
from .estimator import CorrectedPHWorkload
from .exceptions import WorkloadError
from .inversion import InversionSettings, euler, invert, talbot
from .map_model import MapModel, char_matrix, load_and_margin, stationary_dist
from .oracle import ExactMixtureSolution, exact_mixture_tail, solve_mixture
from .rational_core import PartialFractions, Poly, RationalFn, partial_fractions, poly_roots

__all__ = [
    "AffineInH", "AnalysisConfig", "AnalysisResult", "BaseSolution", "CorrectedPHWorkload",
    "CorrectedTail", "CorrectionDecomposition", "ExactMixtureSolution", "HeavyComponent",
    "InversionSettings", "MapModel", "MatrixExpDist", "MixtureService", "PartialFractions", "Poly",
    "RationalFn", "RationalLST", "ResultRow", "WorkloadDist", "WorkloadError", "WorkloadTransform",
    "char_matrix", "corrected_tail", "correction_transform", "euler", "exact_mixture_tail",
    "invert", "load_and_margin", "load_config", "mg1_corollary_tail", "parse_config",
    "partial_fractions", "perturb_roots", "perturb_u", "poly_roots", "run_analysis", "run_checks",
    "solve_base", "solve_mixture", "stationary_dist", "talbot", "theorem3_decompose",
]
