"""Nonparametric discriminant analysis with tree-based variable selection.

Group-conditional distributions are modelled with recursive dyadic
quantile trees centred on Gaussians; a collapsed variational coordinate
ascent turns per-variable two-sample evidence into selection
probabilities and classifies new points from omega-weighted path
probability ratios.
"""

__version__ = "0.1.0"

from .bnp_test import log_bayes_factor, log_bayes_factors
from .cvb import (
    ClassProbabilities,
    FittedModel,
    Hyperparameters,
    SelectionState,
    classify,
    fit_model,
    path_probability,
    update_omega,
    update_psi,
)
from .dataio import Dataset, load_csv, preprocess, split_folds
from .errors import ContractViolation, DomainError, InputError, PtdaError
from .polya_tree import (
    CellCounts,
    CentringGaussian,
    PolyaTreeSpec,
    TreeForest,
    accumulate_counts,
    alpha,
    cell_boundaries,
    default_depth,
    path_of,
    predictive_density,
)
from .simgen import SimulationSpec, generate, mixture_sample
from .smoothing import SmoothingReport, assign_bins, expected_pvalue, select_c

__all__ = [
    "__version__",
    "CellCounts",
    "CentringGaussian",
    "ClassProbabilities",
    "ContractViolation",
    "Dataset",
    "DomainError",
    "FittedModel",
    "Hyperparameters",
    "InputError",
    "PolyaTreeSpec",
    "PtdaError",
    "SelectionState",
    "SimulationSpec",
    "SmoothingReport",
    "TreeForest",
    "accumulate_counts",
    "alpha",
    "assign_bins",
    "cell_boundaries",
    "classify",
    "default_depth",
    "expected_pvalue",
    "fit_model",
    "generate",
    "load_csv",
    "log_bayes_factor",
    "log_bayes_factors",
    "mixture_sample",
    "path_of",
    "path_probability",
    "predictive_density",
    "preprocess",
    "select_c",
    "split_folds",
    "update_omega",
    "update_psi",
]
