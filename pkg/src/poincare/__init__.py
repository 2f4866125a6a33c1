"""Kernel estimation of Poincaré constants and learning of linear reaction coordinates."""

from .errors import InputError, NumericalError
from .kernel import GaussianKernelConfig, GramBlocks, assemble_gram_blocks
from .estimator import (
    PoincareEstimate,
    as_samples,
    estimate_poincare_exact,
    lambda_schedule,
    largest_eigenvalue_sym,
)
from .random_features import (
    FeatureMatrices,
    RandomFeatureMap,
    build_feature_matrices,
    estimate_poincare_rf,
    featurize,
    featurize_grad,
    generalized_eig_max,
    sample_features,
)
from .stiefel import (
    ReactionCoordinateModel,
    WhitenTransform,
    learn_reaction_coordinate,
    sweep_angle_1d,
    whiten,
)
from .diffusion_maps import DiffusionMapConfig, bandwidth_grid_search, estimate_poincare_dm
from .hermite import HermiteModel, build_model, regularized_poincare, truncated_nu

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "NumericalError",
    "GaussianKernelConfig",
    "GramBlocks",
    "assemble_gram_blocks",
    "PoincareEstimate",
    "as_samples",
    "estimate_poincare_exact",
    "lambda_schedule",
    "largest_eigenvalue_sym",
    "FeatureMatrices",
    "RandomFeatureMap",
    "build_feature_matrices",
    "estimate_poincare_rf",
    "featurize",
    "featurize_grad",
    "generalized_eig_max",
    "sample_features",
    "ReactionCoordinateModel",
    "WhitenTransform",
    "learn_reaction_coordinate",
    "sweep_angle_1d",
    "whiten",
    "DiffusionMapConfig",
    "bandwidth_grid_search",
    "estimate_poincare_dm",
    "HermiteModel",
    "build_model",
    "regularized_poincare",
    "truncated_nu",
]
