"""K-norm gradient mechanism and competing differentially private estimators."""

from .domains import Box, Interval, L1Ball
from .errors import (
    BoundViolationError,
    EmptyDataError,
    NonDifferentiablePointError,
    OptimizationError,
    SamplingError,
    SingularSystemError,
    UnsupportedOperationError,
)
from .mechanisms import (
    MechanismConfig,
    ObjectivePerturbationConfig,
    PrivacyBudget,
    SanitizedEstimate,
    exponential,
    exponential_batch,
    kng,
    kng_batch,
    knorm_mean,
    objective_perturbation,
    private_quantile,
)
from .norms import KNormNoiseParams, NormKind, norm, sample_knorm_noise
from .objectives import Dataset, GeometricMedian, LinearSSE, MeanSSE, QuantileLoss
from .optimizer import ols, project_l1, projected_gradient, projected_subgradient
from .sampler import SamplerConfig

__all__ = [
    "Box", "Interval", "L1Ball",
    "BoundViolationError", "EmptyDataError", "NonDifferentiablePointError",
    "OptimizationError", "SamplingError", "SingularSystemError", "UnsupportedOperationError",
    "MechanismConfig", "ObjectivePerturbationConfig", "PrivacyBudget", "SanitizedEstimate",
    "exponential", "exponential_batch", "kng", "kng_batch", "knorm_mean",
    "objective_perturbation", "private_quantile",
    "KNormNoiseParams", "NormKind", "norm", "sample_knorm_noise",
    "Dataset", "GeometricMedian", "LinearSSE", "MeanSSE", "QuantileLoss",
    "ols", "project_l1", "projected_gradient", "projected_subgradient",
    "SamplerConfig",
]
