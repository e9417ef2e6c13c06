"""Generalized minimum-distance regression under strongly mixing errors."""

__version__ = "0.1.0"

from .error_model import InnovationDist, LinearProcessSpec, analytic_autocovariance, generate_errors
from .estimators import EstimatorResult, FitOptions, fit, fit_gls, fit_gmd, fit_ols
from .objective import IntegratingMeasure, RegressionData
from .transforms import TransformKind, build_weights

__all__ = [
    "InnovationDist",
    "LinearProcessSpec",
    "analytic_autocovariance",
    "generate_errors",
    "EstimatorResult",
    "FitOptions",
    "fit",
    "fit_gls",
    "fit_gmd",
    "fit_ols",
    "IntegratingMeasure",
    "RegressionData",
    "TransformKind",
    "build_weights",
]
