"""Supervised models for candidate ranking, all fitted from scratch."""

from .base import (
    BaselineModel,
    Dataset,
    FittedModel,
    ModelSpec,
    feature_importance,
    fit_model,
    model_from_json,
    model_to_json,
)
from .ensemble import ForestModel, GbdtModel, fit_gbdt, fit_rf
from .linear import KrrModel, LassoModel, Standardizer, fit_krr, fit_lasso, soft_threshold
from .ltr import LambdaMartModel, fit_lambdamart, lambda_gradients, quintile_grades
from .tree import RegressionTree

__all__ = [
    "BaselineModel",
    "Dataset",
    "FittedModel",
    "ForestModel",
    "GbdtModel",
    "KrrModel",
    "LassoModel",
    "LambdaMartModel",
    "ModelSpec",
    "RegressionTree",
    "Standardizer",
    "feature_importance",
    "fit_gbdt",
    "fit_krr",
    "fit_lasso",
    "fit_lambdamart",
    "fit_model",
    "fit_rf",
    "lambda_gradients",
    "model_from_json",
    "model_to_json",
    "quintile_grades",
    "soft_threshold",
]
