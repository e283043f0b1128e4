"""Model specs, the fit/predict dispatch, and model.json round-tripping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .ensemble import ForestModel, GbdtModel, fit_gbdt, fit_rf
from .linear import KrrModel, LassoModel, Standardizer, fit_krr, fit_lasso
from .ltr import LambdaMartModel, fit_lambdamart
from .tree import RegressionTree

MODEL_KINDS = ("lasso", "krr", "rf", "gbdt", "lambdamart", "baseline")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    ids: list[str]
    groups: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or len(self.X) != len(self.y) or len(self.y) != len(self.ids):
            raise ValueError("X, y and ids must be aligned; X must be 2-D")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("non-finite entries in data set")
        if self.groups is not None:
            self.groups = np.asarray(self.groups)
            if len(self.groups) != len(self.y):
                raise ValueError("groups must align with y")

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    alpha: float | None = None  # lasso defaults to 1e-2, krr to 0.1
    rbf_gamma: float | None = None
    n_trees: int = 10
    min_samples_split: int = 2
    n_stages: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 3
    min_split_loss: float = 1.0
    ndcg_truncation: int = 10
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        for name in ("n_trees", "n_stages", "ndcg_truncation"):
            if getattr(self, name) < (1 if name != "n_stages" else 0):
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return 1e-2 if self.kind == "lasso" else 0.1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "rbf_gamma": self.rbf_gamma,
            "n_trees": self.n_trees,
            "min_samples_split": self.min_samples_split,
            "n_stages": self.n_stages,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_split_loss": self.min_split_loss,
            "ndcg_truncation": self.ndcg_truncation,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ModelSpec:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model spec fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class BaselineModel:
    seed: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.random(len(np.asarray(X)))


@dataclass
class FittedModel:
    spec: ModelSpec
    model: Union[LassoModel, KrrModel, ForestModel, GbdtModel, LambdaMartModel, BaselineModel]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict(np.asarray(X, dtype=float))


def fit_model(data: Dataset, spec: ModelSpec) -> FittedModel:
    if spec.kind == "lasso":
        model = fit_lasso(data.X, data.y, alpha=spec.resolved_alpha())
    elif spec.kind == "krr":
        model = fit_krr(data.X, data.y, alpha=spec.resolved_alpha(), gamma=spec.rbf_gamma)
    elif spec.kind == "rf":
        model = fit_rf(
            data.X,
            data.y,
            n_trees=spec.n_trees,
            min_samples_split=spec.min_samples_split,
            max_depth=None,
            seed=spec.seed,
            bootstrap=spec.bootstrap,
        )
    elif spec.kind == "gbdt":
        model = fit_gbdt(
            data.X,
            data.y,
            n_stages=spec.n_stages,
            learning_rate=spec.learning_rate,
            max_depth=spec.max_depth,
            min_samples_split=spec.min_samples_split,
        )
    elif spec.kind == "lambdamart":
        model = fit_lambdamart(
            data.X,
            data.y,
            groups=data.groups,
            n_stages=spec.n_stages,
            learning_rate=spec.learning_rate,
            min_split_loss=spec.min_split_loss,
            truncation=spec.ndcg_truncation,
            max_depth=spec.max_depth,
            min_samples_split=spec.min_samples_split,
            seed=spec.seed,
        )
    else:
        model = BaselineModel(seed=spec.seed)
    return FittedModel(spec=spec, model=model)


def feature_importance(fitted: FittedModel) -> np.ndarray:
    if not isinstance(fitted.model, ForestModel):
        raise ValueError("feature importance requires a random forest model")
    return fitted.model.feature_importance()


# --- model.json --------------------------------------------------------------


def _params_dict(model) -> dict:
    if isinstance(model, LassoModel):
        return {
            "weights": model.weights.tolist(),
            "intercept": model.intercept,
            "scaler": model.scaler.to_dict(),
            "alpha": model.alpha,
            "n_sweeps": model.n_sweeps,
        }
    if isinstance(model, KrrModel):
        return {
            "dual_coef": model.dual_coef.tolist(),
            "X_train": model.X_train.tolist(),
            "scaler": model.scaler.to_dict(),
            "alpha": model.alpha,
            "gamma": model.gamma,
            "solve_residual": model.solve_residual,
        }
    if isinstance(model, ForestModel):
        return {
            "trees": [t.to_dict() for t in model.trees],
            "seed": model.seed,
            "bootstrap": model.bootstrap,
        }
    if isinstance(model, GbdtModel):
        return {
            "f0": model.f0,
            "learning_rate": model.learning_rate,
            "trees": [t.to_dict() for t in model.trees],
            "train_mse_path": model.train_mse_path,
        }
    if isinstance(model, LambdaMartModel):
        return {
            "learning_rate": model.learning_rate,
            "trees": [t.to_dict() for t in model.trees],
            "seed": model.seed,
            "truncation": model.truncation,
            "train_ndcg_path": model.train_ndcg_path,
        }
    if isinstance(model, BaselineModel):
        return {"seed": model.seed}
    raise TypeError(f"unsupported model type {type(model)!r}")


def model_to_json(fitted: FittedModel) -> str:
    return json.dumps(
        {"spec": fitted.spec.to_dict(), "params": _params_dict(fitted.model)},
        indent=2,
        sort_keys=True,
        ensure_ascii=True,
    )


def model_from_json(text: str) -> FittedModel:
    doc = json.loads(text)
    spec = ModelSpec.from_dict(doc["spec"])
    params = doc["params"]
    if spec.kind == "lasso":
        model = LassoModel(
            weights=np.asarray(params["weights"]),
            intercept=params["intercept"],
            scaler=Standardizer.from_dict(params["scaler"]),
            alpha=params["alpha"],
            n_sweeps=params["n_sweeps"],
        )
    elif spec.kind == "krr":
        model = KrrModel(
            dual_coef=np.asarray(params["dual_coef"]),
            X_train=np.asarray(params["X_train"]),
            scaler=Standardizer.from_dict(params["scaler"]),
            alpha=params["alpha"],
            gamma=params["gamma"],
            solve_residual=params["solve_residual"],
        )
    elif spec.kind == "rf":
        model = ForestModel(
            trees=[RegressionTree.from_dict(t) for t in params["trees"]],
            seed=params["seed"],
            bootstrap=params["bootstrap"],
        )
    elif spec.kind == "gbdt":
        model = GbdtModel(
            f0=params["f0"],
            learning_rate=params["learning_rate"],
            trees=[RegressionTree.from_dict(t) for t in params["trees"]],
            train_mse_path=params["train_mse_path"],
        )
    elif spec.kind == "lambdamart":
        model = LambdaMartModel(
            learning_rate=params["learning_rate"],
            trees=[RegressionTree.from_dict(t) for t in params["trees"]],
            seed=params["seed"],
            truncation=params["truncation"],
            train_ndcg_path=params["train_ndcg_path"],
        )
    else:
        model = BaselineModel(seed=params["seed"])
    return FittedModel(spec=spec, model=model)
