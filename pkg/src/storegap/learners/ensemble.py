"""Bootstrap-aggregated forests and least-squares gradient boosting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import RegressionTree


@dataclass
class ForestModel:
    trees: list[RegressionTree]
    seed: int
    bootstrap: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        preds = np.stack([t.predict(X) for t in self.trees])
        return preds.mean(axis=0)

    def feature_importance(self) -> np.ndarray:
        """Mean per-tree total variance decrease per feature, normalized to
        sum to 1; uniform when no split ever occurred."""
        raw = np.mean([t.importance_ for t in self.trees], axis=0)
        total = raw.sum()
        if total <= 0:
            return np.full(len(raw), 1.0 / len(raw))
        return raw / total


def fit_rf(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 10,
    min_samples_split: int = 2,
    max_depth: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> ForestModel:
    """Forest of trees over bootstrap resamples; prediction is the exact
    arithmetic mean of the member trees."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(y)
    trees = []
    for _ in range(n_trees):
        if bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        tree = RegressionTree(max_depth=max_depth, min_samples_split=min_samples_split)
        tree.fit(X[idx], y[idx])
        trees.append(tree)
    return ForestModel(trees=trees, seed=seed, bootstrap=bootstrap)


@dataclass
class GbdtModel:
    f0: float
    learning_rate: float
    trees: list[RegressionTree]
    train_mse_path: list[float] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.f0)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    n_stages: int = 100,
    learning_rate: float = 0.1,
    max_depth: int | None = 3,
    min_samples_split: int = 2,
) -> GbdtModel:
    """Least-squares boosting: each stage fits a depth-limited tree to the
    current residuals. Training MSE is recorded per stage and must never
    increase while the learning rate stays at or below 1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if n_stages < 0:
        raise ValueError("n_stages must be >= 0")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    f0 = float(y.mean())
    pred = np.full(len(y), f0)
    mse_path = [float(np.mean((y - pred) ** 2))]
    trees: list[RegressionTree] = []
    for _ in range(n_stages):
        residual = y - pred
        tree = RegressionTree(max_depth=max_depth, min_samples_split=min_samples_split)
        tree.fit(X, residual)
        pred = pred + learning_rate * tree.predict(X)
        mse = float(np.mean((y - pred) ** 2))
        if learning_rate <= 1.0 and mse > mse_path[-1] * (1.0 + 1e-12) + 1e-15:
            raise AssertionError(
                f"training MSE increased at stage {len(trees) + 1}: {mse_path[-1]} -> {mse}"
            )
        mse_path.append(mse)
        trees.append(tree)
    return GbdtModel(f0=f0, learning_rate=learning_rate, trees=trees, train_mse_path=mse_path)
