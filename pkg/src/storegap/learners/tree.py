"""Exact greedy regression tree with variance-reduction splits."""

from __future__ import annotations

import math

import numpy as np


def _sse_exact(v: np.ndarray) -> float:
    """Sum of squared deviations via correctly-rounded (order-independent)
    summation; identical point sets always produce identical values."""
    if len(v) == 0:
        return 0.0
    mean = math.fsum(v) / len(v)
    return math.fsum((x - mean) * (x - mean) for x in v)


class RegressionTree:
    """CART-style regressor: splits maximize the decrease in sum of squared
    errors, candidate thresholds are midpoints of consecutive distinct sorted
    feature values, leaves predict the mean target.

    Gain ties break deterministically on (lowest feature index, lowest
    threshold). `min_gain` gates further partitions on the raw SSE decrease.
    """

    def __init__(
        self,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        min_gain: float = 0.0,
    ):
        if min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_gain = min_gain
        self.root: dict | None = None
        self.importance_: np.ndarray | None = None
        self.n_features_: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray) -> RegressionTree:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ValueError("X must be 2-D and aligned with non-empty y")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite values in training data")
        self.n_features_ = X.shape[1]
        self.importance_ = np.zeros(self.n_features_)
        self.root = self._grow(X, y, depth=0)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> dict:
        n = len(y)
        leaf = {"value": float(np.mean(y))}
        if n < self.min_samples_split:
            return leaf
        if self.max_depth is not None and depth >= self.max_depth:
            return leaf
        split = self._best_split(X, y)
        if split is None:
            return leaf
        feature, threshold, gain = split
        mask = X[:, feature] <= threshold
        if not mask.any() or mask.all():
            return leaf
        self.importance_[feature] += gain
        return {
            "feature": int(feature),
            "threshold": float(threshold),
            "left": self._grow(X[mask], y[mask], depth + 1),
            "right": self._grow(X[~mask], y[~mask], depth + 1),
        }

    def _best_split(self, X: np.ndarray, y: np.ndarray) -> tuple[int, float, float] | None:
        n = len(y)
        sse_parent = float(np.sum((y - y.mean()) ** 2))
        # Pass 1: fast cumulative-sum scan for candidate gains.
        candidates: list[tuple[float, int, float]] = []
        max_gain = -np.inf
        for j in range(X.shape[1]):
            xj = X[:, j]
            order = np.argsort(xj, kind="stable")
            xs = xj[order]
            ys = y[order]
            boundaries = np.nonzero(np.diff(xs) > 0)[0]  # split after index b
            if boundaries.size == 0:
                continue
            csum = np.cumsum(ys)
            csum2 = np.cumsum(ys * ys)
            total = csum[-1]
            total2 = csum2[-1]
            for b in boundaries:
                n_l = b + 1
                n_r = n - n_l
                s_l = csum[b]
                q_l = csum2[b]
                sse_l = q_l - s_l * s_l / n_l
                s_r = total - s_l
                q_r = total2 - q_l
                sse_r = q_r - s_r * s_r / n_r
                gain = sse_parent - sse_l - sse_r
                threshold = (xs[b] + xs[b + 1]) / 2.0
                if threshold <= xs[b] or threshold > xs[b + 1]:
                    continue  # degenerate float midpoint
                candidates.append((gain, j, threshold))
                max_gain = max(max_gain, gain)
        if not candidates or max_gain <= 0:
            return None
        # Pass 2: re-evaluate near-best candidates with order-independent exact
        # sums so mathematically tied gains (identical partitions reached via
        # different features) compare bit-identically, making the
        # (feature, threshold) tie rule deterministic.
        tol = 1e-6 * max(1.0, abs(max_gain))
        sse_parent_exact = _sse_exact(y)
        best: tuple[float, int, float] | None = None
        for gain, j, threshold in candidates:
            if gain < max_gain - tol:
                continue
            mask = X[:, j] <= threshold
            exact = sse_parent_exact - _sse_exact(y[mask]) - _sse_exact(y[~mask])
            if (
                best is None
                or exact > best[0]
                or (exact == best[0] and (j, threshold) < (best[1], best[2]))
            ):
                best = (exact, j, threshold)
        gain, feature, threshold = best
        if gain <= 0 or gain < self.min_gain:
            return None
        return feature, threshold, gain

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.root is None:
            raise RuntimeError("tree is not fitted")
        X = np.asarray(X, dtype=float)
        return np.array([self._predict_row(row) for row in X])

    def _predict_row(self, row: np.ndarray) -> float:
        node = self.root
        while "value" not in node:
            node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
        return node["value"]

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_gain": self.min_gain,
            "n_features": self.n_features_,
            "root": self.root,
            "importance": None if self.importance_ is None else self.importance_.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> RegressionTree:
        tree = cls(
            max_depth=data["max_depth"],
            min_samples_split=data["min_samples_split"],
            min_gain=data["min_gain"],
        )
        tree.root = data["root"]
        tree.n_features_ = data["n_features"]
        tree.importance_ = None if data["importance"] is None else np.asarray(data["importance"])
        return tree
