"""Lasso via cyclic coordinate descent and RBF kernel ridge regression.

Both consume z-scored features; the scaler is fitted on the training split
and stored with the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

LASSO_TOL = 1e-6
LASSO_MAX_SWEEPS = 10_000


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> Standardizer:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> Standardizer:
        return cls(mean=np.asarray(data["mean"]), std=np.asarray(data["std"]))


def soft_threshold(rho: float, alpha: float) -> float:
    if rho > alpha:
        return rho - alpha
    if rho < -alpha:
        return rho + alpha
    return 0.0


@dataclass
class LassoModel:
    weights: np.ndarray
    intercept: float
    scaler: Standardizer
    alpha: float
    n_sweeps: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.weights + self.intercept

    def optimality_gap(self, X: np.ndarray, y: np.ndarray) -> float:
        """Worst violation of the L1 subgradient conditions on a data set."""
        Z = self.scaler.transform(X)
        y_c = np.asarray(y, dtype=float) - self.intercept
        g = Z.T @ (Z @ self.weights - y_c) / len(y_c)
        worst = 0.0
        for j, w_j in enumerate(self.weights):
            if w_j == 0.0:
                worst = max(worst, abs(g[j]) - self.alpha)
            else:
                worst = max(worst, abs(g[j] + self.alpha * np.sign(w_j)))
        return worst


def fit_lasso(
    X: np.ndarray,
    y: np.ndarray,
    alpha: float = 1e-2,
    tol: float = LASSO_TOL,
    max_sweeps: int = LASSO_MAX_SWEEPS,
) -> LassoModel:
    """Minimize (1/2n)||Zw - y_c||^2 + alpha*||w||_1 by cyclic coordinate
    descent with soft thresholding, on z-scored features and centered targets."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0 or X.shape[1] == 0:
        raise ValueError("X must be n x d with n, d >= 1 and aligned with y")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in training data")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    n, d = X.shape
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    y_mean = float(y.mean())
    y_c = y - y_mean
    col_norm2 = (Z * Z).sum(axis=0) / n  # 1.0 for non-constant columns
    w = np.zeros(d)
    residual = y_c.copy()  # y_c - Z @ w
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(d):
            if col_norm2[j] == 0.0:
                continue
            old = w[j]
            rho = (Z[:, j] @ residual) / n + col_norm2[j] * old
            new = soft_threshold(rho, alpha) / col_norm2[j]
            if new != old:
                residual += Z[:, j] * (old - new)
                w[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < tol:
            break
    return LassoModel(weights=w, intercept=y_mean, scaler=scaler, alpha=alpha, n_sweeps=sweeps)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """K[i, j] = exp(-gamma * ||A_i - B_j||^2)."""
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class KrrModel:
    dual_coef: np.ndarray
    X_train: np.ndarray  # standardized training inputs
    scaler: Standardizer
    alpha: float
    gamma: float
    solve_residual: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = self.scaler.transform(X)
        return rbf_kernel(Z, self.X_train, self.gamma) @ self.dual_coef


def fit_krr(X: np.ndarray, y: np.ndarray, alpha: float = 0.1, gamma: float | None = None) -> KrrModel:
    """Solve (K + alpha*I) a = y with an SPD factorization, K the RBF kernel
    over z-scored inputs. gamma defaults to 1/d."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be 2-D and aligned with non-empty y")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in training data")
    scaler = Standardizer.fit(X)
    Z = scaler.transform(X)
    if gamma is None:
        gamma = 1.0 / Z.shape[1]
    K = rbf_kernel(Z, Z, gamma)
    A = K + alpha * np.eye(len(Z))
    try:
        factor = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "kernel system is not positive definite; duplicate rows with "
            "alpha = 0 make the solve singular"
        ) from exc
    a = cho_solve(factor, y)
    residual = float(np.max(np.abs(A @ a - y)))
    return KrrModel(
        dual_coef=a,
        X_train=Z,
        scaler=scaler,
        alpha=alpha,
        gamma=gamma,
        solve_residual=residual,
    )
