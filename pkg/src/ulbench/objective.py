"""L2-regularized logistic loss: value, derivatives, noisy variant, prediction.

Labels enter as {-1, +1}.  For a point set S the objective is

    L(w, S) = (1/|S|) sum_i log(1 + exp(-y_i w.x_i)) + (lam/2) ||w||^2

with gradient (1/|S|) sum_i -y_i x_i s(-y_i w.x_i) + lam w and Hessian
(1/|S|) sum_i p_i (1-p_i) x_i x_i^T + lam I where p_i = s(w.x_i); the
Hessian does not depend on the labels.  The noisy variant adds a linear
perturbation sigma * b.w / |S| used by objective-perturbation training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError


@dataclass
class ObjectiveConfig:
    """Regularization strength plus optional linear noise term."""

    lam: float
    sigma: float = 0.0
    noise_draw: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")


def _check_subset(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or len(X) == 0:
        raise ConfigError("objective evaluated on an empty or malformed subset")
    if y.shape != (len(X),):
        raise ConfigError(f"labels shape {y.shape} does not match {len(X)} rows")


def softplus(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(z)) without overflow for large |z|."""
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> float:
    _check_subset(X, y)
    margins = y * (X @ w)
    return float(np.mean(softplus(-margins)) + 0.5 * cfg.lam * (w @ w))


def gradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> np.ndarray:
    _check_subset(X, y)
    margins = y * (X @ w)
    coef = -y * expit(-margins)
    return X.T @ coef / len(X) + cfg.lam * w


def hessian(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> np.ndarray:
    _check_subset(X, y)
    s = X @ w
    r = expit(s) * expit(-s)
    H = (X * r[:, None]).T @ X / len(X)
    H = 0.5 * (H + H.T)  # exact symmetry despite BLAS rounding
    H[np.diag_indices_from(H)] += cfg.lam
    return H


def _noise_term(cfg: ObjectiveConfig, d: int) -> np.ndarray | None:
    if cfg.sigma == 0.0:
        return None
    if cfg.noise_draw is None:
        raise ConfigError("sigma > 0 requires a noise_draw vector")
    b = np.asarray(cfg.noise_draw, dtype=np.float64)
    if b.shape != (d,):
        raise ConfigError(f"noise_draw shape {b.shape} does not match d={d}")
    return b


def noisy_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> float:
    base = loss(w, X, y, cfg)
    b = _noise_term(cfg, X.shape[1])
    if b is None:
        return base
    return base + cfg.sigma * float(b @ w) / len(X)


def noisy_gradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, cfg: ObjectiveConfig) -> np.ndarray:
    g = gradient(w, X, y, cfg)
    b = _noise_term(cfg, X.shape[1])
    if b is None:
        return g
    return g + cfg.sigma * b / len(X)


# ---------------------------------------------------------------------------
# prediction

def predict_scores(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Raw scores: (n,) for a single weight vector, (n, k) for a stacked bundle."""
    if weights.ndim == 1:
        return X @ weights
    if weights.ndim == 2:
        return X @ weights.T
    raise ConfigError(f"weights must be 1-D or 2-D, got ndim={weights.ndim}")


def predict_classes(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Class ids from scores.

    Single vector: class 1 when the score is >= 0 (zero goes to the
    positive class).  Bundle: argmax over per-class scores with ties broken
    toward the lowest class id.
    """
    scores = predict_scores(weights, X)
    if scores.ndim == 1:
        return (scores >= 0.0).astype(np.int64)
    return np.argmax(scores, axis=1).astype(np.int64)


def accuracy_counts(weights: np.ndarray, X: np.ndarray, labels: np.ndarray) -> tuple[int, int]:
    """(correct, total) on the given rows; total must be positive."""
    if len(X) == 0:
        raise ConfigError("accuracy requested on an empty point set")
    pred = predict_classes(weights, X)
    return int(np.sum(pred == labels)), int(len(X))


def accuracy(weights: np.ndarray, X: np.ndarray, labels: np.ndarray) -> float:
    correct, total = accuracy_counts(weights, X, labels)
    return correct / total
