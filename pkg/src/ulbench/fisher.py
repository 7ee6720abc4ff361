"""Newton-correction unlearning with Fisher-shaped parameter noise.

Training perturbs a converged SGD optimum with noise whitened by the
inverse fourth root of the Hessian at that optimum.  Unlearning removes
the deleted points in sequential mini-batches; each batch applies one
Newton step of the remaining-data objective and, when sigma > 0, adds a
fresh noise draw shaped by the current Hessian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .common import Stopwatch, UnlearnResult, chunk, substream
from .data import DatasetView, base_signed, binary_task, check_deletion_ids
from .errors import ConfigError, ConvergenceError, NumericalError
from .objective import ObjectiveConfig, gradient, hessian
from .sgd import SgdConfig, train


@dataclass
class FisherConfig:
    """Noise scale, per-batch deletion size (None: all at once), noise seed."""

    sigma: float = 0.0
    minibatch: int | None = None
    noise_seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.minibatch is not None and self.minibatch < 1:
            raise ConfigError(f"minibatch must be >= 1, got {self.minibatch}")


def inv_fourth_root(mat: np.ndarray, eig_floor: float) -> np.ndarray:
    """M^(-1/4) through a symmetric eigendecomposition.

    Eigenvalues are clamped below at eig_floor before the fractional
    power.  With a zero floor the matrix must be strictly positive
    definite.
    """
    vals, vecs = scipy.linalg.eigh(0.5 * (mat + mat.T))
    if eig_floor > 0.0:
        vals = np.maximum(vals, eig_floor)
    elif vals.min() <= 0.0:
        raise NumericalError(
            f"matrix is not positive definite (min eigenvalue {vals.min():.3e})"
        )
    return (vecs * vals ** -0.25) @ vecs.T


def newton_solve(F: np.ndarray, delta: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(F), delta)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"Newton system is not positive definite: {exc}") from exc


def fisher_train(
    view: DatasetView,
    lam: float,
    sgd_cfg: SgdConfig,
    cfg: FisherConfig,
    y: np.ndarray | None = None,
) -> np.ndarray:
    """SGD optimum plus sigma * F^(-1/4) b noise at that optimum.

    The optimum must pass the gradient-norm gate; otherwise the Hessian
    is evaluated away from the stationary point it is meant to describe.
    With sigma = 0 the optimum is returned as is.
    """
    X, ys = binary_task(view, y)
    obj = ObjectiveConfig(lam=lam)
    w_opt, _ = train(X, ys, obj, sgd_cfg)
    gate = sgd_cfg.grad_norm_gate
    gn = float(np.linalg.norm(gradient(w_opt, X, ys, obj)))
    if gn > gate:
        raise ConvergenceError(
            f"gradient norm {gn:.3e} above gate {gate:.1e}; raise epochs or batch size"
        )
    if cfg.sigma == 0.0:
        return w_opt
    F = hessian(w_opt, X, ys, obj)
    root = inv_fourth_root(F, eig_floor=lam)
    b = substream(cfg.noise_seed, 0).standard_normal(len(w_opt))
    return w_opt + cfg.sigma * (root @ b)


def fisher_unlearn(
    w: np.ndarray,
    view: DatasetView,
    deleted_ids,
    lam: float,
    cfg: FisherConfig,
    y: np.ndarray | None = None,
) -> UnlearnResult:
    """Remove deleted_ids from the model by per-batch Newton corrections.

    Batches follow the order of deleted_ids with at most cfg.minibatch
    points each.  Noise draws come from a counter-keyed substream of
    noise_seed, so the i-th batch always sees the same draw.
    """
    ids = check_deletion_ids(view, deleted_ids)
    m = len(ids)
    mprime = cfg.minibatch if cfg.minibatch is not None else m
    batches = chunk(ids, mprime)
    base = view.base
    signed = base_signed(base, y)
    with Stopwatch() as sw:
        obj = ObjectiveConfig(lam=lam)
        remaining = view.remaining
        w_u = np.array(w, dtype=np.float64, copy=True)
        for i, batch in enumerate(batches, start=1):
            remaining = np.setdiff1d(remaining, batch)
            if len(remaining) == 0:
                raise ConfigError("deletions would empty the remaining set")
            Xr = base.features[remaining]
            yr = signed[remaining]
            delta = gradient(w_u, Xr, yr, obj)
            F = hessian(w_u, Xr, yr, obj)
            w_u = w_u - newton_solve(F, delta)
            if not np.isfinite(w_u).all():
                raise NumericalError(f"non-finite weights after deletion batch {i}")
            if cfg.sigma > 0.0:
                root = inv_fourth_root(F, eig_floor=lam)
                b = substream(cfg.noise_seed, i).standard_normal(len(w_u))
                w_u = w_u + cfg.sigma * (root @ b)
    return UnlearnResult(
        weights=w_u,
        method="fisher",
        seconds=sw.seconds,
        params={
            "lam": lam,
            "sigma": cfg.sigma,
            "minibatch": mprime,
            "noise_seed": cfg.noise_seed,
            "deleted": m,
            "batches": len(batches),
        },
    )
