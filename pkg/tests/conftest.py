"""Shared fixtures and independent oracle implementations.

The oracles here deliberately avoid the code paths they check: finite
differences for calculus, full-batch descent loops for retraining, and a
damped Newton loop for near-exact optima.
"""
from __future__ import annotations

import numpy as np
import pytest

from ulbench import data
from ulbench.objective import ObjectiveConfig, gradient, hessian, loss


def fd_gradient(w, X, y, cfg, h=1e-6):
    """Central-difference gradient of the loss."""
    g = np.zeros_like(w)
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (loss(w + e, X, y, cfg) - loss(w - e, X, y, cfg)) / (2 * h)
    return g


def fd_hessian(w, X, y, cfg, h=1e-5):
    """Central-difference Jacobian of the analytic gradient."""
    d = len(w)
    H = np.zeros((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[:, j] = (gradient(w + e, X, y, cfg) - gradient(w - e, X, y, cfg)) / (2 * h)
    return H


def gd_minimize(X, y, lam, tol=1e-6, eta=1.0, max_iter=400000):
    """Full-batch descent to a gradient norm below tol; the retrain oracle."""
    cfg = ObjectiveConfig(lam=lam)
    w = np.zeros(X.shape[1])
    for _ in range(max_iter):
        g = gradient(w, X, y, cfg)
        if np.linalg.norm(g) <= tol:
            return w
        w = w - eta * g
    raise AssertionError(f"oracle descent did not reach tol {tol}")


def newton_minimize(X, y, lam, tol=1e-11, max_iter=200):
    """Damped Newton to near machine precision."""
    cfg = ObjectiveConfig(lam=lam)
    w = np.zeros(X.shape[1])
    for _ in range(max_iter):
        g = gradient(w, X, y, cfg)
        if np.linalg.norm(g) <= tol:
            return w
        step = np.linalg.solve(hessian(w, X, y, cfg), g)
        t, f0 = 1.0, loss(w, X, y, cfg)
        while t > 1e-8 and loss(w - t * step, X, y, cfg) > f0:
            t *= 0.5
        w = w - t * step
    raise AssertionError(f"oracle Newton did not reach tol {tol}")


def random_instance(rng, n=None, d=None, scale=1.0):
    """Small random binary problem with +-1 labels."""
    n = n or int(rng.integers(5, 40))
    d = d or int(rng.integers(2, 8))
    X = rng.standard_normal((n, d)) * scale
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return X, y


@pytest.fixture
def blob_split():
    """Normalized 400/200 blob pair shared by several tests."""
    return data.synthetic_split(400, 200, 6, separation=3.0, seed=11)
