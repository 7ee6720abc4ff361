"""Evaluation metrics and the per-run report row.

The central quantity is the symmetric absolute percentage error

    SAPE(a, b) = 100 * |b - a| / (|a| + |b|),  SAPE(0, 0) = 0

computed over exact rationals so that equal accuracies always give
exactly zero.  Accuracy error compares an updated model's test accuracy
against the noise-free retrained optimum; accuracy disparity compares
accuracies on the deleted points between the retrained and updated
models at matched noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError

CSV_COLUMNS = (
    "dataset",
    "method",
    "sigma",
    "tau",
    "del_dist",
    "del_fraction",
    "m",
    "seed",
    "acc_test_updated",
    "acc_test_retrain_opt",
    "acc_del_updated",
    "acc_del_retrain",
    "acc_err_pct",
    "acc_dis_pct",
    "t_unlearn_ms",
    "t_retrain_ms",
    "speedup",
)

TIMING_COLUMNS = ("t_unlearn_ms", "t_retrain_ms", "speedup")


def _as_fraction(x) -> Fraction:
    if isinstance(x, tuple):
        correct, total = x
        if total <= 0:
            raise ConfigError("accuracy fraction needs a positive denominator")
        return Fraction(int(correct), int(total))
    return Fraction(x)


def sape(a, b) -> float:
    """Symmetric absolute percentage error in [0, 100].

    Accepts floats or exact (correct, total) count pairs; identical
    arguments give exactly 0.0.
    """
    fa, fb = _as_fraction(a), _as_fraction(b)
    if fa == 0 and fb == 0:
        return 0.0
    return float(100 * abs(fb - fa) / (abs(fa) + abs(fb)))


def acc_err(acc_test_retrain_opt, acc_test_updated) -> float:
    """SAPE between the noise-free retrained and the updated test accuracy."""
    return sape(acc_test_retrain_opt, acc_test_updated)


def acc_dis(acc_del_retrain, acc_del_updated) -> float:
    """SAPE between retrained and updated accuracy on the deleted points."""
    return sape(acc_del_retrain, acc_del_updated)


def speedup(t_retrain: float, t_unlearn: float) -> float:
    """Retraining wall time over unlearning wall time."""
    if t_unlearn <= 0:
        raise ConfigError(f"unlearning time must be positive, got {t_unlearn}")
    if t_retrain < 0:
        raise ConfigError(f"retraining time must be >= 0, got {t_retrain}")
    return t_retrain / t_unlearn


@dataclass
class EvalReport:
    """One benchmark grid cell; column order is fixed for CSV emission."""

    dataset: str
    method: str
    sigma: float
    tau: float
    del_dist: str
    del_fraction: float
    m: int
    seed: int
    acc_test_updated: float
    acc_test_retrain_opt: float
    acc_del_updated: float
    acc_del_retrain: float
    acc_err_pct: float
    acc_dis_pct: float
    t_unlearn_ms: float
    t_retrain_ms: float
    speedup: float

    def to_row(self) -> list[str]:
        vals = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if col in TIMING_COLUMNS:
                vals.append(f"{v:.3f}")
            elif isinstance(v, float):
                vals.append(repr(v))
            else:
                vals.append(str(v))
        return vals


def provenance_key(report: EvalReport) -> tuple:
    """Sort key giving CSV files a stable, rerun-independent row order."""
    return (
        report.dataset,
        report.method,
        report.sigma,
        report.tau,
        report.del_dist,
        report.del_fraction,
        report.seed,
    )
