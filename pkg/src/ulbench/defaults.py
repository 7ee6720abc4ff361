"""Benchmark hyperparameter defaults.

The corpus table fixes epochs, mini-batch size, and the replay burn-in
per dataset; learning rate, ridge strength, and quasi-Newton history
depth are shared across all of them.  Synthetic blob runs default to
full-batch descent so the trained model reliably passes the stationarity
gate that the Newton-correction methods require.
"""
from __future__ import annotations

from dataclasses import dataclass

ETA = 1.0
LAM = 1e-4
LBFGS_HISTORY = 2


@dataclass(frozen=True)
class TrainingDefaults:
    epochs: int
    batch_size: int | None  # None means one full-set batch per epoch
    burn_in: int

    def resolve_batch_size(self, n: int) -> int:
        return n if self.batch_size is None else self.batch_size


CORPUS_DEFAULTS: dict[str, TrainingDefaults] = {
    "mnist-b": TrainingDefaults(epochs=1000, batch_size=1024, burn_in=10),
    "mnist": TrainingDefaults(epochs=200, batch_size=512, burn_in=20),
    "covtype": TrainingDefaults(epochs=200, batch_size=512, burn_in=10),
    "higgs": TrainingDefaults(epochs=20, batch_size=512, burn_in=500),
    "cifar2": TrainingDefaults(epochs=500, batch_size=512, burn_in=20),
    "epsilon": TrainingDefaults(epochs=60, batch_size=512, burn_in=10),
}

SYNTHETIC_DEFAULTS = TrainingDefaults(epochs=3000, batch_size=None, burn_in=5)


def defaults_for(dataset: str) -> TrainingDefaults:
    """Corpus defaults when the name is known, synthetic defaults otherwise."""
    return CORPUS_DEFAULTS.get(dataset, SYNTHETIC_DEFAULTS)
