"""Benchmark harness for unlearning in L2-regularized logistic regression.

The package trains binary (or one-vs-rest) logistic models with mini-batch
SGD, removes deleted training points from a model by Fisher-style Newton
correction, influence-style Newton correction, or recorded-gradient replay,
and evaluates the result against full retraining.  A decision pipeline
estimates the accuracy disparity on deleted data from test accuracy alone
and falls back to retraining when the estimate crosses a threshold.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, DataFormatError, NumericalError, UlbenchError

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataFormatError",
    "NumericalError",
    "UlbenchError",
    "__version__",
]
