"""Exception hierarchy shared across the package.

Two top-level families matter to callers: configuration problems (bad
inputs, malformed files, violated preconditions a user can fix) and
numerical failures (non-finite updates, singular systems, convergence
gates).  The CLI maps them to distinct process exit codes.
"""
from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class UlbenchError(Exception):
    """Base class for all package errors."""


class ConfigError(UlbenchError):
    """Invalid configuration, arguments, or violated usage precondition."""


class DataFormatError(ConfigError):
    """Malformed dataset, trajectory, or deletion-list file."""


class NumericalError(UlbenchError):
    """Numerical failure: non-finite values, singular or indefinite systems."""


class ConvergenceError(NumericalError):
    """An optimizer did not reach the required gradient norm."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return 1
