"""Exception hierarchy.

Core functions raise these; only the CLI handlers turn them into exit codes
(ConfigError -> 2, other failures -> 3; a StageError takes the code of its cause).
"""

from __future__ import annotations


class QSpectralError(Exception):
    """Base class for every error raised by qspectral."""


class ConfigError(QSpectralError):
    """Invalid parameters or inputs."""


class DataError(ConfigError):
    """Dataset file could not be parsed."""


class NotSymmetricError(ConfigError):
    """Matrix handed to a symmetric eigensolver is not symmetric."""


class RescalingError(ConfigError):
    """Laplacian eigenvalues fall outside [0, 1)."""


class EmptyClusterError(ConfigError):
    """A partition leaves at least one cluster empty."""


class QubitCapError(ConfigError):
    """Dense simulation would exceed the configured qubit cap."""


class InvalidStateError(QSpectralError):
    """Quantum state or density matrix violates normalization, Hermiticity or positivity."""


class ConvergenceError(QSpectralError):
    """Iterative solver hit its iteration cap."""

    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


class CountingAmbiguityError(QSpectralError):
    """Counting phase estimate fell in [pi/2, 3pi/2]."""


class UnreachableTargetError(QSpectralError):
    """Binary search could not hit the requested cluster count."""

    def __init__(self, k0: int, lo: float, hi: float, count_lo: int | None, count_hi: int):
        super().__init__(
            f"cluster count {k0} unreachable: counting({lo:.6g}) = {count_lo}, counting({hi:.6g}) = {count_hi}"
        )
        self.k0 = k0
        self.lo = lo
        self.hi = hi
        self.count_lo = count_lo
        self.count_hi = count_hi


class StageError(QSpectralError):
    """A pipeline stage failed; wraps the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
