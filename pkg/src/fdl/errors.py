"""Exception types shared across the package.

Everything user-facing derives from FdlError so callers (and the CLI) can
distinguish our failures from genuine bugs. Subclassing ValueError /
RuntimeError keeps the types usable with plain except clauses.
"""


class FdlError(Exception):
    """Base class for all errors raised by this package."""


class SpectrumSymmetryError(FdlError, ValueError):
    """Spectrum fails the conjugate-symmetry requirement for a real field."""


class ScheduleError(FdlError, ValueError):
    """Mixing schedule violates its construction contract."""


class ConfigError(FdlError, ValueError):
    """Bad configuration file, flag value, or option combination."""


class TensorFormatError(FdlError, ValueError):
    """Malformed tensor or checkpoint file (bad magic, truncation, sizes)."""


class DegenerateDataError(FdlError, ValueError):
    """Input data unusable: zero variance, empty band, single-class fold."""


class TrainingDivergedError(FdlError, RuntimeError):
    """Training loss blew up past the divergence guard."""


class SamplingDivergedError(FdlError, RuntimeError):
    """Sampler produced non-finite state."""
