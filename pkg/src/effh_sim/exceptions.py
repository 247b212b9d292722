"""Exceptions raised by effh_sim."""


class EffhError(Exception):
    """Base class for all effh_sim errors."""


class DimensionError(EffhError, ValueError):
    """Operator shapes or factorizations do not agree."""


class HermiticityError(EffhError, ValueError):
    """An operator required to be Hermitian is not, within tolerance."""


class DensityMatrixError(EffhError, ValueError):
    """A state violates trace, Hermiticity or positivity requirements."""


class ConvergenceError(EffhError, RuntimeError):
    """A series, quadrature or truncation failed to converge."""


class NumericError(EffhError, RuntimeError):
    """A computation produced non-finite or otherwise unusable values."""


class ConfigError(EffhError, ValueError):
    """A scenario file is malformed or inconsistent."""
