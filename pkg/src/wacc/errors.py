"""
Exception hierarchy for the wacc package.

Every error raised on purpose by the library derives from WaccError. Errors
that describe a parameter outside its allowed range also derive from
ValueError so that generic callers can catch them.
"""


class WaccError(Exception):
    """Base class for all wacc errors."""


class NonFiniteInput(WaccError, ValueError):
    """A matrix or vector contains NaN or Inf entries."""


class DimensionMismatch(WaccError, ValueError):
    """Array shapes do not agree with each other or with a cone."""


class NotHermitian(WaccError, ValueError):
    """The matrix failed the relative Hermitian symmetry check."""


class NoConvergence(WaccError):
    """An iterative solver exhausted its budget."""


class ZeroVector(WaccError, ValueError):
    """A nonzero vector was required."""


class InvalidSigma(WaccError, ValueError):
    """Cap radius outside (0, 1]."""


class ZeroIterate(WaccError):
    """The power map sent an iterate to zero (start vector in the kernel)."""


class DegenerateSpectrum(WaccError):
    """|lambda_1| and |lambda_2| coincide within tolerance."""


class OrthogonalStart(WaccError):
    """The start vector has no component along the dominant eigenvector."""


class InvalidRange(WaccError, ValueError):
    """A bound was evaluated outside its range of validity."""


class EmptyInput(WaccError, ValueError):
    """An operation received no samples."""


class PreconditionViolated(WaccError, ValueError):
    """An operation's documented precondition does not hold."""


class SolverStall(WaccError):
    """Restarts of the restricted singular value solver disagree."""


class SchemaMismatch(WaccError):
    """A record file does not have the expected columns."""


class ConfigError(WaccError, ValueError):
    """An experiment configuration is invalid."""
