"""Exception and warning types shared across the package."""


class OmkError(Exception):
    """Base class for all package errors."""


class DomainError(OmkError, ValueError):
    """Parameters outside the stable / valid physical domain."""


class WindowError(OmkError):
    """A frequency window does not cover the support a computation needs."""


class PoleError(OmkError):
    """A Dyson denominator vanishes on the frequency grid."""


class SolverError(OmkError):
    """A numerical solver produced non-finite values or failed outright."""


class TruncationError(OmkError):
    """Fock-space truncation too small for the expected occupancy."""


class MemoryBudgetError(OmkError):
    """Requested Liouvillian exceeds the configured dimension cap."""


class CutoffError(OmkError):
    """Bessel-series cutoff leaves a non-negligible tail."""


class BandError(OmkError):
    """Integration band not contained in the frequency grid."""


class ConfigError(OmkError):
    """Malformed or inconsistent scenario file."""


class RegimeWarning(UserWarning):
    """An asymptotic formula is evaluated outside its intended regime."""
