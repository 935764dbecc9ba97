"""Exception taxonomy shared by all modules.

Every error raised by the library derives from :class:`LentParticleError`,
so callers (and the CLI exit-code mapping) can distinguish library failures
from programming errors.
"""

from __future__ import annotations


class LentParticleError(Exception):
    """Base class for all library errors."""


class ConfigurationError(LentParticleError):
    """A jump-measure specification cannot be sampled (e.g. infinite truncated mass)."""


class SamplerError(LentParticleError):
    """The mark sampler misbehaved (wrong shape, non-finite output, ...)."""


class SpecViolationError(LentParticleError):
    """A hypothesis of the bottom structure is broken at a concrete mark."""


class DomainError(LentParticleError):
    """An argument lies outside its admissible domain (e.g. a time outside (0, T])."""


class NumericError(LentParticleError):
    """A computation produced non-finite values; the message names the offending index."""


class SingularJumpError(LentParticleError):
    """A jump size makes a required quantity singular (e.g. 1 + dY = 0)."""


class StiffnessError(LentParticleError):
    """The inter-event integrator could not reach its agreement tolerance."""


class HypothesisViolationError(LentParticleError):
    """An invertibility/conditioning assumption failed at an encountered point."""


class InputError(LentParticleError):
    """Inconsistent user input to a diagnostic aggregation (dimension mismatch etc.)."""


class ParseError(LentParticleError):
    """Experiment-config text could not be parsed; carries a 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
