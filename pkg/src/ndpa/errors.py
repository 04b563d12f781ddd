"""Exception hierarchy for the ndpa package.

Everything raised on purpose derives from :class:`NdpaError`, so callers
(and the CLI) can distinguish domain errors from genuine bugs.
"""


class NdpaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(NdpaError, ValueError):
    """A domain type or plan was constructed with out-of-range values."""


class ConfigFileError(NdpaError, ValueError):
    """A configuration file is missing keys or contains invalid values."""


class AboveThresholdError(NdpaError):
    """Operation only defined below the parametric instability threshold."""


class BelowThresholdError(NdpaError):
    """Operation only defined above the parametric instability threshold."""


class AtOrAboveThresholdError(AboveThresholdError):
    """Closed form valid strictly below threshold was asked at or above it."""


class DetunedAboveThresholdError(NdpaError):
    """Above-threshold steady state with a detuned drive is not modeled."""


class EliminationGuardError(NdpaError):
    """Pump damping is not fast enough for adiabatic elimination."""


class PumpDetuningTooLargeError(NdpaError):
    """Drive detuning violates the |delta| << gamma_s assumption."""


class SingularAtFrequencyError(NdpaError):
    """Spectral density requested at a frequency where a marginal mode
    makes the resolvent singular (typically omega = 0 at threshold)."""


class MarginallyStableError(NdpaError):
    """No stationary covariance: the drift has an eigenvalue with zero
    real part (free phase or exactly critical drive)."""


class UnstableStepError(NdpaError):
    """A stochastic trajectory diverged (time step too large, or the
    pump was driven far above threshold without elimination)."""


class SeedRequiredError(NdpaError):
    """Reproducible simulation requested without an RNG seed."""


class InsufficientDurationError(NdpaError):
    """Phase-diffusion fit window is shorter than the requested minimum."""


class LabelMismatchError(NdpaError):
    """Comparison between results with different quadrature labels."""


class UnknownFigureError(NdpaError, ValueError):
    """Figure command asked for a preset that does not exist."""


class InvalidRangeError(NdpaError, ValueError):
    """Sweep specification has an empty, reversed or out-of-domain range."""
