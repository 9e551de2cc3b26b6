"""Exception and warning types shared across the pipeline."""


class PhaseRngError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PhaseRngError, ValueError):
    """A parameter or configuration value violates its contract."""


class DataError(PhaseRngError, ValueError):
    """Input data is malformed (NaN samples, truncated files, ...)."""


class DegenerateInputError(PhaseRngError, ValueError):
    """A statistic is undefined for this input (e.g. zero variance)."""


class SamplingMarginWarning(UserWarning):
    """ADC sampling interval has little margin over delay + coherence time."""


class DiffusionResolutionWarning(UserWarning):
    """Simulation step is coarse relative to the laser coherence time."""


class DelayMarginWarning(UserWarning):
    """Interferometer delay has little margin over the coherence time."""
