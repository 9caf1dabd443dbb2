"""Exception types shared across the package."""


class OtlabError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(OtlabError):
    """Array dimensions do not satisfy an operation's contract."""


class ConfigError(OtlabError):
    """Invalid configuration value; message names the offending field."""


class ContractError(OtlabError):
    """A call violated an operation precondition (non-shape)."""


class ReferenceUnavailable(OtlabError):
    """No analytic ground truth exists for the requested dataset pair."""


class GradientError(OtlabError):
    """Non-finite gradient encountered; message names the parameter."""


class SinkhornError(OtlabError):
    """Sinkhorn failed to reach the marginal tolerance within max_iter."""

    def __init__(self, message, violation):
        super().__init__(message)
        self.violation = violation


class TrainingDiverged(OtlabError):
    """Training aborted; carries the partial history for flushing."""

    def __init__(self, message, iteration, history):
        super().__init__(message)
        self.iteration = iteration
        self.history = history
