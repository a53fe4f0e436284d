"""Exception types shared across the package."""


class InvalidDataError(ValueError):
    """Raised when input data or configuration fails validation."""


class SupportError(ValueError):
    """Raised when a hyper-parameter lies on or outside its support boundary.

    Signals a sampler or grid bug rather than a recoverable condition.
    """


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best available estimate and its error bound.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ConvergenceError(RuntimeError):
    """MCMC draws failed convergence checks (R-hat / ESS thresholds)."""


class MixingError(ConvergenceError):
    """Product-space model indicator stuck in one state for a whole chain."""


class AnchorError(ValueError):
    """Density estimate unusable at the anchor point; re-anchoring required."""


class EstimationError(RuntimeError):
    """Density estimator failed (degenerate sample, optimizer non-convergence)."""
