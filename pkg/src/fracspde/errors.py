"""Exception hierarchy shared by all modules."""


class FracSPDEError(Exception):
    """Base class for errors raised by this package."""


class DomainError(FracSPDEError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class AccuracyError(FracSPDEError, ArithmeticError):
    """The requested accuracy cannot be met by the selected regime."""

    def __init__(self, regime: str, estimate: float, target: float):
        self.regime = regime
        self.estimate = estimate
        self.target = target
        super().__init__(
            f"{regime} regime: error estimate {estimate:.3e} exceeds target {target:.3e}"
        )


class ResourceError(FracSPDEError, MemoryError):
    """A computation would exceed a configured resource budget."""


class ContractError(FracSPDEError, RuntimeError):
    """An input violates the documented contract of an operation."""


class ConvergenceError(FracSPDEError, RuntimeError):
    """A fixed-point iteration did not converge.

    ``history`` holds the successive-iterate distances observed before giving up.
    """

    def __init__(self, message: str, history=()):
        self.history = list(history)
        super().__init__(message)


class SampleFailure(FracSPDEError, RuntimeError):
    """A Monte Carlo sample failed; carries the sample index and seed for replay."""

    def __init__(self, sample_index: int, seed, cause: BaseException):
        self.sample_index = sample_index
        self.seed = seed
        self.cause = cause
        super().__init__(f"sample {sample_index} (seed {seed}) failed: {cause}")
