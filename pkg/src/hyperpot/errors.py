"""Exception types shared across the package."""


class InvariantViolationError(ValueError):
    """A structural invariant of a space or table does not hold."""


class InvalidRadiusError(ValueError):
    """Ball radius must be strictly positive."""


class SpaceMismatchError(ValueError):
    """Operands live on different spaces."""


class IncompleteTableError(LookupError):
    """A convolution table entry required by the computation is missing."""


class NoHaarError(RuntimeError):
    """The translation-invariance system has no reliable solution."""


class DivergentIntegralError(ArithmeticError):
    """A kernel integral required to be finite diverges."""


class KernelHypothesisError(ValueError):
    """A kernel or exponent violates the hypotheses of the boundedness result."""


class NormComputationError(ArithmeticError):
    """A norm solver could not bracket or converge."""


class ConfigError(ValueError):
    """Experiment configuration is malformed."""
