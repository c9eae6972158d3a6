"""Exception and warning types shared across the package."""


class GmrGpError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDataError(GmrGpError):
    """A dataset with zero samples was supplied where data is required."""


class NonFiniteInputError(GmrGpError):
    """Input data contains NaN or infinite values."""


class DimensionMismatchError(GmrGpError):
    """Vector or matrix dimensions are inconsistent with the model."""


class DegenerateComponentError(GmrGpError):
    """A mixture component collapsed and could not be recovered by regularization."""


class SingularInputBlockError(GmrGpError):
    """The input-marginal covariance block of a component is not invertible."""


class FactorizationFailureError(GmrGpError):
    """A covariance matrix could not be factorized even after jitter escalation."""


class AllStartsFailedError(GmrGpError):
    """Every start of a multi-start optimization failed with a factorization error."""


class DuplicateViaInputError(GmrGpError):
    """Two via-points share an input but demand conflicting outputs with zero noise."""


class NonPositiveParamError(GmrGpError):
    """A hyperparameter that must be strictly positive was set to a non-positive value."""


class IllConditionedRiccatiError(GmrGpError):
    """Tracking cost matrices are too ill-conditioned for a stable Riccati recursion."""


class ParseError(GmrGpError):
    """A data file could not be parsed; the message carries row/column context."""


class RaggedDemoError(ParseError):
    """Rows of a demonstration file do not form rectangular demonstrations."""


class ResponsibilityUnderflowWarning(UserWarning):
    """All component densities underflowed; nearest-component fallback was used."""
