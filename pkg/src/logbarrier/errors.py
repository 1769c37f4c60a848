"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(ToolkitError):
    """Input vector has the wrong shape or invalid values."""


class ParseError(ToolkitError):
    """A model or dataset file is malformed."""


class InvalidModel(ToolkitError):
    """Model structure is inconsistent (e.g. layer dimensions do not chain)."""


class TrainingDiverged(ToolkitError):
    """Training produced a non-finite loss."""


class InfeasiblePoint(ToolkitError):
    """Barrier evaluated at a point that is not misclassified."""


class InitializationFailed(ToolkitError):
    """No misclassified starting point found within the noise budget."""


class ValidationError(ToolkitError):
    """Dataset contents violate the declared value ranges."""


class UnsupportedModel(ToolkitError):
    """Operation requires a model shape this function does not handle."""


class IoError(ToolkitError):
    """Report or curve output could not be written."""
