"""Exception hierarchy shared across the package."""


class NgmnError(Exception):
    """Base class for all errors raised by ngmn."""


class InvalidInputError(NgmnError, ValueError):
    """Input data violates a precondition (non-finite values, bad labels, ...)."""


class InvalidConfigError(NgmnError, ValueError):
    """A hyper-parameter is out of its admissible range."""


class ShapeError(NgmnError, ValueError):
    """Matrix dimensions do not line up."""


class NotPositiveDefiniteError(NgmnError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class ManifoldInfeasibleError(NgmnError, ValueError):
    """The orthogonality constraint of the decision layer cannot be met (d < c)."""


class ParseError(NgmnError, ValueError):
    """Malformed dataset file."""


class WrongMagicError(ParseError):
    pass


class CountMismatchError(ParseError):
    pass


class TruncatedError(ParseError):
    pass


class ModelFormatError(NgmnError, ValueError):
    """Base class for model deserialization failures."""


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass
