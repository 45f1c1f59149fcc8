"""Exception hierarchy shared by all modules."""


class H1MultError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(H1MultError, ValueError):
    """An input violated a documented precondition."""


class ComputationError(H1MultError, RuntimeError):
    """A numerical procedure could not reach its target."""


class NotPowerOfTwo(ValidationError):
    pass


class GridTooSmall(ValidationError):
    pass


class ZeroInput(ValidationError):
    pass


class SizeLimit(ValidationError):
    pass


class DegreeViolation(ValidationError):
    pass


class FamilyLengthMismatch(ValidationError):
    pass


class NormViolation(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotAContraction(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class FactorizationDiverged(ComputationError):
    pass


class SdpNonConvergent(ComputationError):
    pass


class NotCertifiable(ComputationError):
    pass


class PropertyCheckFailed(ComputationError):
    pass


class CacheError(H1MultError):
    pass


class NotFound(CacheError, KeyError):
    pass


class ChecksumMismatch(CacheError):
    pass


class IoError(CacheError, OSError):
    pass
