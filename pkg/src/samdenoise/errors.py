"""Exception types shared across the package."""


class SamError(Exception):
    """Base class for all errors raised by samdenoise."""


class ParamError(SamError, ValueError):
    """A parameter is outside its valid domain."""


class ShapeError(SamError, ValueError):
    """Two inputs that must share a shape do not."""


class GateError(SamError, ValueError):
    """A time gate is empty or falls outside the volume."""


class SpecError(SamError, ValueError):
    """A phantom description is internally inconsistent."""


class AsvError(SamError):
    """Base class for ASV decoding failures."""


class FormatError(AsvError):
    """The stream does not start with the ASV magic."""


class TruncatedError(AsvError):
    """The stream ends before the header or payload is complete."""


class InvalidHeaderError(AsvError):
    """Header fields are nonfinite, out of range, or describe an empty volume."""
