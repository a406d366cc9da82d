"""Exception hierarchy shared by all pipeline stages."""


class GazeLabelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GazeLabelError, ValueError):
    """Input violates a documented precondition (bad parameter, bad value)."""


class FormatError(ValidationError):
    """A serialized artifact does not follow its file format."""


class ParseError(FormatError):
    """A line of a serialized artifact could not be decoded."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DimensionError(ValidationError):
    """Two grids or masks that must share a layout do not."""


class PlacementError(GazeLabelError):
    """The scene generator could not place the requested ROIs."""
