"""Exception hierarchy shared across the package."""


class SemtxError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SemtxError):
    """Raster dimensions or geometry are inconsistent with the operation."""


class BoundsError(SemtxError):
    """A coordinate falls outside the region an operation can sample."""


class FormatError(SemtxError):
    """A serialized artifact is malformed, truncated, or fails its checksum."""


class ConfigError(SemtxError):
    """A component was invoked without the inputs its configuration requires."""


class NoForegroundError(SemtxError):
    """Segmentation found no foreground pixels; callers fall back to direct transmission."""


class DegenerateInputError(SemtxError):
    """Geometric input admits no valid construction (e.g. collinear hull points)."""


class ParameterError(SemtxError):
    """A numeric parameter violates its documented range."""


class SizeError(SemtxError):
    """Problem instance exceeds the size limit of an exhaustive method."""
