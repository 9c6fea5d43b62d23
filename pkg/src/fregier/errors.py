"""Exception hierarchy shared by the geometry modules and the CLI."""


class GeometryError(ValueError):
    """Base class for invalid or degenerate geometric input."""


class DegenerateInputError(GeometryError):
    pass


class NotAnEllipseError(GeometryError):
    def __init__(self, classification: str, message: str | None = None):
        self.classification = classification
        super().__init__(message or f"conic is not a real ellipse (classified as {classification!r})")


class ParameterPoleError(GeometryError):
    pass


class IdealPointError(GeometryError):
    """Raised when a homogeneous point lies on the line at infinity."""


class DegenerateSampleError(GeometryError):
    """A single chord sample is unusable; callers are expected to skip it."""


class SamplingFailure(GeometryError):
    pass


class InfiniteSolutionsError(GeometryError):
    pass


class NotPeriodicError(GeometryError):
    pass
