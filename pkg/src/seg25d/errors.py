"""Exception types raised across the pipeline."""


class SegError(Exception):
    """Base class for all pipeline errors."""


class DegenerateGeometryError(SegError):
    pass


class InvalidInterpolationError(SegError):
    pass


class InvalidWindowError(SegError):
    pass


class VolumeFormatError(SegError):
    """Malformed VSEG header, payload length mismatch, bad dtype or label range."""


class SplitFailureError(SegError):
    pass


class AxisFailureError(SegError):
    pass


class AmbiguousAxisError(AxisFailureError):
    pass


class IncompleteAccumulationError(SegError):
    pass


class FusionShapeError(SegError):
    pass


class ShapeError(SegError):
    pass


class TrainingDivergedError(SegError):
    pass
