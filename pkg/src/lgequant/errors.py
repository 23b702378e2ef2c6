"""Exception types shared across the package."""


class LgeQuantError(Exception):
    """Base class for all package errors."""


class GeometryError(LgeQuantError):
    """Invalid geometric input (line not in plane, slices not near-parallel, ...)."""


class DegenerateInputError(LgeQuantError):
    """Input carries no usable information (constant array, empty objective, ...)."""


class FitError(LgeQuantError):
    """Mixture fitting failed or the input is not bimodal."""


class ThresholdError(LgeQuantError):
    """No component intersection exists between the two mixture modes."""


class ContourError(LgeQuantError):
    """Missing, malformed, or degenerate contour polygon."""


class NormalizationError(LgeQuantError):
    """Blood-pool extraction or iterative normalization failed."""


class EmptyMaskError(LgeQuantError):
    """An operation that needs masked voxels received an empty mask."""


class DatasetFormatError(LgeQuantError):
    """Malformed dataset manifest or pixel file."""


class PixelFileError(DatasetFormatError):
    """Referenced pixel file is missing or its size does not match the manifest."""


class OrientationError(DatasetFormatError):
    """Slice orientation vectors are not orthonormal."""
