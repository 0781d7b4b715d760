"""Exception types shared across the toolkit."""


class SipkitError(Exception):
    """Base class for all toolkit errors."""


class IoError(SipkitError):
    """File missing or unreadable."""


class DecodeError(SipkitError):
    """Corrupt or unsupported image data."""


class DegenerateImage(SipkitError):
    """Image has no usable signal for the requested measure (e.g. zero gradient)."""


class InsufficientEdges(SipkitError):
    """Fewer than two edge elements; pairwise statistics undefined."""


class ImageTooSmall(SipkitError):
    """Image below the minimum size required by an operation."""


class FormatError(SipkitError):
    """Binary file has a bad magic, version, or inconsistent header fields."""


class TruncatedFile(SipkitError):
    """Binary payload shorter than the header demands."""


class DimensionMismatch(SipkitError):
    """Array or file dimensions inconsistent with what the operation expects."""


class NonFiniteData(SipkitError):
    """NaN or infinity found where finite values are required."""


class RankError(SipkitError):
    """Requested more PCA components than the data can support."""


class LengthMismatch(SipkitError):
    """Paired sequences have different lengths."""


class SingularDesign(SipkitError):
    """Regression design matrix is (numerically) rank deficient."""


class DegenerateLabels(SipkitError):
    """Classification labels do not span at least two usable classes."""


class SchemaError(SipkitError):
    """Manifest CSV or meta JSON does not match the expected schema."""


class ScaleViolation(SipkitError):
    """A raw rating lies outside its declared scale."""


class MissingImage(SipkitError):
    """A manifest entry points to a non-existent image file."""


class ZeroWidthScale(SipkitError):
    """Rating scale has scale_min == scale_max; rescaling undefined."""


class AlignmentError(SipkitError):
    """Image ids of two inputs that must align do not match."""


class MissingActivations(SipkitError):
    """Requested activation layers have no corresponding files."""


class DropBudgetExceeded(SipkitError):
    """More than the allowed fraction of images failed during a batch run."""
