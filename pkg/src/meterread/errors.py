"""Exception hierarchy.

Every error raised by the package derives from :class:`MeterReadError`, so a
batch driver can catch one type and still inspect the concrete kind.
"""


class MeterReadError(Exception):
    """Base class for all package errors."""

    kind = "error"


# core / image I/O
class MissingFileError(MeterReadError, FileNotFoundError):
    kind = "missing_file"


class UnsupportedFormatError(MeterReadError, ValueError):
    kind = "unsupported_format"


class CorruptImageError(MeterReadError, ValueError):
    kind = "corrupt_image"


class UnwritablePathError(MeterReadError, OSError):
    kind = "unwritable_path"


class InvalidImageError(MeterReadError, ValueError):
    kind = "invalid_image"


class DimensionMismatchError(MeterReadError, ValueError):
    kind = "dimension_mismatch"


# geometry / warp
class PointAtInfinityError(MeterReadError, ArithmeticError):
    kind = "point_at_infinity"


class DegenerateConfigurationError(MeterReadError, ValueError):
    kind = "degenerate_configuration"


class SingularSystemError(MeterReadError, ArithmeticError):
    kind = "singular_system"


class NonInvertibleHomographyError(MeterReadError, ValueError):
    kind = "non_invertible_homography"


# postproc / reading
class InsufficientPixelsError(MeterReadError, ValueError):
    kind = "insufficient_pixels"


class DegenerateRayError(MeterReadError, ValueError):
    kind = "degenerate_ray"


class ZeroSpanError(MeterReadError, ValueError):
    kind = "zero_span"


class EmptyPointerError(MeterReadError, ValueError):
    kind = "empty_pointer"


class InsufficientScalesError(MeterReadError, ValueError):
    kind = "insufficient_scales"


class AmbiguousScalesError(MeterReadError, ValueError):
    kind = "ambiguous_scales"


# losses / ctc
class InvalidWeightError(MeterReadError, ValueError):
    kind = "invalid_weight"


class InfeasibleLabelError(MeterReadError, ValueError):
    kind = "infeasible_label"


class MalformedProbMatrixError(MeterReadError, ValueError):
    kind = "malformed_prob_matrix"


class InstanceTooLargeError(MeterReadError, ValueError):
    kind = "instance_too_large"


class UnparseableNumberError(MeterReadError, ValueError):
    kind = "unparseable_number"


# metrics
class EmptyInputError(MeterReadError, ValueError):
    kind = "empty_input"


class ZeroGroundTruthError(MeterReadError, ValueError):
    kind = "zero_ground_truth"


class NonPositiveRangeError(MeterReadError, ValueError):
    kind = "nonpositive_range"


# synthmeter / pipeline
class InvalidSpecError(MeterReadError, ValueError):
    kind = "invalid_spec"


class EmptyRangeError(MeterReadError, ValueError):
    kind = "empty_range"


class InvalidConfigError(MeterReadError, ValueError):
    kind = "invalid_config"


class StageError(MeterReadError):
    """A failure inside one pipeline stage; ``cause`` holds the original error."""

    kind = "stage"

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")

    @property
    def cause_kind(self):
        return getattr(self.cause, "kind", type(self.cause).__name__)
