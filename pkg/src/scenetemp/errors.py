"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array shapes do not line up; the message carries both shapes."""


class DataError(Exception):
    """Input data is unusable (bad manifest, undecodable images, empty sets)."""


class FormatError(DataError):
    """A structured input file violates its format contract."""


class EmptyRegionError(DataError):
    """A mask region has no pixels, so its bounding box is undefined."""


class CheckpointError(DataError):
    """A checkpoint file cannot be used."""


class IntegrityError(CheckpointError):
    """Checkpoint bytes are corrupt or truncated (checksum mismatch)."""


class VersionError(CheckpointError):
    """Checkpoint was written by an incompatible format version."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""
