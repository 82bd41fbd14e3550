"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class GlacierFrontError(Exception):
    """Base class for all package errors."""


class ShapeError(GlacierFrontError):
    """Tensor shapes are incompatible; the message names the offending axes."""


class ConfigError(GlacierFrontError):
    """A configuration value violates a documented invariant."""


class DataError(GlacierFrontError):
    """On-disk data is missing, malformed, or fails validation."""


class NumericError(GlacierFrontError):
    """A non-finite value (NaN/Inf) surfaced during computation."""


class CoverageError(GlacierFrontError):
    """A canvas pixel is not covered by any patch during merging."""
