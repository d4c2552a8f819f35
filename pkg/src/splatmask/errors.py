"""Exception types raised across the package.

Every error the library raises deliberately derives from SplatmaskError,
so callers can catch one base type. Most also derive from the closest
builtin (ValueError etc.) to stay friendly to generic handlers.
"""


class SplatmaskError(Exception):
    """Base class for all errors raised by splatmask."""


class ShapeMismatchError(SplatmaskError, ValueError):
    """Two grids that must share dimensions do not."""


class DegenerateScaleError(SplatmaskError, ValueError):
    """A splat scale is below the minimum allowed (covariance would be singular)."""


class UndefinedBoundaryError(SplatmaskError, ValueError):
    """A mask is all-foreground or all-background, so no boundary exists."""


class NonFiniteGradientError(SplatmaskError, FloatingPointError):
    """A gradient contains NaN or Inf; refusing to propagate it silently."""


class UndefinedMetricError(SplatmaskError, ZeroDivisionError):
    """A metric's denominator is zero for the given counts."""


class GenerationError(SplatmaskError, ValueError):
    """A synthetic shape spec produced a degenerate (single-class) mask."""


class PgmError(SplatmaskError):
    """Base class for PGM file problems."""


class PgmUnsupportedMagicError(PgmError, ValueError):
    """The file's magic number is not P2 or P5."""


class PgmMalformedHeaderError(PgmError, ValueError):
    """The PGM header is missing, incomplete, or invalid."""


class PgmTruncatedError(PgmError, ValueError):
    """The PGM payload holds fewer samples than the header promises."""
