"""Exception types shared across the toolkit."""


class TtembError(Exception):
    """Base class for every error this package raises on purpose."""


class ShapeMismatch(TtembError, ValueError):
    """A shape is inconsistent with the data it describes."""


class ModeOutOfRange(TtembError, IndexError):
    """A tensor mode index falls outside 1..N."""


class DimensionMismatch(TtembError, ValueError):
    """Two modes selected for contraction have different sizes."""


class NumericalFailure(TtembError, ArithmeticError):
    """The SVD kernel did not converge."""


class InfeasibleOrder(TtembError, ValueError):
    """No factorization of the requested length exists."""


class RankOutOfRange(TtembError, ValueError):
    """A requested factorization rank is outside 1..min(V, d)."""


class TokenOutOfRange(TtembError, IndexError):
    """A row index is outside the table."""


class DuplicateToken(TtembError, ValueError):
    """The token id is already present in the store."""


class TokenNotFound(TtembError, KeyError):
    """The token id is not present in the store."""


class FormatError(TtembError):
    """Base class for on-disk format problems."""


class CorruptFile(FormatError):
    """Bad magic, bad checksum, or a truncated / overrun payload."""


class VersionMismatch(FormatError):
    """The file carries a format version this build cannot read."""


class EmptySequence(TtembError, ValueError):
    """Perplexity of an empty token sequence is undefined."""


class LengthMismatch(TtembError, ValueError):
    """Paired sequences must have equal length."""


class DivisionByZero(TtembError, ZeroDivisionError):
    """A ratio with a zero denominator was requested."""
