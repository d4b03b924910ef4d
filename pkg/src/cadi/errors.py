"""Exception hierarchy.

The CLI maps :class:`ValidationError` to exit code 3 and
:class:`DegenerateError` to exit code 4.
"""


class CadiError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CadiError, ValueError):
    """Malformed or inconsistent input (bad file, NaN, wrong shape)."""


class AlignmentError(ValidationError):
    """A projection does not line up row-for-row with its dataset."""


class DegenerateError(CadiError, ArithmeticError):
    """A metric or optimizer cannot produce a meaningful number."""


class EmptyTripletSpaceError(DegenerateError):
    """The partition admits no (reference, pair) triplet."""


class DegenerateMetricError(DegenerateError):
    """The metric is undefined for this input (e.g. CDS with < 3 classes)."""


class TrainingDivergedError(DegenerateError):
    """AngleEmbedding training produced a non-finite or exploding loss."""
