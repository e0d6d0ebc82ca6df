"""Exception hierarchy shared across the package.

Input/format problems derive from :class:`InputError`, numeric or contract
violations from :class:`NumericError`; the CLI maps the two groups to
distinct exit codes.
"""


class PianoqError(Exception):
    """Base class for all package errors."""


class InputError(PianoqError, ValueError):
    """Bad input data or file format (CLI exit code 2)."""


class NumericError(PianoqError, ValueError):
    """Numeric contract violation (CLI exit code 3)."""


# -- audio ----------------------------------------------------------------

class UnsupportedFormat(InputError):
    """Audio file uses a codec or bit depth the decoder does not handle."""


class CorruptHeader(InputError):
    """RIFF container is truncated or internally inconsistent."""


class TooShort(InputError):
    """Clip is too short to produce a single analysis window."""


# -- spectral -------------------------------------------------------------

class WindowOverflow(InputError):
    """Clip has fewer samples than the FFT size."""


class InvalidRange(InputError):
    """Frequency range parameters are out of order or out of bounds."""


class BandMismatch(InputError):
    """Mel band count differs from the fixed model-input band count."""


# -- erb ------------------------------------------------------------------

class DomainError(NumericError):
    """Function argument outside its mathematical domain."""


class InvalidRate(InputError):
    """Sample rate too low for the requested filterbank."""


class EmptyInput(InputError):
    """Aggregation over an empty collection."""


# -- embedding ------------------------------------------------------------

class DegenerateInput(InputError):
    """Too few points (or otherwise unusable data) for the projection."""


# -- classifier -----------------------------------------------------------

class TooFewClasses(InputError):
    """Class-weight computation needs at least two classes."""


class ZeroCount(InputError):
    """A class sample count of zero cannot be inverted into a weight."""


class ShapeMismatch(InputError):
    """Input tensor shape differs from the model contract."""


class EmptyBatch(InputError):
    """Gradient computation over an empty batch."""


class EmptySplit(InputError):
    """A required dataset split contains no samples."""


# -- scoring / survey -----------------------------------------------------

class LabelOrderMismatch(InputError):
    """Probability labels and profile labels disagree."""


class LengthMismatch(InputError):
    """Paired sequences have different lengths."""


class ZeroVariance(NumericError):
    """Correlation of a constant sequence is undefined."""


class EmptySurvey(InputError):
    """Survey table has no participants."""
