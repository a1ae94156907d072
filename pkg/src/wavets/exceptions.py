"""Error types raised across the library.

Every exception carries a short machine-parsable ``reason`` tag that the CLI
prints on failure (``config``, ``data``, ``numeric``, ``shape`` or ``depth``).
"""


class WavetsError(Exception):
    """Base class for all library errors."""

    reason = "error"


class InvalidConfigError(WavetsError):
    reason = "config"


class ConfigMismatchError(WavetsError):
    """Parameters were built for a different model configuration."""

    reason = "config"


class ShapeMismatchError(WavetsError):
    reason = "shape"


class OddLengthError(WavetsError):
    """Transform input length must be even."""

    reason = "data"


class FilterTooLongError(WavetsError):
    """Filter has more taps than the signal has samples."""

    reason = "data"


class DepthTooLargeError(WavetsError):
    """Requested decomposition depth does not divide the signal length."""

    reason = "depth"


class NonFiniteInputError(WavetsError):
    reason = "numeric"


class NonFiniteGradientError(WavetsError):
    reason = "numeric"


class DegenerateWindowError(WavetsError):
    """Normalization window too short to compute statistics."""

    reason = "data"


class ZeroGainError(WavetsError):
    """Affine gain too close to zero to invert."""

    reason = "numeric"


class ParseError(WavetsError):
    reason = "data"


class EmptyFileError(WavetsError):
    reason = "data"


class SpecOutOfRangeError(WavetsError):
    """Split boundaries do not fit the series."""

    reason = "data"


class SeriesTooShortError(WavetsError):
    """Series shorter than one lookback+horizon window."""

    reason = "data"


class ReconstructionError(WavetsError):
    """Inverse transform failed to reproduce the input within tolerance."""

    reason = "numeric"
