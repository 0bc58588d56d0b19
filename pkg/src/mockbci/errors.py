"""Exception types shared across the package."""


class InvalidBandError(ValueError):
    """Filter band edges outside the representable range (0, fs/2)."""


class UnsupportedOrderError(ValueError):
    """Requested filter order cannot be realized (e.g. odd band-pass order)."""


class TooShortError(ValueError):
    """Signal too short for the requested operation."""


class InsufficientChannelsError(ValueError):
    """Operation needs more channels of the requested kind than are present."""


class UnknownChannelError(ValueError):
    """A channel label was not found in the recording."""


class InvalidWindowError(ValueError):
    """Epoch window with tmin >= tmax."""


class InvalidRequestError(ValueError):
    """Request inconsistent with the data (e.g. more components than channels)."""


class LayoutError(ValueError):
    """Channel layout does not match what a fitted object expects."""


class InsufficientDataError(ValueError):
    """Not enough samples per class to fit a model."""


class ValidationError(ValueError):
    """Generic input validation failure."""


class FoldError(ValueError):
    """Cross-validation fold count incompatible with the class counts."""


class CriterionUnavailableError(RuntimeError):
    """A data-driven criterion cannot be evaluated (e.g. no EOG channels)."""


class DecodeError(ValueError):
    """Malformed stream frame bytes."""


class ProtocolError(RuntimeError):
    """Stream protocol violation (out-of-order frames, unexpected kinds)."""
