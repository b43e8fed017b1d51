"""Exception hierarchy shared across the package."""


class EspressoError(Exception):
    """Base class for all package errors."""


class ParamError(EspressoError):
    """Invalid or unverifiable group parameters."""


class ParamGenerationTimeout(ParamError):
    """Prime search exceeded its iteration bound."""


class DecodeError(EspressoError):
    """Malformed serialized value (element, frame, or message)."""

    def __init__(self, message: str, code: str = "decode-error"):
        super().__init__(message)
        self.code = code


class ProtocolAbort(EspressoError):
    """A party aborted the protocol (locally or reported by the peer)."""

    def __init__(self, message: str, code: str = "abort"):
        super().__init__(message)
        self.code = code


class TransportError(EspressoError):
    """Transport-level failure (timeout, broken channel)."""


class IndeterminateMatch(EspressoError):
    """Iris comparison produced no usable rotation (c1 = 0 everywhere)."""
