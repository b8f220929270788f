"""Error taxonomy shared across the WAIT components.

Every failure that crosses a module or wire boundary carries a stable
``code`` string so that services can map it onto an HTTP status and
clients can branch on it without parsing prose.
"""

from __future__ import annotations


class WaitError(Exception):
    """Base class; ``code`` is the stable machine-readable identifier."""

    code = "ERR_INTERNAL"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class EncodingError(WaitError):
    code = "ERR_ENCODING"


class BadKeyError(WaitError):
    code = "ERR_BAD_KEY"


class HeaderSyntaxError(WaitError):
    code = "ERR_HEADER_SYNTAX"


class StorageError(WaitError):
    code = "ERR_STORAGE"


class RangeError(WaitError):
    code = "ERR_RANGE"


class BadSignatureError(WaitError):
    code = "ERR_BAD_SIGNATURE"


class StaleTimestampError(WaitError):
    code = "ERR_STALE_TIMESTAMP"


class ActivePromiseError(WaitError):
    code = "ERR_ACTIVE_PROMISE"


class UnknownLeafError(WaitError):
    code = "ERR_UNKNOWN_LEAF"


class ParseError(WaitError):
    code = "ERR_PARSE"


class ExternalDynamicError(WaitError):
    code = "ERR_EXTERNAL_DYNAMIC"


class WaitIOError(WaitError):
    code = "ERR_IO"


class SriSyntaxError(WaitError):
    code = "ERR_SRI_SYNTAX"


class UrlError(WaitError):
    code = "ERR_URL"


class NetworkError(WaitError):
    code = "ERR_NETWORK"


class LogRejectedError(WaitError):
    """A log server rejected a request; ``rejection_code`` is the server's code."""

    code = "ERR_LOG_REJECTED"

    def __init__(self, rejection_code: str, message: str = ""):
        super().__init__(message or rejection_code)
        self.rejection_code = rejection_code


class SetupError(WaitError):
    code = "ERR_SETUP"


class UnexpectedVerdictError(WaitError):
    code = "ERR_UNEXPECTED_VERDICT"


class EquivocationError(WaitError):
    code = "ERR_LOG_EQUIVOCATION"


#: Exception class by code, for turning wire-level ErrorResponse payloads
#: back into typed exceptions on the client side.
BY_CODE = {
    cls.code: cls
    for cls in [
        EncodingError, BadKeyError, HeaderSyntaxError, StorageError,
        RangeError, BadSignatureError, StaleTimestampError,
        ActivePromiseError, UnknownLeafError, ParseError,
        ExternalDynamicError, WaitIOError, SriSyntaxError, UrlError,
        NetworkError, SetupError, UnexpectedVerdictError, EquivocationError,
    ]
}
