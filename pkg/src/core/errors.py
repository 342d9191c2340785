"""
Error handling for the DHT cache library.
Provides the exception hierarchy shared by the remote-memory layer, the table and the CLIs.
"""
from typing import Any, Dict, Optional


class DhtError(Exception):
    """Base exception for all library errors."""

    code = "DHT_ERROR"

    def __init__(self, message: str, details: Optional[str] = None):
        self.error_code = self.code
        self.error_message = message
        self.error_details = details
        super().__init__(message if details is None else f"{message} ({details})")


class InvalidConfigError(DhtError):
    """Exception for invalid table, universe or workload configuration."""

    code = "INVALID_CONFIG"


class CapacityError(DhtError):
    """Exception for a table that does not fit its window."""

    code = "CAPACITY"


class SizeMismatchError(DhtError):
    """Exception for keys or values of the wrong length."""

    code = "SIZE_MISMATCH"


class OutOfBoundsError(DhtError):
    """Exception for remote accesses outside a window or to an unknown rank."""

    code = "OUT_OF_BOUNDS"


class MisalignedError(DhtError):
    """Exception for atomics on a word that is not 8-byte aligned."""

    code = "MISALIGNED"


class TransportError(DhtError):
    """Exception for socket failures and broken barriers."""

    code = "TRANSPORT"


class HandleClosedError(DhtError):
    """Exception for operations on a freed table or a closed universe."""

    code = "CLOSED"


def create_error_response(exception: Exception) -> Dict[str, Any]:
    """
    Create an error response from an exception.

    Args:
        exception (Exception): The exception

    Returns:
        dict: The error response
    """
    if isinstance(exception, DhtError):
        error = {
            "code": exception.error_code,
            "message": exception.error_message,
            "details": exception.error_details,
        }
    else:
        error = {
            "code": "INTERNAL_ERROR",
            "message": "An internal error occurred",
            "details": str(exception),
        }
    return {"status": "error", "error": error}
