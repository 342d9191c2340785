"""
Validators module for the DHT cache library.
Provides functions for validating keys, values and simulation inputs before they reach remote memory.
"""
import math

from src.config import settings
from src.core.errors import InvalidConfigError, SizeMismatchError


def validate_key(key, key_size):
    """
    Validate a key against the configured key size.

    Args:
        key (bytes): The key
        key_size (int): Expected length in bytes

    Returns:
        bytes: The key as an immutable byte string

    Raises:
        SizeMismatchError: If the key has the wrong length
    """
    if not isinstance(key, (bytes, bytearray, memoryview)):
        raise SizeMismatchError("Key must be a byte string", f"got {type(key).__name__}")
    if len(key) != key_size:
        raise SizeMismatchError("Key has the wrong size", f"expected {key_size} bytes, got {len(key)}")
    return bytes(key)


def validate_value(value, value_size):
    """
    Validate a value against the configured value size.

    Args:
        value (bytes): The value
        value_size (int): Expected length in bytes

    Returns:
        bytes: The value as an immutable byte string

    Raises:
        SizeMismatchError: If the value has the wrong length
    """
    if not isinstance(value, (bytes, bytearray, memoryview)):
        raise SizeMismatchError("Value must be a byte string", f"got {type(value).__name__}")
    if len(value) != value_size:
        raise SizeMismatchError("Value has the wrong size", f"expected {value_size} bytes, got {len(value)}")
    return bytes(value)


def validate_positive(name, value):
    """Raise InvalidConfigError unless value is a positive integer."""
    if not isinstance(value, int) or value < 1:
        raise InvalidConfigError(f"{name} must be a positive integer", f"got {value!r}")
    return value


def validate_cell_input(cell, width=10):
    """
    Validate a surrogate cell input: finite doubles, non-negative concentrations.

    Args:
        cell (sequence of float): 9 concentrations followed by the time step
        width (int): Expected number of values

    Returns:
        tuple: The input as a tuple of floats
    """
    values = tuple(float(v) for v in cell)
    if len(values) != width:
        raise SizeMismatchError("Cell input has the wrong width", f"expected {width} values, got {len(values)}")
    for v in values:
        if not math.isfinite(v):
            raise InvalidConfigError("Cell input values must be finite", f"got {v!r}")
    if any(v < 0.0 for v in values[:-1]):
        raise InvalidConfigError("Concentrations must be non-negative")
    return values


def parse_address(text):
    """
    Parse a 'host:port' address.

    Args:
        text (str): Address; an empty host means the default socket host

    Returns:
        tuple: (host, port)
    """
    host, sep, port = str(text).rpartition(':')
    if not sep or not port.isdigit() or not 0 <= int(port) < 65536:
        raise InvalidConfigError("Address must look like host:port", f"got {text!r}")
    return host or settings.SOCKET_HOST, int(port)


def parse_participants(text):
    """
    Parse a participant count or a comma-separated list of counts, e.g. '1,2,4,8'.

    Returns:
        list: Positive participant counts in the given order
    """
    parts = [part.strip() for part in str(text).split(',')]
    if not all(part.isdigit() and int(part) > 0 for part in parts):
        raise InvalidConfigError("Participants must be positive integers separated by commas", f"got {text!r}")
    return [int(part) for part in parts]
