"""
Significant-digit rounding of simulation inputs, used to build surrogate cache keys.
"""
import math
import struct
from decimal import ROUND_HALF_UP, Decimal, localcontext

from src.core.errors import InvalidConfigError
from src.utils.validators import validate_cell_input

CELL_INPUT = struct.Struct('<10d')
DECIMAL_PRECISION = 40
# A double never carries more significant decimal digits than this
MAX_DOUBLE_DIGITS = 17


def round_significant(x: float, digits: int) -> float:
    """
    Round x to digits significant decimal digits, ties away from zero.

    Rounding works on the shortest decimal representation of x, so 2.675 rounds
    to 2.68 at three digits. Zero (of either sign) maps to 0.0; non-finite values
    and any x at MAX_DOUBLE_DIGITS or more digits are returned unchanged.

    Args:
        x (float): Value to round
        digits (int): Significant digits, at least 1

    Returns:
        float: The rounded value; rounding it again returns it unchanged
    """
    if digits < 1:
        raise InvalidConfigError("Significant digits must be at least 1", f"got {digits}")
    if x == 0:
        return 0.0
    if not math.isfinite(x) or digits >= MAX_DOUBLE_DIGITS:
        return float(x)
    value = Decimal(repr(float(x)))
    with localcontext() as ctx:
        ctx.prec = DECIMAL_PRECISION
        quantum = Decimal(1).scaleb(value.adjusted() - digits + 1)
        return float(value.quantize(quantum, rounding=ROUND_HALF_UP))


def make_key(cell, digits: int) -> bytes:
    """
    Cache key of a cell input: each of the 10 doubles rounded, packed little-endian.

    Args:
        cell (sequence of float): 9 concentrations followed by the time step
        digits (int): Significant digits

    Returns:
        bytes: 80-byte key
    """
    values = validate_cell_input(cell, CELL_INPUT.size // 8)
    return CELL_INPUT.pack(*(round_significant(v, digits) for v in values))


def parse_key(key: bytes):
    return CELL_INPUT.unpack(key)
