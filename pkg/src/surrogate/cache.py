"""
Surrogate cache: kernel results stored in the distributed hash table under rounded inputs.
"""
import struct

from src.config import settings
from src.core.errors import InvalidConfigError
from .kernel import RESULT_WIDTH, expensive_kernel
from .rounding import CELL_INPUT, make_key

CELL_RESULT = struct.Struct(f'<{RESULT_WIDTH}d')


def encode_result(result) -> bytes:
    return CELL_RESULT.pack(*result)


def decode_result(value: bytes):
    return CELL_RESULT.unpack(value)


def check_table_shape(handle):
    """Raise unless the table stores 80-byte cell keys and 104-byte results."""
    config = handle.config
    if config.key_size != CELL_INPUT.size or config.value_size != CELL_RESULT.size:
        raise InvalidConfigError(
            "Surrogate cache needs 80-byte keys and 104-byte values",
            f"table has K={config.key_size}, V={config.value_size}",
        )


def cached_simulate(handle, cell, digits=None, cost_us=None):
    """
    Look a cell up in the table; on a miss run the kernel and store its exact result.

    Args:
        handle (DistributedHashTable): Table handle with 80-byte keys and 104-byte values
        cell (sequence of float): 9 concentrations followed by the time step
        digits (int, optional): Significant digits of the key. Defaults to settings.DIGITS.
        cost_us (float, optional): Kernel cost. Defaults to settings.KERNEL_COST_US.

    Returns:
        tuple: (13-float result, hit flag)
    """
    digits = digits or settings.DIGITS
    key = make_key(cell, digits)
    stored = handle.read(key)
    if stored is not None:
        return decode_result(stored), True
    result = expensive_kernel(cell, cost_us)
    handle.write(key, encode_result(result))
    return result, False


class SurrogateCache:
    """Per-participant front end counting hits; without a table every call runs the kernel."""

    def __init__(self, handle=None, digits=None, cost_us=None):
        if handle is not None:
            check_table_shape(handle)
        self.handle = handle
        self.digits = digits or settings.DIGITS
        self.cost_us = settings.KERNEL_COST_US if cost_us is None else cost_us
        self.hits = 0
        self.misses = 0

    def simulate(self, cell):
        if self.handle is None:
            result, hit = expensive_kernel(cell, self.cost_us), False
        else:
            result, hit = cached_simulate(self.handle, cell, self.digits, self.cost_us)
        if hit:
            self.hits += 1
        else:
            self.misses += 1
        return result

    @property
    def kernel_calls(self) -> int:
        return self.misses

    def counters(self):
        return self.hits, self.misses
