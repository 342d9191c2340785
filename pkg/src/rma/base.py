"""
One-sided remote memory contract.

A Universe is a set of P participant-owned byte windows that every participant may
read, write and update atomically without involving the owner. Backends implement
the transport; the coarse window lock is built on top of the atomics here so it
behaves identically on all of them.
"""
import struct
import time
from abc import ABC, abstractmethod
from contextlib import contextmanager
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence

from src.config import settings
from src.core.errors import HandleClosedError, InvalidConfigError, MisalignedError, OutOfBoundsError
from . import locks

WORD = struct.Struct('<Q')
WORD_SIZE = 8
WORD_MASK = 0xFFFFFFFFFFFFFFFF

# Offset 0 of every window holds the window lock word; bucket storage starts after it.
WINDOW_LOCK_OFFSET = 0
WINDOW_HEADER_SIZE = 8


class Backend(str, Enum):
    THREADS = "threads"
    SOCKETS = "sockets"


class LockMode(str, Enum):
    SHARED = "shared"
    EXCLUSIVE = "exclusive"


class OpKind(str, Enum):
    GET = "get"
    PUT = "put"
    CAS = "cas"
    FAA = "faa"


class RemoteOp(NamedTuple):
    """One operation of a batch issued against a single window."""
    kind: OpKind
    offset: int
    length: int = 0
    data: bytes = b''
    expected: int = 0
    operand: int = 0

    @classmethod
    def get(cls, offset, length):
        return cls(OpKind.GET, offset, length=length)

    @classmethod
    def put(cls, offset, data):
        return cls(OpKind.PUT, offset, length=len(data), data=bytes(data))

    @classmethod
    def cas(cls, offset, expected, desired):
        return cls(OpKind.CAS, offset, length=WORD_SIZE, expected=expected, operand=desired)

    @classmethod
    def faa(cls, offset, delta):
        return cls(OpKind.FAA, offset, length=WORD_SIZE, operand=delta)


class Universe(ABC):
    """Participant windows reachable through get/put/cas64/faa64."""

    backend: Backend

    def __init__(self, participants: int, window_size: int, put_granularity: int = 0,
                 backoff_min_us: float = None, backoff_max_us: float = None):
        if participants < 1:
            raise InvalidConfigError("Participant count must be at least 1", f"got {participants}")
        if window_size <= WINDOW_HEADER_SIZE:
            raise InvalidConfigError("Window size must exceed the 8-byte header", f"got {window_size}")
        self._participants = participants
        self._window_size = window_size
        self._put_granularity = max(0, put_granularity or 0)
        self._backoff_range = (
            settings.BACKOFF_MIN_US if backoff_min_us is None else backoff_min_us,
            settings.BACKOFF_MAX_US if backoff_max_us is None else backoff_max_us,
        )
        self._closed = False

    @property
    def participants(self) -> int:
        return self._participants

    @property
    def window_size(self) -> int:
        return self._window_size

    @property
    def closed(self) -> bool:
        return self._closed

    @property
    def backoff_range(self):
        """(min, max) microseconds a lock loop sleeps between attempts on this universe."""
        return self._backoff_range

    # Contract operations

    @abstractmethod
    def remote_get(self, rank: int, offset: int, length: int) -> bytes:
        """Read length bytes from a window. Not atomic across the range."""

    @abstractmethod
    def remote_put(self, rank: int, offset: int, data: bytes) -> None:
        """Write bytes to a window; visible to every participant once this returns."""

    @abstractmethod
    def remote_cas64(self, rank: int, offset: int, expected: int, desired: int) -> int:
        """Atomic compare-and-swap on an aligned 64-bit word; returns the prior value."""

    @abstractmethod
    def remote_faa64(self, rank: int, offset: int, delta: int) -> int:
        """Atomic fetch-and-add (two's complement wrap) on an aligned word; returns the prior value."""

    def remote_batch(self, rank: int, ops: Sequence[RemoteOp]) -> list:
        """
        Apply ops to one window in order and return one result per op.

        Results are bytes for GET, the prior word for CAS and FAA, None for PUT. The
        owner applies the ops in sequence; backends may overlap their round trips.
        """
        return [self._apply(rank, op) for op in ops]

    @abstractmethod
    def barrier(self) -> None:
        """Block until every participant has entered the barrier."""

    @abstractmethod
    def gather(self, rank: int, payload: bytes) -> Optional[List[bytes]]:
        """Collective: deliver every participant's payload, in rank order, to rank 0."""

    @abstractmethod
    def abort(self) -> None:
        """Break pending and future barriers so surviving participants fail fast."""

    @abstractmethod
    def close(self) -> None:
        """Release the windows. Further operations raise HandleClosedError."""

    # Coarse-grained Readers&Writers lock over a whole window

    def window_lock(self, rank: int, mode: LockMode) -> None:
        if LockMode(mode) is LockMode.EXCLUSIVE:
            locks.acquire_write(self, rank, WINDOW_LOCK_OFFSET)
        else:
            locks.acquire_read(self, rank, WINDOW_LOCK_OFFSET)

    def window_unlock(self, rank: int, mode: LockMode) -> None:
        if LockMode(mode) is LockMode.EXCLUSIVE:
            locks.release_write(self, rank, WINDOW_LOCK_OFFSET)
        else:
            locks.release_read(self, rank, WINDOW_LOCK_OFFSET)

    @contextmanager
    def window_locked(self, rank: int, mode: LockMode):
        self.window_lock(rank, mode)
        try:
            yield
        finally:
            self.window_unlock(rank, mode)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.abort()
        self.close()

    # Shared helpers for backends

    def _apply(self, rank, op):
        if op.kind is OpKind.GET:
            return self.remote_get(rank, op.offset, op.length)
        if op.kind is OpKind.PUT:
            self.remote_put(rank, op.offset, op.data)
            return None
        if op.kind is OpKind.CAS:
            return self.remote_cas64(rank, op.offset, op.expected, op.operand)
        return self.remote_faa64(rank, op.offset, op.operand)

    def _check_op(self, rank, op):
        if op.kind is OpKind.GET or op.kind is OpKind.PUT:
            self._check_range(rank, op.offset, op.length)
        else:
            self._check_word(rank, op.offset)

    def _check_open(self) -> None:
        if self._closed:
            raise HandleClosedError("Universe is closed")

    def _check_range(self, rank: int, offset: int, length: int) -> None:
        self._check_open()
        if not 0 <= rank < self._participants:
            raise OutOfBoundsError("Unknown participant rank", f"rank {rank}, P={self._participants}")
        self._check_bounds(offset, length)

    def _check_bounds(self, offset: int, length: int) -> None:
        if offset < 0 or length < 0 or offset + length > self._window_size:
            raise OutOfBoundsError(
                "Access outside the window",
                f"offset {offset} + length {length} > window size {self._window_size}",
            )

    def _check_word(self, rank: int, offset: int) -> None:
        if offset % WORD_SIZE:
            raise MisalignedError("Atomic word must be 8-byte aligned", f"offset {offset}")
        self._check_range(rank, offset, WORD_SIZE)


def store_bytes(window: bytearray, offset: int, data: bytes, granularity: int = 0) -> None:
    """
    Copy data into a window.

    With a granularity the copy is split into chunks and the thread yields between
    them, so concurrent readers can observe a partially applied put.
    """
    if not granularity or len(data) <= granularity:
        window[offset:offset + len(data)] = data
        return
    for start in range(0, len(data), granularity):
        chunk = data[start:start + granularity]
        window[offset + start:offset + start + len(chunk)] = chunk
        time.sleep(0)


def apply_cas(window: bytearray, offset: int, expected: int, desired: int) -> int:
    """Compare-and-swap on a window word. Caller holds the word's atomic lock."""
    (prior,) = WORD.unpack_from(window, offset)
    if prior == expected & WORD_MASK:
        WORD.pack_into(window, offset, desired & WORD_MASK)
    return prior


def apply_faa(window: bytearray, offset: int, delta: int) -> int:
    """Fetch-and-add on a window word. Caller holds the word's atomic lock."""
    (prior,) = WORD.unpack_from(window, offset)
    WORD.pack_into(window, offset, (prior + delta) & WORD_MASK)
    return prior
