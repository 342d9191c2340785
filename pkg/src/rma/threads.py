"""
In-process threaded backend: every window is a bytearray shared by the participant threads.
"""
import threading
from typing import List, Optional

from src.config import settings
from src.core.errors import TransportError
from .base import Backend, Universe, apply_cas, apply_faa, store_bytes

ATOMIC_STRIPES = 64


class ThreadUniverse(Universe):
    """P windows in one process; one participant per thread."""

    backend = Backend.THREADS

    def __init__(self, participants, window_size, put_granularity=None, barrier_timeout=None,
                 backoff_min_us=None, backoff_max_us=None):
        if put_granularity is None:
            put_granularity = settings.PUT_GRANULARITY
        super().__init__(participants, window_size, put_granularity, backoff_min_us, backoff_max_us)
        self._windows = [bytearray(window_size) for _ in range(participants)]
        self._views = [memoryview(window) for window in self._windows]
        # Atomics on a word serialize on one of a fixed set of locks per window
        self._atomic_locks = [
            [threading.Lock() for _ in range(ATOMIC_STRIPES)] for _ in range(participants)
        ]
        self._barrier_timeout = barrier_timeout or settings.BARRIER_TIMEOUT
        self._barrier = threading.Barrier(participants, timeout=self._barrier_timeout)
        self._mailbox: List[Optional[bytes]] = [None] * participants

    def remote_get(self, rank, offset, length):
        self._check_range(rank, offset, length)
        return self._views[rank][offset:offset + length].tobytes()

    def remote_put(self, rank, offset, data):
        self._check_range(rank, offset, len(data))
        store_bytes(self._windows[rank], offset, data, self._put_granularity)

    def remote_cas64(self, rank, offset, expected, desired):
        self._check_word(rank, offset)
        with self._atomic_lock(rank, offset):
            return apply_cas(self._windows[rank], offset, expected, desired)

    def remote_faa64(self, rank, offset, delta):
        self._check_word(rank, offset)
        with self._atomic_lock(rank, offset):
            return apply_faa(self._windows[rank], offset, delta)

    def barrier(self):
        self._check_open()
        try:
            self._barrier.wait()
        except threading.BrokenBarrierError as e:
            raise TransportError("Barrier broken", "a participant failed or timed out") from e

    def gather(self, rank, payload):
        self._check_range(rank, 0, 0)
        self._mailbox[rank] = bytes(payload)
        self.barrier()
        collected = list(self._mailbox) if rank == 0 else None
        # Keep the mailbox stable until rank 0 has copied it
        self.barrier()
        return collected

    def abort(self):
        self._barrier.abort()

    def close(self):
        if self._closed:
            return
        self._closed = True
        self._views = []
        self._windows = []

    def _atomic_lock(self, rank, offset):
        return self._atomic_locks[rank][(offset >> 3) % ATOMIC_STRIPES]
