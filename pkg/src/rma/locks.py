"""
Readers&Writers lock on a single 64-bit window word, driven only by remote atomics.

The word holds EXCLUSIVE_LOCK_VALUE while a writer is active and the number of
registered readers otherwise. A reader that registers while a writer holds the word
revokes its registration and retries, so the word may transiently exceed
EXCLUSIVE_LOCK_VALUE by the pending registrations.
"""
import time

from src.config import settings

EXCLUSIVE_LOCK_VALUE = 0x10000000


class Backoff:
    """Exponential sleep between lock attempts, doubling up to a cap."""

    def __init__(self, min_us=None, max_us=None):
        self.min_us = settings.BACKOFF_MIN_US if min_us is None else min_us
        self.max_us = settings.BACKOFF_MAX_US if max_us is None else max_us
        self._delay_us = self.min_us
        self.attempts = 0

    def wait(self):
        self.attempts += 1
        time.sleep(self._delay_us / 1_000_000)
        self._delay_us = min(self._delay_us * 2, self.max_us)


def acquire_write(universe, rank, offset):
    """
    Acquire the word exclusively: cas(0 -> EXCLUSIVE_LOCK_VALUE) until it succeeds.

    Returns:
        int: Number of failed attempts
    """
    backoff = Backoff(*universe.backoff_range)
    while universe.remote_cas64(rank, offset, 0, EXCLUSIVE_LOCK_VALUE) != 0:
        backoff.wait()
    return backoff.attempts


def release_write(universe, rank, offset):
    universe.remote_faa64(rank, offset, -EXCLUSIVE_LOCK_VALUE)


def acquire_read(universe, rank, offset):
    """
    Register as a reader: faa(+1), revoking with faa(-1) while a writer is active.

    Returns:
        int: Number of revoked attempts
    """
    backoff = Backoff(*universe.backoff_range)
    while True:
        prior = universe.remote_faa64(rank, offset, 1)
        if prior < EXCLUSIVE_LOCK_VALUE:
            return backoff.attempts
        universe.remote_faa64(rank, offset, -1)
        backoff.wait()


def release_read(universe, rank, offset):
    universe.remote_faa64(rank, offset, -1)
