"""
Per-bucket Readers&Writers locks for the fine-grained protocol.
"""
from contextlib import contextmanager

from src.core.errors import MisalignedError
from src.rma import locks
from src.rma.base import WORD_SIZE


def _check_aligned(lock_offset):
    if lock_offset % WORD_SIZE:
        raise MisalignedError("Bucket lock word must be 8-byte aligned", f"offset {lock_offset}")


def bucket_write_lock(universe, rank, lock_offset):
    """
    Take a bucket lock exclusively, spinning with backoff while readers or a writer hold it.

    Args:
        universe (Universe): The universe holding the window
        rank (int): Owner of the bucket
        lock_offset (int): Window offset of the bucket's lock word

    Returns:
        int: Number of failed attempts before the lock was taken
    """
    _check_aligned(lock_offset)
    return locks.acquire_write(universe, rank, lock_offset)


def bucket_write_unlock(universe, rank, lock_offset):
    _check_aligned(lock_offset)
    locks.release_write(universe, rank, lock_offset)


def bucket_read_lock(universe, rank, lock_offset):
    """
    Register as a reader of a bucket, revoking and retrying while a writer holds it.

    Returns:
        int: Number of revoked attempts
    """
    _check_aligned(lock_offset)
    return locks.acquire_read(universe, rank, lock_offset)


def bucket_read_unlock(universe, rank, lock_offset):
    _check_aligned(lock_offset)
    locks.release_read(universe, rank, lock_offset)


@contextmanager
def bucket_write_locked(universe, rank, lock_offset):
    bucket_write_lock(universe, rank, lock_offset)
    try:
        yield
    finally:
        bucket_write_unlock(universe, rank, lock_offset)


@contextmanager
def bucket_read_locked(universe, rank, lock_offset):
    bucket_read_lock(universe, rank, lock_offset)
    try:
        yield
    finally:
        bucket_read_unlock(universe, rank, lock_offset)
