"""
One-sided remote memory access: the Universe contract and its backends.
"""
from src.config import settings
from src.core.errors import InvalidConfigError
from .base import WINDOW_HEADER_SIZE, WINDOW_LOCK_OFFSET, Backend, LockMode, Universe
from .locks import EXCLUSIVE_LOCK_VALUE
from .sockets import SocketUniverse
from .threads import ThreadUniverse


def universe_create(participants=None, window_size=None, backend=None, listen=None, connect=None, rank=None, **kwargs):
    """
    Create a universe of zero-initialized windows.

    Args:
        participants (int, optional): Participant count P. Defaults to settings.PARTICIPANTS.
        window_size (int, optional): Bytes per window. Defaults to settings.WINDOW_SIZE.
        backend (str, optional): 'threads' or 'sockets'. Defaults to settings.BACKEND.
        listen (tuple, optional): Sockets only: (host, port) for rank 0 to serve on
        connect (tuple, optional): Sockets only: (host, port) of rank 0 to join
        rank (int, optional): Sockets only: rank to request when joining
        **kwargs: Backend options (put_granularity, loopback_local, timeouts, backoff_min_us, backoff_max_us)

    Returns:
        Universe: The threads universe (shared by all participant threads) or this
        process's view of a sockets universe
    """
    participants = settings.PARTICIPANTS if participants is None else participants
    window_size = settings.WINDOW_SIZE if window_size is None else window_size
    try:
        backend = Backend(backend or settings.BACKEND)
    except ValueError as e:
        raise InvalidConfigError("Unknown backend", str(backend)) from e

    if backend is Backend.THREADS:
        if listen or connect:
            raise InvalidConfigError("listen/connect apply to the sockets backend only")
        return ThreadUniverse(participants, window_size, **kwargs)

    if connect:
        return SocketUniverse.connect(connect, participants, window_size, rank=rank, **kwargs)
    if participants > 1 and not listen:
        raise InvalidConfigError("A multi-participant sockets universe needs listen or connect")
    return SocketUniverse.listen(listen or (settings.SOCKET_HOST, 0), participants, window_size, **kwargs)


__all__ = [
    "Backend",
    "EXCLUSIVE_LOCK_VALUE",
    "LockMode",
    "SocketUniverse",
    "ThreadUniverse",
    "Universe",
    "WINDOW_HEADER_SIZE",
    "WINDOW_LOCK_OFFSET",
    "universe_create",
]
