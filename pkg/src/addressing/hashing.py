"""
Key addressing for the distributed hash table.
Maps a key to the participant holding it and to the ordered bucket indices probed on that participant.
"""
from typing import List, NamedTuple

from src.core.errors import InvalidConfigError

FNV_OFFSET_BASIS = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3
MASK64 = 0xFFFFFFFFFFFFFFFF
HASH_BYTES = 8


class Address(NamedTuple):
    """Target participant and the bucket indices to probe there, in order."""
    rank: int
    indices: List[int]


def hash64(key: bytes) -> int:
    """
    64-bit FNV-1a hash of a key.

    Args:
        key (bytes): The key

    Returns:
        int: Unsigned 64-bit hash, identical on every platform
    """
    h = FNV_OFFSET_BASIS
    for byte in key:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def index_width(buckets: int) -> int:
    """
    Smallest number of bytes n with 2^(8n) >= buckets.

    Args:
        buckets (int): Buckets per window

    Returns:
        int: Index width in bytes, 1..8

    Raises:
        InvalidConfigError: If buckets is not in [1, 2^64]
    """
    if buckets < 1:
        raise InvalidConfigError("Bucket count must be at least 1", f"got {buckets}")
    width = max(1, ((buckets - 1).bit_length() + 7) // 8)
    if width > HASH_BYTES:
        raise InvalidConfigError("Bucket count exceeds the 64-bit hash range", f"got {buckets}")
    return width


def target_rank(h: int, participants: int) -> int:
    """Participant owning a hash: h mod P."""
    if participants < 1:
        raise InvalidConfigError("Participant count must be at least 1", f"got {participants}")
    return h % participants


def candidate_indices(h: int, buckets: int, width: int = None) -> List[int]:
    """
    Slide an n-byte window over the big-endian hash bytes, one byte at a time.

    Args:
        h (int): 64-bit hash
        buckets (int): Buckets per window
        width (int, optional): Precomputed index_width(buckets)

    Returns:
        list: 9 - n bucket indices, each reduced mod buckets
    """
    if width is None:
        width = index_width(buckets)
    raw = h.to_bytes(HASH_BYTES, 'big')
    return [
        int.from_bytes(raw[offset:offset + width], 'big') % buckets
        for offset in range(HASH_BYTES + 1 - width)
    ]


def address_of(key: bytes, participants: int, buckets: int, width: int = None) -> Address:
    """
    Full address of a key.

    Args:
        key (bytes): The key
        participants (int): Participant count P
        buckets (int): Buckets per window B
        width (int, optional): Precomputed index_width(buckets)

    Returns:
        Address: (rank, candidate indices)
    """
    h = hash64(key)
    return Address(target_rank(h, participants), candidate_indices(h, buckets, width))
