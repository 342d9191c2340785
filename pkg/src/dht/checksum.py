"""
Checksum used by the lock-free protocol to detect torn bucket images.
"""
import zlib


def checksum32(data) -> int:
    """
    CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320) of data.

    Args:
        data (bytes): Key followed by value

    Returns:
        int: Unsigned 32-bit checksum
    """
    return zlib.crc32(data) & 0xffffffff
