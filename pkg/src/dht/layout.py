"""
Byte layout of one table bucket for each consistency protocol.

coarse:   key | value | meta
fine:     lock(8) | key | value | meta | pad to a multiple of 8
lockfree: key | value | checksum(4) | meta

The part after the lock word is the bucket body: it is what a put writes and what
a probe reads. Meta bit 0 marks the bucket occupied, bit 1 marks it invalid.
"""
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from src.rma.base import WINDOW_HEADER_SIZE, WORD_SIZE
from .checksum import checksum32

META_OCCUPIED = 0x01
META_INVALID = 0x02
CHECKSUM = struct.Struct('<I')


class Protocol(str, Enum):
    COARSE = "coarse"
    FINE = "fine"
    LOCKFREE = "lockfree"


@dataclass(frozen=True)
class BucketLayout:
    protocol: Protocol
    key_size: int
    value_size: int
    stride: int
    body_start: int
    body_size: int
    lock_offset: Optional[int] = None
    checksum_offset: Optional[int] = None

    @classmethod
    def for_protocol(cls, protocol, key_size, value_size):
        protocol = Protocol(protocol)
        payload = key_size + value_size
        if protocol is Protocol.COARSE:
            return cls(protocol, key_size, value_size, stride=payload + 1, body_start=0, body_size=payload + 1)
        if protocol is Protocol.FINE:
            unpadded = WORD_SIZE + payload + 1
            stride = -(-unpadded // WORD_SIZE) * WORD_SIZE
            return cls(
                protocol, key_size, value_size, stride=stride,
                body_start=WORD_SIZE, body_size=payload + 1, lock_offset=0,
            )
        body_size = payload + CHECKSUM.size + 1
        return cls(
            protocol, key_size, value_size, stride=body_size,
            body_start=0, body_size=body_size, checksum_offset=payload,
        )

    @property
    def overhead(self) -> int:
        """Bytes per bucket beyond the key-value pair."""
        return self.stride - self.key_size - self.value_size

    @property
    def meta_index(self) -> int:
        """Position of the meta byte within the body."""
        return self.body_size - 1

    def bucket_offset(self, index: int) -> int:
        return WINDOW_HEADER_SIZE + index * self.stride

    def body_offset(self, index: int) -> int:
        return self.bucket_offset(index) + self.body_start

    def meta_offset(self, index: int) -> int:
        return self.body_offset(index) + self.meta_index

    def lock_word(self, index: int) -> int:
        return self.bucket_offset(index) + self.lock_offset

    def encode(self, key: bytes, value: bytes, meta: int = META_OCCUPIED) -> bytes:
        """Body image for a key-value pair; lock-free bodies carry checksum32(key || value)."""
        payload = key + value
        if self.checksum_offset is None:
            return payload + bytes((meta,))
        return payload + CHECKSUM.pack(checksum32(payload)) + bytes((meta,))

    def key_of(self, body: bytes) -> bytes:
        return body[:self.key_size]

    def value_of(self, body: bytes) -> bytes:
        return body[self.key_size:self.key_size + self.value_size]

    def meta_of(self, body: bytes) -> int:
        return body[self.meta_index]

    def checksum_ok(self, body: bytes) -> bool:
        payload_size = self.key_size + self.value_size
        (stored,) = CHECKSUM.unpack_from(body, self.checksum_offset)
        return checksum32(body[:payload_size]) == stored
