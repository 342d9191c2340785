"""
Distributed hash table with coarse-grained, fine-grained and lock-free consistency protocols.
"""
from .checksum import checksum32
from .layout import META_INVALID, META_OCCUPIED, BucketLayout, Protocol
from .locking import (
    bucket_read_lock,
    bucket_read_unlock,
    bucket_write_lock,
    bucket_write_unlock,
)
from .models import DhtConfig, DhtStats, WriteOutcome
from .table import (
    CoarseGrainedDHT,
    DistributedHashTable,
    FineGrainedDHT,
    LockFreeDHT,
    dht_create,
    dht_free,
    dht_read,
    dht_stats,
    dht_write,
)

__all__ = [
    "BucketLayout",
    "CoarseGrainedDHT",
    "DhtConfig",
    "DhtStats",
    "DistributedHashTable",
    "FineGrainedDHT",
    "LockFreeDHT",
    "META_INVALID",
    "META_OCCUPIED",
    "Protocol",
    "WriteOutcome",
    "bucket_read_lock",
    "bucket_read_unlock",
    "bucket_write_lock",
    "bucket_write_unlock",
    "checksum32",
    "dht_create",
    "dht_free",
    "dht_read",
    "dht_stats",
    "dht_write",
]
