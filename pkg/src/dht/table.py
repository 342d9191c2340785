"""
Distributed hash table over a universe of remote windows.

Every participant holds one handle. A key lives on participant hash64(key) mod P and
may occupy any of its candidate buckets there; the protocols differ only in how a
probe is made safe against concurrent writers.
"""
from abc import ABC, abstractmethod
from typing import Optional

from src.addressing import address_of
from src.core.errors import CapacityError, HandleClosedError, InvalidConfigError
from src.rma.base import LockMode, RemoteOp, WINDOW_HEADER_SIZE, WINDOW_LOCK_OFFSET
from src.rma.locks import EXCLUSIVE_LOCK_VALUE, Backoff
from src.utils.logging_utils import get_logger, log_table_event
from src.utils.validators import validate_key, validate_value
from .layout import META_INVALID, META_OCCUPIED, Protocol
from .locking import bucket_read_locked, bucket_write_locked
from .models import DhtConfig, DhtStats, WriteOutcome

logger = get_logger('dht.table')

ZERO_CHUNK = 1 << 20


class DistributedHashTable(ABC):
    """One participant's handle on the table."""

    protocol: Protocol

    def __init__(self, universe, config: DhtConfig, rank: int):
        self.universe = universe
        self.config = config
        self.rank = rank
        self.layout = config.layout
        self._width = config.index_width
        self._stats = DhtStats()
        self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def write(self, key, value) -> WriteOutcome:
        self._check_open()
        key = validate_key(key, self.config.key_size)
        value = validate_value(value, self.config.value_size)
        target, indices = address_of(key, self.config.participants, self.config.buckets, self._width)
        outcome = self._write(target, indices, key, value)
        self._stats.writes += 1
        if outcome is WriteOutcome.EVICTED:
            self._stats.evictions += 1
            log_table_event("eviction", self.rank, target, indices[-1])
        return outcome

    def read(self, key) -> Optional[bytes]:
        self._check_open()
        key = validate_key(key, self.config.key_size)
        target, indices = address_of(key, self.config.participants, self.config.buckets, self._width)
        value = self._read(target, indices, key)
        self._stats.reads += 1
        if value is None:
            self._stats.read_misses += 1
        return value

    def stats(self) -> DhtStats:
        return self._stats.model_copy()

    def free(self, release_universe=False):
        if self._closed:
            return
        self.universe.barrier()
        self._closed = True
        if release_universe:
            self.universe.close()

    @abstractmethod
    def _write(self, target, indices, key, value) -> WriteOutcome:
        """Place key/value in one of the candidate buckets of target."""

    @abstractmethod
    def _read(self, target, indices, key) -> Optional[bytes]:
        """Value stored for key on target, or None."""

    def _fetch(self, target, index) -> bytes:
        return self.universe.remote_get(target, self.layout.body_offset(index), self.layout.body_size)

    def _store(self, target, index, key, value):
        self.universe.remote_put(target, self.layout.body_offset(index), self.layout.encode(key, value))

    def _check_open(self):
        if self._closed:
            raise HandleClosedError("Hash table handle has been freed")


class CoarseGrainedDHT(DistributedHashTable):
    """Whole-window Readers&Writers lock around every operation."""

    protocol = Protocol.COARSE

    def _write(self, target, indices, key, value):
        with self.universe.window_locked(target, LockMode.EXCLUSIVE):
            index, outcome = indices[-1], WriteOutcome.EVICTED
            for candidate in indices:
                body = self._fetch(target, candidate)
                if not self.layout.meta_of(body) & META_OCCUPIED:
                    index, outcome = candidate, WriteOutcome.INSERTED
                    break
                if self.layout.key_of(body) == key:
                    index, outcome = candidate, WriteOutcome.UPDATED
                    break
            self._store(target, index, key, value)
        return outcome

    def _read(self, target, indices, key):
        with self.universe.window_locked(target, LockMode.SHARED):
            for candidate in indices:
                body = self._fetch(target, candidate)
                if self.layout.meta_of(body) & META_OCCUPIED and self.layout.key_of(body) == key:
                    return self.layout.value_of(body)
        return None


class FineGrainedDHT(DistributedHashTable):
    """
    Per-bucket Readers&Writers lock; a writer holds one bucket lock at a time.

    A reader registers on, fetches and releases every candidate in a single batch, and
    re-reads under a blocking read lock only the buckets a writer held at the time.
    """

    protocol = Protocol.FINE

    def _write(self, target, indices, key, value):
        last = len(indices) - 1
        for position, candidate in enumerate(indices):
            with bucket_write_locked(self.universe, target, self.layout.lock_word(candidate)):
                body = self._fetch(target, candidate)
                if not self.layout.meta_of(body) & META_OCCUPIED:
                    outcome = WriteOutcome.INSERTED
                elif self.layout.key_of(body) == key:
                    outcome = WriteOutcome.UPDATED
                elif position == last:
                    outcome = WriteOutcome.EVICTED
                else:
                    continue
                self._store(target, candidate, key, value)
                return outcome

    def _read(self, target, indices, key):
        # Register, fetch and release every candidate in one batch; the owner applies it in order
        ops = []
        for candidate in indices:
            lock = self.layout.lock_word(candidate)
            ops += [
                RemoteOp.faa(lock, 1),
                RemoteOp.get(self.layout.body_offset(candidate), self.layout.body_size),
                RemoteOp.faa(lock, -1),
            ]
        results = self.universe.remote_batch(target, ops)
        for position, candidate in enumerate(indices):
            prior, body = results[3 * position], results[3 * position + 1]
            if prior >= EXCLUSIVE_LOCK_VALUE:
                # A writer held the bucket; the batched fetch may be torn
                with bucket_read_locked(self.universe, target, self.layout.lock_word(candidate)):
                    body = self._fetch(target, candidate)
            if self.layout.meta_of(body) & META_OCCUPIED and self.layout.key_of(body) == key:
                return self.layout.value_of(body)
        return None


class LockFreeDHT(DistributedHashTable):
    """
    Lock-free protocol: writers store a CRC-32 of key||value next to the pair, readers verify it.

    A reader that keeps seeing a mismatching checksum after checksum_retries re-reads flags
    the bucket invalid with a single meta-byte put and moves on to the next candidate.
    Invalid and mismatching buckets are free for writers to overwrite.
    """

    protocol = Protocol.LOCKFREE

    def _write(self, target, indices, key, value):
        index, outcome = indices[-1], WriteOutcome.EVICTED
        for candidate in indices:
            body = self._fetch(target, candidate)
            meta = self.layout.meta_of(body)
            if not meta & META_OCCUPIED or meta & META_INVALID:
                index, outcome = candidate, WriteOutcome.INSERTED
                break
            if self.layout.key_of(body) == key:
                index, outcome = candidate, WriteOutcome.UPDATED
                break
            if not self.layout.checksum_ok(body):
                index, outcome = candidate, WriteOutcome.INSERTED
                break
        self._store(target, index, key, value)
        return outcome

    def _read(self, target, indices, key):
        for candidate in indices:
            body = self._verified_fetch(target, candidate)
            if body is not None and self.layout.key_of(body) == key:
                return self.layout.value_of(body)
        return None

    def _verified_fetch(self, target, index):
        """Checksum-consistent occupied body of a bucket, or None."""
        retries = 0
        backoff = Backoff(*self.universe.backoff_range)
        while True:
            body = self._fetch(target, index)
            meta = self.layout.meta_of(body)
            if not meta & META_OCCUPIED or meta & META_INVALID:
                return None
            if self.layout.checksum_ok(body):
                return body
            if retries == self.config.checksum_retries:
                break
            retries += 1
            self._stats.checksum_mismatch_retries += 1
            backoff.wait()

        self.universe.remote_put(target, self.layout.meta_offset(index), bytes((meta | META_INVALID,)))
        self._stats.invalidations += 1
        log_table_event("invalidation", self.rank, target, index, f"{retries} mismatching re-reads")
        return None


PROTOCOLS = {
    Protocol.COARSE: CoarseGrainedDHT,
    Protocol.FINE: FineGrainedDHT,
    Protocol.LOCKFREE: LockFreeDHT,
}


def dht_create(universe, config: DhtConfig, rank: int = None) -> DistributedHashTable:
    """
    Collectively create the table: every participant zeroes its own window, then all meet at a barrier.

    Args:
        universe (Universe): Universe whose windows hold the buckets
        config (DhtConfig): Table configuration, identical on every participant
        rank (int, optional): This participant's rank. Defaults to universe.rank (sockets backend).

    Returns:
        DistributedHashTable: This participant's handle

    Raises:
        InvalidConfigError: If the configuration does not match the universe
        CapacityError: If the buckets do not fit the window
    """
    if rank is None:
        rank = getattr(universe, 'rank', None)
        if rank is None:
            raise InvalidConfigError("A participant rank is required for this universe")
    if config.participants != universe.participants:
        raise InvalidConfigError(
            "Table participant count differs from the universe",
            f"config P={config.participants}, universe P={universe.participants}",
        )
    required = config.required_window_size()
    if required > universe.window_size:
        raise CapacityError(
            "Buckets do not fit the window",
            f"{config.buckets} x {config.layout.stride} B + {WINDOW_HEADER_SIZE} B header "
            f"= {required} B > {universe.window_size} B",
        )

    for start in range(WINDOW_LOCK_OFFSET, required, ZERO_CHUNK):
        universe.remote_put(rank, start, bytes(min(ZERO_CHUNK, required - start)))
    universe.barrier()

    logger.debug(
        f"Participant {rank} created {config.protocol.value} table: "
        f"{config.buckets} buckets of {config.layout.stride} B"
    )
    return PROTOCOLS[config.protocol](universe, config, rank)


def dht_write(handle: DistributedHashTable, key, value) -> WriteOutcome:
    return handle.write(key, value)


def dht_read(handle: DistributedHashTable, key) -> Optional[bytes]:
    """Value stored for key, or None on a miss."""
    return handle.read(key)


def dht_free(handle: DistributedHashTable, release_universe=False) -> None:
    """
    Collectively end the table. Freeing twice is a no-op.

    The windows stay allocated unless release_universe is set: the universe is owned by
    its creator and may be shared by every participant (threads backend) or host a new
    table after this one. A later dht_create on the same universe zeroes them again.

    Args:
        handle (DistributedHashTable): This participant's handle
        release_universe (bool): Also close the universe and release its windows
    """
    handle.free(release_universe)


def dht_stats(handle: DistributedHashTable) -> DhtStats:
    return handle.stats()
