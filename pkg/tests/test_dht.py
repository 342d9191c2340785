import gc
import threading

import numpy as np
import psutil
import pytest

from src.addressing import address_of
from src.config import settings
from src.core.errors import CapacityError, HandleClosedError, InvalidConfigError, SizeMismatchError
from src.dht import (
    META_INVALID,
    META_OCCUPIED,
    BucketLayout,
    DhtConfig,
    WriteOutcome,
    checksum32,
    dht_create,
    dht_free,
    dht_read,
    dht_stats,
    dht_write,
)
from src.processing.parallel_processor import run_participants
from src.rma import EXCLUSIVE_LOCK_VALUE, ThreadUniverse
from src.rma.locks import Backoff
from tests.helpers import OracleTable, random_bytes, replay_against_oracle

PROTOCOLS = ['coarse', 'fine', 'lockfree']


def test_checksum32_reference_values():
    assert checksum32(b"") == 0
    assert checksum32(b"123456789") == 0xCBF43926
    data = bytearray(b"key-value pair")
    before = checksum32(bytes(data))
    data[3] ^= 0x10
    assert checksum32(bytes(data)) != before


def test_bucket_strides_and_overheads():
    coarse = BucketLayout.for_protocol('coarse', 80, 104)
    fine = BucketLayout.for_protocol('fine', 80, 104)
    lockfree = BucketLayout.for_protocol('lockfree', 80, 104)
    assert (coarse.stride, fine.stride, lockfree.stride) == (185, 200, 189)
    assert coarse.overhead == 1
    assert fine.overhead - coarse.overhead <= 15
    assert lockfree.overhead == 5


@pytest.mark.parametrize("key_size, value_size", [(80, 104), (1, 1), (13, 7), (64, 64)])
def test_fine_buckets_start_on_word_boundaries(key_size, value_size):
    layout = BucketLayout.for_protocol('fine', key_size, value_size)
    assert layout.stride % 8 == 0
    assert 0 <= layout.stride - (8 + key_size + value_size + 1) <= 7
    assert all(layout.lock_word(i) % 8 == 0 for i in range(10))


def test_lockfree_body_carries_checksum():
    layout = BucketLayout.for_protocol('lockfree', 4, 4)
    body = layout.encode(b'kkkk', b'vvvv')
    assert layout.checksum_ok(body)
    assert layout.meta_of(body) == META_OCCUPIED
    assert not layout.checksum_ok(body[:5] + b'X' + body[6:])


def test_create_zeroes_all_buckets():
    config = DhtConfig.create(protocol='coarse', buckets=16, participants=1)
    u = ThreadUniverse(1, config.required_window_size())
    u.remote_put(0, 0, b'\xff' * config.required_window_size())
    handle = dht_create(u, config, 0)
    layout = config.layout
    assert all(u.remote_get(0, layout.meta_offset(i), 1) == b'\x00' for i in range(16))
    dht_free(handle, release_universe=True)
    assert u.closed


def test_create_rejects_window_overflow():
    config = DhtConfig.create(protocol='lockfree', buckets=100, participants=1)
    u = ThreadUniverse(1, config.required_window_size() - 1)
    with pytest.raises(CapacityError):
        dht_create(u, config, 0)
    u.close()


def test_create_rejects_participant_mismatch():
    config = DhtConfig.create(protocol='fine', buckets=4, participants=2)
    u = ThreadUniverse(1, 4096)
    with pytest.raises(InvalidConfigError):
        dht_create(u, config, 0)
    u.close()


def test_invalid_config_values():
    with pytest.raises(InvalidConfigError):
        DhtConfig.create(protocol='optimistic', buckets=4, participants=1)
    with pytest.raises(InvalidConfigError):
        DhtConfig.create(protocol='fine', buckets=0, participants=1)


def test_fit_window_fills_the_window():
    config = DhtConfig.fit_window(8 + 189 * 10 + 100, protocol='lockfree', participants=1)
    assert config.buckets == 10
    with pytest.raises(InvalidConfigError):
        DhtConfig.fit_window(100, protocol='lockfree', participants=1)


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_write_read_update(make_table, protocol):
    _, h = make_table(protocol)
    k1 = b'k' * 80
    assert dht_read(h, k1) is None
    assert dht_write(h, k1, b'1' * 104) is WriteOutcome.INSERTED
    assert dht_read(h, k1) == b'1' * 104
    assert dht_write(h, k1, b'2' * 104) is WriteOutcome.UPDATED
    assert dht_read(h, k1) == b'2' * 104
    stats = dht_stats(h)
    assert (stats.writes, stats.reads, stats.read_misses) == (2, 3, 1)
    assert stats.checksum_mismatch_retries == 0


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_size_mismatch(make_table, protocol):
    _, h = make_table(protocol)
    with pytest.raises(SizeMismatchError):
        dht_write(h, b'short', b'v' * 104)
    with pytest.raises(SizeMismatchError):
        dht_write(h, b'k' * 80, b'v' * 103)
    with pytest.raises(SizeMismatchError):
        dht_read(h, b'k' * 81)


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_fresh_stats_are_zero(make_table, protocol):
    _, h = make_table(protocol)
    assert all(value == 0 for value in dht_stats(h).model_dump().values())


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_sequential_operations_match_oracle(make_table, protocol):
    _, h = make_table(protocol, buckets=256)
    assert replay_against_oracle(h, 1, 10_000, seed=7) == 0
    assert dht_stats(h).evictions > 0
    assert dht_stats(h).checksum_mismatch_retries == 0


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_full_candidates_evict_last_index(make_table, protocol, rng):
    _, h = make_table(protocol, buckets=4)
    oracle = OracleTable(1, 4)
    evictions = 0
    while len(oracle.slots) < 4:
        key, value = random_bytes(rng, 80), random_bytes(rng, 104)
        outcome = oracle.write(key, value)
        evictions += outcome is WriteOutcome.EVICTED
        assert h.write(key, value) is outcome

    newcomer, value = random_bytes(rng, 80), random_bytes(rng, 104)
    _, indices = address_of(newcomer, 1, 4)
    victim = oracle.slots[(0, indices[-1])][0]
    assert h.write(newcomer, value) is WriteOutcome.EVICTED
    assert h.read(victim) is None
    assert h.read(newcomer) == value
    assert dht_stats(h).evictions == evictions + 1


def bucket_of(handle, key):
    _, indices = address_of(key, 1, handle.config.buckets)
    layout = handle.layout
    for index in indices:
        body = handle.universe.remote_get(0, layout.body_offset(index), layout.body_size)
        if layout.meta_of(body) & META_OCCUPIED and layout.key_of(body) == key:
            return index
    raise AssertionError("key not resident")


def test_corrupted_value_is_invalidated(make_table):
    u, h = make_table('lockfree')
    key = b'c' * 80
    h.write(key, b'v' * 104)
    index = bucket_of(h, key)
    u.remote_put(0, h.layout.body_offset(index) + 80, b'X')

    assert dht_read(h, key) is None
    stats = dht_stats(h)
    assert stats.checksum_mismatch_retries == 3
    assert stats.invalidations == 1
    assert u.remote_get(0, h.layout.meta_offset(index), 1)[0] & META_INVALID

    assert h.write(key, b'w' * 104) is WriteOutcome.INSERTED
    assert h.read(key) == b'w' * 104


def test_interleaved_bucket_images_are_never_returned(make_table):
    u, h = make_table('lockfree')
    key = b't' * 80
    h.write(key, b'a' * 104)
    index = bucket_of(h, key)
    first = h.layout.encode(key, b'a' * 104)
    second = h.layout.encode(key, b'b' * 104)
    torn = bytes(x if i % 2 else y for i, (x, y) in enumerate(zip(first, second)))
    u.remote_put(0, h.layout.body_offset(index), torn)

    assert h.read(key) is None
    assert dht_stats(h).invalidations == 1
    assert dht_stats(h).checksum_mismatch_retries == 3


@pytest.mark.parametrize("retries", [0, 5])
def test_checksum_retries_are_configurable(retries):
    config = DhtConfig.create(protocol='lockfree', buckets=8, participants=1, checksum_retries=retries)
    u = ThreadUniverse(1, config.required_window_size())
    h = dht_create(u, config, 0)
    key = b'r' * 80
    h.write(key, b'v' * 104)
    u.remote_put(0, h.layout.body_offset(bucket_of(h, key)), b'\x00')
    assert h.read(key) is None
    assert dht_stats(h).checksum_mismatch_retries == retries
    dht_free(h, release_universe=True)


def test_mismatching_rereads_back_off(make_table, monkeypatch):
    waits = []
    monkeypatch.setattr(Backoff, 'wait', lambda self: waits.append(self.max_us))
    u, h = make_table('lockfree')
    key = b'b' * 80
    h.write(key, b'v' * 104)
    u.remote_put(0, h.layout.body_offset(bucket_of(h, key)) + 90, b'X')
    assert h.read(key) is None
    assert waits == [settings.BACKOFF_MAX_US] * 3


def test_fine_read_releases_every_candidate_lock(make_table, rng):
    u, h = make_table('fine', buckets=32)
    keys = [random_bytes(rng, 80) for _ in range(20)]
    for key in keys:
        h.write(key, key[:104].ljust(104, b'\x00'))
    for key in keys + [random_bytes(rng, 80)]:
        h.read(key)
    assert all(u.remote_get(0, h.layout.lock_word(i), 8) == bytes(8) for i in range(32))


def test_fine_read_waits_out_a_writer_held_bucket(make_table):
    u, h = make_table('fine')
    key = b'w' * 80
    h.write(key, b'v' * 104)
    lock = h.layout.lock_word(bucket_of(h, key))
    assert u.remote_cas64(0, lock, 0, EXCLUSIVE_LOCK_VALUE) == 0
    release = threading.Timer(0.05, u.remote_faa64, args=(0, lock, -EXCLUSIVE_LOCK_VALUE))
    release.start()
    assert h.read(key) == b'v' * 104
    release.join()
    assert u.remote_get(0, lock, 8) == bytes(8)


def test_free_keeps_windows_for_the_next_table():
    config = DhtConfig.create(protocol='coarse', buckets=16, participants=1)
    u = ThreadUniverse(1, config.required_window_size())
    h = dht_create(u, config, 0)
    h.write(b'k' * 80, b'v' * 104)
    dht_free(h)
    assert not u.closed
    again = dht_create(u, config, 0)
    assert again.read(b'k' * 80) is None
    dht_free(again, release_universe=True)
    assert u.closed


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_free_is_idempotent_and_final(make_table, protocol):
    _, h = make_table(protocol)
    dht_free(h)
    dht_free(h)
    with pytest.raises(HandleClosedError):
        dht_write(h, b'k' * 80, b'v' * 104)
    with pytest.raises(HandleClosedError):
        dht_read(h, b'k' * 80)


def test_create_free_cycles_do_not_leak():
    process = psutil.Process()
    config = DhtConfig.create(protocol='fine', buckets=4096, participants=1)

    def cycle():
        u = ThreadUniverse(1, config.required_window_size())
        dht_free(dht_create(u, config, 0), release_universe=True)

    for _ in range(10):
        cycle()
    gc.collect()
    baseline = process.memory_info().rss
    for _ in range(100):
        cycle()
    gc.collect()
    assert process.memory_info().rss - baseline < 16 * 1024 * 1024


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_written_keys_are_readable_everywhere_after_barrier(protocol):
    def participant(universe, rank):
        config = DhtConfig.create(protocol=protocol, buckets=4096, participants=universe.participants)
        handle = dht_create(universe, config, rank)
        pairs = {}
        for p in range(universe.participants):
            other = np.random.default_rng(100 + p)
            for _ in range(200):
                pairs[random_bytes(other, 80)] = (p, random_bytes(other, 104))
        for key, (owner, value) in pairs.items():
            if owner == rank:
                handle.write(key, value)
        universe.barrier()
        missing = sum(handle.read(key) != value for key, (_, value) in pairs.items())
        evictions = dht_stats(handle).evictions
        dht_free(handle)
        return missing, evictions

    results = run_participants(participant, participants=4, window_size=1 << 20, backend='threads')
    assert sum(e for _, e in results) == 0
    assert [m for m, _ in results] == [0, 0, 0, 0]
