"""
Test helpers: a sequential model of the table and participant functions for spawned processes.

Participant functions live at module level so they pickle under the spawn start method.
"""
import numpy as np

from src.addressing import address_of
from src.dht import DhtConfig, WriteOutcome, dht_create, dht_free
from src.rma import WINDOW_HEADER_SIZE

KEY_SIZE = 80
VALUE_SIZE = 104


class OracleTable:
    """Shadow map applying the probe and eviction rules sequentially."""

    def __init__(self, participants, buckets):
        self.participants = participants
        self.buckets = buckets
        self.slots = {}

    def write(self, key, value):
        rank, indices = address_of(key, self.participants, self.buckets)
        for index in indices:
            resident = self.slots.get((rank, index))
            if resident is None:
                self.slots[(rank, index)] = (key, value)
                return WriteOutcome.INSERTED
            if resident[0] == key:
                self.slots[(rank, index)] = (key, value)
                return WriteOutcome.UPDATED
        self.slots[(rank, indices[-1])] = (key, value)
        return WriteOutcome.EVICTED

    def read(self, key):
        rank, indices = address_of(key, self.participants, self.buckets)
        for index in indices:
            resident = self.slots.get((rank, index))
            if resident is not None and resident[0] == key:
                return resident[1]
        return None


def random_bytes(rng, size):
    return rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()


def replay_against_oracle(handle, participants, ops, seed, key_pool=None):
    """
    Apply random writes, updates and reads to handle and to an oracle.

    Returns:
        int: Number of results that differ from the oracle
    """
    rng = np.random.default_rng(seed)
    oracle = OracleTable(participants, handle.config.buckets)
    pool = [random_bytes(rng, handle.config.key_size) for _ in range(key_pool or ops // 4)]
    differences = 0
    for _ in range(ops):
        key = pool[int(rng.integers(len(pool)))]
        if rng.random() < 0.5:
            value = random_bytes(rng, handle.config.value_size)
            if handle.write(key, value) is not oracle.write(key, value):
                differences += 1
        elif handle.read(key) != oracle.read(key):
            differences += 1
    return differences


def oracle_participant(universe, rank, protocol, buckets, ops, seed):
    """Rank 0 replays random operations against the oracle; the others only join the collectives."""
    config = DhtConfig.create(
        protocol=protocol, key_size=KEY_SIZE, value_size=VALUE_SIZE,
        buckets=buckets, participants=universe.participants,
    )
    handle = dht_create(universe, config, rank)
    differences = replay_against_oracle(handle, universe.participants, ops, seed) if rank == 0 else 0
    dht_free(handle)
    return differences


def put_get_participant(universe, rank):
    """Every rank writes a pattern into its right neighbour's window, then reads its own."""
    target = (rank + 1) % universe.participants
    pattern = bytes([rank + 1]) * 16
    universe.remote_put(target, WINDOW_HEADER_SIZE, pattern)
    universe.barrier()
    source = (rank - 1) % universe.participants
    return universe.remote_get(rank, WINDOW_HEADER_SIZE, 16) == bytes([source + 1]) * 16


def faa_participant(universe, rank, increments):
    for _ in range(increments):
        universe.remote_faa64(0, WINDOW_HEADER_SIZE, 1)
    universe.barrier()
    return universe.remote_get(0, WINDOW_HEADER_SIZE, 8)


def failing_participant(universe, rank):
    if rank == 1:
        raise RuntimeError("participant failure")
    universe.barrier()
    return rank
