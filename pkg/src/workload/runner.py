"""
Benchmark phases and the driver that runs them on every participant.

Phases are delimited by universe barriers. Each participant measures its own wall
time; rank 0 gathers the per-participant results and aggregates them as total ops
over the slowest participant's time.
"""
import struct
import time
from typing import List

import numpy as np
from pydantic import TypeAdapter

from src.config import settings
from src.dht import DhtConfig, dht_create, dht_free
from src.processing.parallel_processor import run_participants
from src.utils.logging_utils import get_logger, log_phase
from .generators import expand_key
from .models import BenchResult, Phase, WorkloadKind, WorkloadSpec

logger = get_logger('workload')

SEQUENCE = struct.Struct('>Q')
_RESULT_LIST = TypeAdapter(List[BenchResult])


def make_value(key: bytes, sequence: int, value_size: int) -> bytes:
    """Value embedding the full key and a sequence number, zero padded to value_size."""
    return (key + SEQUENCE.pack(sequence)).ljust(value_size, b'\0')[:value_size]


def value_matches(key: bytes, value: bytes) -> bool:
    """True when the key embedded in value is key."""
    n = min(len(key), len(value))
    return value[:n] == key[:n]


def participant_keys(spec: WorkloadSpec, rank: int, n: int, key_size: int) -> List[bytes]:
    return [expand_key(int(x), key_size) for x in spec.generator(rank).sample(n)]


def _phase_result(handle, spec, phase, ops, seconds, before, wrong_values=0):
    delta = handle.stats().since(before)
    return BenchResult(
        protocol=handle.protocol.value,
        backend=handle.universe.backend.value,
        participants=handle.universe.participants,
        phase=phase,
        distribution=spec.label,
        ops=ops,
        seconds=seconds,
        misses=delta.read_misses,
        mismatches=delta.checksum_mismatch_retries,
        invalidations=delta.invalidations,
        evictions=delta.evictions,
        wrong_values=wrong_values,
        reads=delta.reads,
    )


def run_write_then_read(universe, handle, spec: WorkloadSpec):
    """
    Write spec.count pairs, meet at a barrier, then read the same keys back.

    Args:
        universe (Universe): The universe the table lives in
        handle (DistributedHashTable): This participant's table handle
        spec (WorkloadSpec): Workload, identical on every participant

    Returns:
        tuple: (write BenchResult, read BenchResult) of this participant
    """
    config = handle.config
    keys = participant_keys(spec, handle.rank, spec.count, config.key_size)
    values = [make_value(key, sequence, config.value_size) for sequence, key in enumerate(keys)]

    universe.barrier()
    before = handle.stats()
    start = time.perf_counter()
    for key, value in zip(keys, values):
        handle.write(key, value)
    write = _phase_result(handle, spec, Phase.WRITE, len(keys), time.perf_counter() - start, before)

    universe.barrier()
    before = handle.stats()
    wrong_values = 0
    start = time.perf_counter()
    for key in keys:
        value = handle.read(key)
        if value is not None and not value_matches(key, value):
            wrong_values += 1
    read = _phase_result(handle, spec, Phase.READ, len(keys), time.perf_counter() - start, before, wrong_values)
    return write, read


def run_mixed(universe, handle, spec: WorkloadSpec) -> BenchResult:
    """
    Interleave reads and writes on keys drawn from the distribution; reads with probability read_ratio.

    The table is not preloaded, so early reads may miss.
    """
    config = handle.config
    keys = participant_keys(spec, handle.rank, spec.ops, config.key_size)
    op_rng = np.random.default_rng((spec.participant_seed(handle.rank), 1))
    is_read = op_rng.random(spec.ops) < spec.read_ratio

    universe.barrier()
    before = handle.stats()
    wrong_values = 0
    start = time.perf_counter()
    for sequence, (key, read) in enumerate(zip(keys, is_read)):
        if read:
            value = handle.read(key)
            if value is not None and not value_matches(key, value):
                wrong_values += 1
        else:
            handle.write(key, make_value(key, sequence, config.value_size))
    return _phase_result(handle, spec, Phase.MIXED, len(keys), time.perf_counter() - start, before, wrong_values)


def aggregate_results(results: List[BenchResult]) -> BenchResult:
    """Combine one phase across participants: summed counters, slowest participant's time."""
    first = results[0]
    summed = {
        name: sum(getattr(r, name) for r in results)
        for name in ('ops', 'misses', 'mismatches', 'invalidations', 'evictions', 'wrong_values', 'reads')
    }
    return first.model_copy(update={**summed, 'seconds': max(r.seconds for r in results)})


def median_results(runs: List[List[BenchResult]]) -> List[BenchResult]:
    """Per phase, the run with the median ops/sec."""
    return [
        sorted(phase_runs, key=lambda r: r.ops_per_sec)[len(phase_runs) // 2]
        for phase_runs in zip(*runs)
    ]


def table_config(universe, protocol=None, buckets=None, key_size=None, value_size=None, checksum_retries=None):
    """Table configuration for a universe; buckets default to as many as fit the window."""
    options = {
        'protocol': protocol or settings.PROTOCOL,
        'key_size': key_size or settings.KEY_SIZE,
        'value_size': value_size or settings.VALUE_SIZE,
        'participants': universe.participants,
    }
    if checksum_retries is not None:
        options['checksum_retries'] = checksum_retries
    buckets = buckets or settings.BUCKETS
    if buckets:
        return DhtConfig.create(buckets=buckets, **options)
    return DhtConfig.fit_window(universe.window_size, **options)


def bench_participant(universe, rank, spec: WorkloadSpec, protocol=None, buckets=None,
                      key_size=None, value_size=None, checksum_retries=None):
    """
    One participant's share of a benchmark run. Collective.

    Returns:
        list: Aggregated BenchResults on rank 0, None on the other ranks
    """
    config = table_config(universe, protocol, buckets, key_size, value_size, checksum_retries)
    handle = dht_create(universe, config, rank)
    if spec.kind is WorkloadKind.WRITE_THEN_READ:
        local = list(run_write_then_read(universe, handle, spec))
    else:
        local = [run_mixed(universe, handle, spec)]

    gathered = universe.gather(rank, _RESULT_LIST.dump_json(local))
    dht_free(handle)
    if gathered is None:
        return None
    per_rank = [_RESULT_LIST.validate_json(payload) for payload in gathered]
    return [aggregate_results(list(phase)) for phase in zip(*per_rank)]


def run_benchmark(spec: WorkloadSpec, protocol=None, backend=None, participants=None, buckets=None,
                  window_size=None, key_size=None, value_size=None, checksum_retries=None,
                  repeat=None, universe_options=None) -> List[BenchResult]:
    """
    Run a workload on freshly created universes, repeat times.

    Args:
        spec (WorkloadSpec): The workload
        protocol (str, optional): Consistency protocol. Defaults to settings.PROTOCOL.
        backend (str, optional): 'threads' or 'sockets'. Defaults to settings.BACKEND.
        participants (int, optional): Participant count. Defaults to settings.PARTICIPANTS.
        buckets (int, optional): Buckets per window. Defaults to as many as fit.
        window_size (int, optional): Bytes per window. Defaults to settings.WINDOW_SIZE.
        repeat (int, optional): Number of runs. Defaults to settings.REPEAT.
        universe_options (dict, optional): Extra universe options

    Returns:
        list: One aggregated BenchResult per phase, from the run with the median ops/sec
    """
    repeat = repeat or settings.REPEAT
    runs = []
    for run in range(repeat):
        results = run_participants(
            bench_participant,
            args=(spec, protocol, buckets, key_size, value_size, checksum_retries),
            participants=participants,
            window_size=window_size,
            backend=backend,
            universe_options=universe_options,
        )
        runs.append(results[0])
        for result in results[0]:
            log_phase(result)
        if repeat > 1:
            logger.info(f"Run {run + 1}/{repeat} complete")
    return median_results(runs)
