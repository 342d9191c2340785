import numpy as np
import pytest

from src.core.errors import InvalidConfigError
from src.workload import (
    BenchResult,
    WorkloadKind,
    WorkloadSpec,
    aggregate_results,
    expand_key,
    gen_uniform,
    gen_zipf,
    make_value,
    median_results,
    run_benchmark,
)
from src.workload.generators import zipf_harmonic
from src.workload.runner import value_matches


def test_uniform_stream_is_deterministic_per_seed():
    assert np.array_equal(gen_uniform(3).sample(100), gen_uniform(3).sample(100))
    assert not np.array_equal(gen_uniform(0).sample(100), gen_uniform(1).sample(100))


def test_uniform_stream_iterates_as_python_ints():
    stream = iter(gen_uniform(3))
    first = [next(stream) for _ in range(5)]
    assert first == [int(x) for x in gen_uniform(3).sample(5)]
    assert all(0 <= x < 1 << 64 for x in first)


def test_uniform_histogram_is_flat():
    draws = gen_uniform(42).sample(1_000_000)
    counts = np.bincount((draws >> np.uint64(56)).astype(np.int64), minlength=256)
    assert counts.max() / counts.min() < 1.2


def test_zipf_with_zero_skew_is_uniform():
    draws = gen_zipf(1, 0.0, 10).sample(100_000)
    counts = np.bincount(draws.astype(np.int64), minlength=11)[1:]
    assert draws.min() == 1 and draws.max() == 10
    assert counts.max() / counts.min() < 1.1


def test_zipf_range_of_one_is_constant():
    assert set(gen_zipf(1, 0.99, 1).sample(1000).tolist()) == {1}


def test_zipf_rejects_empty_range():
    with pytest.raises(InvalidConfigError):
        gen_zipf(1, 0.99, 0)


def test_zipf_head_frequency_small_range():
    draws = gen_zipf(7, 0.99, 1000).sample(1_000_000)
    expected = 1.0 / zipf_harmonic(0.99, 1000)
    assert abs(np.mean(draws == 1) - expected) / expected < 0.05


@pytest.mark.slow
def test_zipf_head_frequency_full_range():
    draws = gen_zipf(7, 0.99, 712_500).sample(10_000_000)
    expected = 1.0 / zipf_harmonic(0.99, 712_500)
    assert abs(np.mean(draws == 1) - expected) / expected < 0.05


def test_expand_key():
    assert expand_key(5, 80) == expand_key(5, 80)
    assert all(len(expand_key(x, size)) == size for x in (0, 1, 1 << 63) for size in (1, 8, 13, 80))
    a, b = expand_key(0, 80), expand_key(1, 80)
    assert all(a[i:i + 8] != b[i:i + 8] for i in range(0, 80, 8))
    assert expand_key(9, 80)[:13] == expand_key(9, 13)


def test_values_embed_their_key():
    key = expand_key(3, 80)
    value = make_value(key, 17, 104)
    assert len(value) == 104
    assert value_matches(key, value)
    assert not value_matches(expand_key(4, 80), value)


def test_spec_validation():
    with pytest.raises(InvalidConfigError):
        WorkloadSpec.create(read_ratio=1.5)
    with pytest.raises(InvalidConfigError):
        WorkloadSpec.create(count=0)
    assert WorkloadSpec.create(distribution='zipf', zipf_skew=0.99, zipf_range=712_500).label == 'zipf(0.99,712500)'


def result(ops, seconds, phase='write', **counters):
    return BenchResult(protocol='fine', backend='threads', participants=2, phase=phase,
                       distribution='uniform', ops=ops, seconds=seconds, **counters)


def test_aggregate_uses_slowest_participant():
    combined = aggregate_results([result(100, 2.0, misses=1), result(300, 4.0, misses=2)])
    assert combined.ops == 400
    assert combined.seconds == 4.0
    assert combined.misses == 3
    assert combined.ops_per_sec == 100.0


def test_median_picks_middle_run_per_phase():
    runs = [[result(100, s, 'write'), result(100, 1.0, 'read')] for s in (1.0, 2.0, 4.0)]
    write, read = median_results(runs)
    assert write.seconds == 2.0
    assert read.seconds == 1.0


@pytest.mark.parametrize("protocol", ['coarse', 'fine', 'lockfree'])
def test_write_then_read_single_participant(protocol):
    spec = WorkloadSpec.create(kind=WorkloadKind.WRITE_THEN_READ, distribution='uniform', count=1000, seed=2)
    write, read = run_benchmark(spec, protocol=protocol, backend='threads', participants=1, window_size=1 << 22)
    assert (write.phase.value, read.phase.value) == ('write', 'read')
    assert write.ops == read.ops == 1000
    assert read.misses == 0
    assert read.mismatches == 0
    assert write.evictions == 0


def test_mixed_counts_all_operations():
    spec = WorkloadSpec.create(kind=WorkloadKind.MIXED, distribution='uniform', ops=2000, read_ratio=1.0, seed=2)
    [mixed] = run_benchmark(spec, protocol='lockfree', backend='threads', participants=3, window_size=1 << 18)
    assert mixed.ops == 6000
    assert mixed.reads == 6000
    assert mixed.misses == 6000


def test_repeat_returns_one_result_per_phase():
    spec = WorkloadSpec.create(kind=WorkloadKind.WRITE_THEN_READ, count=200, seed=2)
    results = run_benchmark(spec, protocol='fine', backend='threads', participants=2, window_size=1 << 20, repeat=3)
    assert [r.phase.value for r in results] == ['write', 'read']
