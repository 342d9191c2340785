import math
import struct

import numpy as np
import pytest

from src.core.errors import InvalidConfigError
from src.processing.parallel_processor import run_participants
from src.surrogate import (
    SurrogateCache,
    cached_simulate,
    decode_result,
    encode_result,
    expensive_kernel,
    make_key,
    parse_key,
    round_significant,
    run_demo,
)
from src.surrogate.demo import advect, partition

BACKGROUND_CELL = (1e-3,) * 9 + (1.0,)


@pytest.mark.parametrize("x, digits, expected", [
    (123.456, 2, 120.0),
    (0.0, 3, 0.0),
    (-0.0012345, 3, -0.00123),
    (2.675, 3, 2.68),
    (-2.5, 1, -3.0),
    (987654.0, 1, 1000000.0),
])
def test_round_significant(x, digits, expected):
    assert round_significant(x, digits) == expected


def test_round_significant_is_idempotent():
    for x in (math.pi, -1e-300, 6.02214076e23, 0.1 + 0.2):
        for digits in (1, 4, 15):
            once = round_significant(x, digits)
            assert round_significant(once, digits) == once


def test_round_significant_rejects_zero_digits():
    with pytest.raises(InvalidConfigError):
        round_significant(1.0, 0)


@pytest.mark.parametrize("digits", [17, 41, 60, 1000])
def test_round_significant_beyond_double_precision_is_identity(digits):
    for x in (math.pi, -1e-300, 6.02214076e23, 0.1 + 0.2, 5e-324):
        assert round_significant(x, digits) == x


def test_round_significant_at_sixteen_digits_still_rounds():
    assert round_significant(0.1 + 0.2, 16) == 0.3


def test_make_key():
    assert make_key((0.0,) * 10, 4) == bytes(80)
    a = make_key((1.00001,) + (0.5,) * 9, 4)
    assert a == make_key((1.00002,) + (0.5,) * 9, 4)
    assert a != make_key((2.0,) + (0.5,) * 9, 4)
    assert parse_key(a)[0] == 1.0
    assert make_key(parse_key(a), 4) == a


def test_make_key_rejects_bad_cells():
    with pytest.raises(InvalidConfigError):
        make_key((-1.0,) + (0.0,) * 9, 4)
    with pytest.raises(InvalidConfigError):
        make_key((float('nan'),) + (0.0,) * 9, 4)


def test_kernel_closed_form_at_zero():
    assert expensive_kernel((0.0,) * 10, cost_us=0) == (0.0,) * 12 + (1.0,)


def test_kernel_is_deterministic_and_keeps_equilibrium():
    cell = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.5)
    result = expensive_kernel(cell, cost_us=0)
    assert result == expensive_kernel(cell, cost_us=0)
    assert len(result) == 13 and all(math.isfinite(v) for v in result)
    assert expensive_kernel(BACKGROUND_CELL, cost_us=0)[:9] == BACKGROUND_CELL[:9]


def test_result_encoding_is_104_bytes():
    result = expensive_kernel(BACKGROUND_CELL, cost_us=0)
    assert len(encode_result(result)) == 104
    assert decode_result(encode_result(result)) == result


def test_cached_simulate_hits_on_repeat(make_table):
    _, h = make_table('lockfree', buckets=256)
    cell = (0.1234567,) * 9 + (1.0,)
    first, hit = cached_simulate(h, cell, 4, cost_us=0)
    assert not hit
    again, hit = cached_simulate(h, cell, 4, cost_us=0)
    assert hit and again == first


def test_cached_simulate_returns_first_exact_result_in_class(make_table):
    _, h = make_table('fine', buckets=256)
    first_cell = (0.12341,) * 9 + (1.0,)
    second_cell = (0.12344,) * 9 + (1.0,)
    first, _ = cached_simulate(h, first_cell, 4, cost_us=0)
    second, hit = cached_simulate(h, second_cell, 4, cost_us=0)
    assert hit
    assert second == first == expensive_kernel(first_cell, cost_us=0)


def test_coarser_rounding_never_hits_less(make_table):
    cells = [(0.1 + 1e-6 * i,) * 9 + (1.0,) for i in range(200)]
    hits = {}
    for digits in (2, 15):
        _, h = make_table('coarse', buckets=1024)
        cache = SurrogateCache(h, digits, cost_us=0)
        for cell in cells:
            cache.simulate(cell)
        hits[digits] = cache.hits
    assert hits[2] >= hits[15]
    assert hits[2] == 199


def test_cache_needs_cell_sized_table(make_table):
    _, h = make_table('lockfree', key_size=16, value_size=16)
    with pytest.raises(InvalidConfigError):
        SurrogateCache(h)


def test_cache_disabled_runs_kernel_every_time():
    cache = SurrogateCache(None, 4, cost_us=0)
    for _ in range(3):
        cache.simulate(BACKGROUND_CELL)
    assert cache.counters() == (0, 3)


def test_partition_covers_grid():
    slices = [partition(10, 4, r) for r in range(4)]
    assert slices == [(0, 3), (3, 6), (6, 8), (8, 10)]


def test_advect_keeps_uniform_state():
    state = np.full((5, 9), 1e-3)
    assert np.array_equal(advect(state, state[0]), state)
    inflow = state[0].copy()
    inflow[0] = 0.1
    moved = advect(state, inflow)
    assert moved[0, 0] == pytest.approx(0.0505)
    assert np.array_equal(moved[1:], state[1:])


def demo(participants, **kwargs):
    options = dict(grid_width=64, steps=5, digits=4, cost_us=0, protocol='lockfree')
    options.update(kwargs)
    results = run_participants(
        run_demo,
        args=tuple(options[k] for k in ('grid_width', 'steps', 'digits', 'cost_us', 'protocol'))
        + (options.get('use_cache', True), options.get('inject', True)),
        participants=participants, window_size=1 << 18, backend='threads',
    )
    return results[0]


def test_homogeneous_grid_hits_everything_after_first_step():
    summary = demo(4, inject=False)
    assert [s.hit_rate for s in summary.step_results[1:]] == [1.0] * 4
    assert summary.kernel_calls == summary.step_results[0].misses


def test_demo_is_deterministic_on_one_participant():
    first, second = demo(1, steps=8), demo(1, steps=8)
    assert [s.hits for s in first.step_results] == [s.hits for s in second.step_results]
    assert first.hits + first.misses == 64 * 8


def test_demo_hit_rate_grows_with_untouched_region():
    summary = demo(2, grid_width=256, steps=10)
    assert summary.step_results[-1].hit_rate > 0.5


def test_uncached_demo_calls_kernel_for_every_cell():
    summary = demo(2, use_cache=False)
    assert summary.hits == 0
    assert summary.kernel_calls == 64 * 5
    assert not summary.cached


def test_demo_summary_line_mentions_hit_rate():
    assert 'hit rate' in demo(1, steps=1).summary_line()


def test_key_packs_little_endian_doubles():
    key = make_key((1.5,) + (0.0,) * 9, 4)
    assert key[:8] == struct.pack('<d', 1.5)


@pytest.mark.slow
def test_cached_demo_beats_uncached():
    cached = demo(8, grid_width=4096, steps=100, cost_us=100)
    uncached = demo(8, grid_width=4096, steps=100, cost_us=100, use_cache=False)
    assert cached.seconds < uncached.seconds
    assert cached.step_results[-1].hit_rate > 0.5
