"""
Benchmark workloads: key streams, phases and the benchmark driver.
"""
from .generators import expand_key, gen_uniform, gen_zipf, splitmix64
from .models import BenchResult, Distribution, Phase, WorkloadKind, WorkloadSpec
from .runner import (
    aggregate_results,
    bench_participant,
    make_value,
    median_results,
    run_benchmark,
    run_mixed,
    run_write_then_read,
)

__all__ = [
    "BenchResult",
    "Distribution",
    "Phase",
    "WorkloadKind",
    "WorkloadSpec",
    "aggregate_results",
    "bench_participant",
    "expand_key",
    "gen_uniform",
    "gen_zipf",
    "make_value",
    "median_results",
    "run_benchmark",
    "run_mixed",
    "run_write_then_read",
    "splitmix64",
]
