"""
Surrogate cache for an expensive per-cell kernel, and the advection demo that uses it.
"""
from .cache import SurrogateCache, cached_simulate, decode_result, encode_result
from .demo import DemoStep, DemoSummary, run_demo
from .kernel import expensive_kernel
from .rounding import make_key, parse_key, round_significant

__all__ = [
    "DemoStep",
    "DemoSummary",
    "SurrogateCache",
    "cached_simulate",
    "decode_result",
    "encode_result",
    "expensive_kernel",
    "make_key",
    "parse_key",
    "round_significant",
]
