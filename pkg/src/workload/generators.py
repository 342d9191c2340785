"""
Key streams for the benchmark.

Each participant draws from its own generator seeded with base_seed + rank, so a
fixed (seed, spec, P) yields the same key sequences on every run and backend.
"""
from functools import lru_cache

import numpy as np

from src.core.errors import InvalidConfigError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
BLOCK_SIZE = 4096


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mix."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def expand_key(x: int, key_size: int) -> bytes:
    """
    Derive a key_size-byte key from a 64-bit number.

    Block j is splitmix64(x XOR j * golden gamma) in big-endian order; block 0 alone
    is a bijection of x, so distinct numbers give distinct keys.

    Args:
        x (int): Source number
        key_size (int): Key length K

    Returns:
        bytes: The key
    """
    blocks = -(-key_size // 8)
    raw = b''.join(
        splitmix64(int(x) ^ ((j * GOLDEN_GAMMA) & MASK64)).to_bytes(8, 'big')
        for j in range(blocks)
    )
    return raw[:key_size]


class KeyGenerator:
    """Base for seeded number streams: sample(n) for batches, iteration for a stream."""

    def __init__(self, seed: int):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def sample(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def __iter__(self):
        while True:
            for x in self.sample(BLOCK_SIZE):
                yield int(x)


class UniformGenerator(KeyGenerator):
    """Uniform 64-bit numbers."""

    def sample(self, n):
        return self.rng.integers(0, MASK64, size=n, dtype=np.uint64, endpoint=True)


@lru_cache(maxsize=8)
def zipf_cdf(skew: float, n_range: int) -> np.ndarray:
    """Normalized cumulative distribution of P(k) proportional to k^-skew over 1..n_range."""
    weights = np.arange(1, n_range + 1, dtype=np.float64) ** -skew
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf.setflags(write=False)
    return cdf


def zipf_harmonic(skew: float, n_range: int) -> float:
    """Generalized harmonic number H(n_range, skew), summed directly."""
    return float(np.sum(np.arange(1, n_range + 1, dtype=np.float64) ** -skew))


class ZipfGenerator(KeyGenerator):
    """Integers in [1, n_range] with P(k) = k^-skew / H, sampled by binary search over the CDF."""

    def __init__(self, seed, skew, n_range):
        if n_range < 1:
            raise InvalidConfigError("Zipf range must be at least 1", f"got {n_range}")
        if skew < 0:
            raise InvalidConfigError("Zipf skew must be non-negative", f"got {skew}")
        super().__init__(seed)
        self.skew = float(skew)
        self.n_range = int(n_range)
        self._cdf = zipf_cdf(self.skew, self.n_range)

    def sample(self, n):
        positions = np.searchsorted(self._cdf, self.rng.random(n), side='right')
        return np.minimum(positions, self.n_range - 1).astype(np.uint64) + 1


def gen_uniform(seed: int) -> UniformGenerator:
    return UniformGenerator(seed)


def gen_zipf(seed: int, skew: float, n_range: int) -> ZipfGenerator:
    """
    Zipfian stream over [1, n_range].

    Raises:
        InvalidConfigError: If n_range is 0 or skew is negative
    """
    return ZipfGenerator(seed, skew, n_range)
