"""
Shared fixtures for the DHT cache test suite.
"""
import numpy as np
import pytest

from src.dht import DhtConfig, dht_create
from src.rma import ThreadUniverse

KEY_SIZE = 80
VALUE_SIZE = 104


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def universe():
    """Single-participant threads universe with a 4 KiB window."""
    u = ThreadUniverse(1, 4096)
    yield u
    u.close()


@pytest.fixture
def make_table():
    """Factory for a single-participant table with a window sized to fit exactly."""
    universes = []

    def factory(protocol, buckets=64, key_size=KEY_SIZE, value_size=VALUE_SIZE, **universe_options):
        config = DhtConfig.create(
            protocol=protocol, key_size=key_size, value_size=value_size, buckets=buckets, participants=1,
        )
        u = ThreadUniverse(1, config.required_window_size(), **universe_options)
        universes.append(u)
        return u, dht_create(u, config, 0)

    yield factory
    for u in universes:
        u.close()
