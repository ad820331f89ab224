import numpy as np
import pytest
from hypothesis import settings

from streamhp.generators import random_hypergraph, synthetic_hypergraph
from streamhp.ingest import stream_order

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def naive_cut(pins_per_net, part):
    """Pure-Python connectivity-1 cut, independent of the numpy oracle."""
    total = 0
    for pins in pins_per_net:
        parts = {int(part[v]) for v in pins}
        total += max(len(parts) - 1, 0)
    return total


def hg_pin_lists(hg):
    return [list(hg.pins(n)) for n in range(hg.n_nets)]


@pytest.fixture(scope="session")
def small_synthetic():
    """Three ~10^4-pin streams: quick enough for per-step instrumentation."""
    return [stream_order(synthetic_hypergraph(1000, 10_000, seed=s), s) for s in (1, 2, 3)]


@pytest.fixture(scope="session")
def medium_synthetic():
    """Three 10^4-vertex, ~10^5-pin streams with heavy-tailed degrees."""
    return [stream_order(synthetic_hypergraph(10_000, 100_000, seed=s), 100 + s)
            for s in (11, 12, 13)]


@pytest.fixture
def tiny_random():
    return stream_order(random_hypergraph(60, 40, 6, seed=5), 5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
