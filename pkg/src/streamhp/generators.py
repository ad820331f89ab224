"""Seeded synthetic hypergraphs for tests, demos and benchmarks.

Vertices sit on a ring.  Each net picks a centre and draws most of its pins
from a window around it; the rest come from a heavy-tailed popularity
distribution, which gives a few vertices very large degrees.  Net sizes are
Pareto distributed.  The result has real locality for a partitioner to find
and degree statistics loosely like the sparse matrices streaming
partitioners are usually run on.
"""
import numpy as np

from .ingest import SparseMatrixPattern, column_net


def synthetic_pattern(n_vertices=10_000, n_pins=100_000, alpha=2.5, min_size=4,
                      max_size=None, locality=0.85, width=None, seed=0):
    """Rows are vertices and columns are nets, so ``column_net`` recovers the hypergraph."""
    rng = np.random.default_rng(seed)
    max_size = max_size or max(min_size, n_vertices // 20)
    width = width if width is not None else max(4.0, 2.0 * min_size)
    mean = min_size * (alpha - 1) / (alpha - 2) if alpha > 2 else 3.0 * min_size
    # dedup of colliding pins loses roughly a fifth of the draws
    n_nets = max(1, int(1.25 * n_pins / mean))

    sizes = np.floor(min_size * (1.0 - rng.random(n_nets)) ** (-1.0 / (alpha - 1)))
    sizes = np.minimum(sizes, max_size).astype(np.int64)
    centres = rng.integers(0, n_vertices, n_nets)

    net_of_pin = np.repeat(np.arange(n_nets, dtype=np.int64), sizes)
    local = rng.random(net_of_pin.shape[0]) < locality
    spread = np.maximum(width, 0.5 * sizes)[net_of_pin]
    offsets = np.rint(rng.normal(0.0, 1.0, net_of_pin.shape[0]) * spread).astype(np.int64)
    verts = (centres[net_of_pin] + offsets) % n_vertices

    popularity = rng.pareto(1.2, n_vertices) + 1.0
    popularity /= popularity.sum()
    far = ~local
    verts[far] = rng.choice(n_vertices, size=int(far.sum()), p=popularity)

    coords = np.unique(np.stack([verts, net_of_pin], axis=1), axis=0)
    return SparseMatrixPattern(n_vertices, n_nets, coords)


def synthetic_hypergraph(n_vertices=10_000, n_pins=100_000, seed=0, **kwargs):
    return column_net(synthetic_pattern(n_vertices, n_pins, seed=seed, **kwargs))


def random_hypergraph(n_vertices, n_nets, max_size, seed=0):
    """Unstructured nets of uniform random size and membership (for property tests)."""
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, max_size + 1, n_nets)
    net_of_pin = np.repeat(np.arange(n_nets, dtype=np.int64), sizes)
    verts = rng.integers(0, n_vertices, net_of_pin.shape[0])
    coords = np.unique(np.stack([verts, net_of_pin], axis=1), axis=0)
    return column_net(SparseMatrixPattern(n_vertices, n_nets, coords))
