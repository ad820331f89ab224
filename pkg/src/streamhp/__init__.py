"""Streaming hypergraph partitioning under the connectivity-1 metric."""
from .core import (Hypergraph, InvariantError, NetConnectivity, PartitionState,
                   StreamElement, assign, boundary_vertices, connectivity_cutsize,
                   dynamic_slack, eligible, entry_count, imbalance, read_partition,
                   write_partition)
from .ingest import (SparseMatrixPattern, StreamFile, column_net, parse_matrix,
                     read_matrix, stream_order)
from .partitioners import ALGORITHMS, PartitionerConfig, RunResult, run
from .refine import STRATEGIES, RefineConfig, run_refined
from .sketch import BloomFilter, MinHashFamily, bf_fpp, minhash_part

__version__ = "0.1.0"
