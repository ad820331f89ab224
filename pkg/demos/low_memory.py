"""Trading cut quality for a fixed memory budget.

MINMAX-L keeps at most ell parts per net, MINMAX-BF replaces the exact
(net, part) sets with a Bloom filter of fixed size, and MINMAX-MH keeps no
connectivity at all and hashes each vertex's nets straight to a part.

    python3 demos/low_memory.py
"""
from streamhp import PartitionerConfig, bf_fpp, run, stream_order
from streamhp.generators import synthetic_hypergraph

K = 64
hg = synthetic_hypergraph(30_000, 300_000, seed=2)
stream = stream_order(hg, seed=4)

configs = [
    PartitionerConfig("random", K=K),
    PartitionerConfig("minmax-mh", K=K, mh_hashes=1),
    PartitionerConfig("minmax-mh", K=K, mh_hashes=2),
    PartitionerConfig("minmax-l", K=K, ell=1),
    PartitionerConfig("minmax-l", K=K, ell=3),
    PartitionerConfig("minmax-l", K=K, ell=8),
    PartitionerConfig("minmax-bf", K=K, bf_bits=1 << 18),
    PartitionerConfig("minmax-bf", K=K, bf_bits=1 << 22),
    PartitionerConfig("minmax-n2p", K=K),
]

print(f"{'algorithm':<11} {'param':>10} {'cut':>8} {'aux ints':>9}")
for cfg in configs:
    r = run(cfg, stream)
    param = {"minmax-l": cfg.ell, "minmax-bf": cfg.bf_bits,
             "minmax-mh": cfg.mh_hashes}.get(cfg.algorithm, "")
    print(f"{cfg.algorithm:<11} {param!s:>10} {r.cut:8d} {r.aux_ints:9d}")

# How full the small filter gets: exact entries stand in for inserted tuples.
n = run(PartitionerConfig("minmax-n2p", K=K), stream).entries
for bits in (1 << 18, 1 << 22):
    print(f"{bits} bits, {n} tuples: expected false-positive rate {bf_fpp(4, n, bits):.3f}")
