"""MINMAX and MINMAX-N2P make the same decisions at very different cost.

MINMAX keeps, for every part, the set of nets it touches, and scores all K
parts for every vertex.  MINMAX-N2P keeps, for every net, the parts it
touches, and only scores parts that share a net with the vertex.  Both
break ties the same way, so their part vectors are byte-identical.

    python3 demos/equivalence_and_speed.py
"""
from streamhp import PartitionerConfig, run, stream_order
from streamhp.generators import synthetic_hypergraph

hg = synthetic_hypergraph(50_000, 500_000, seed=5)
stream = stream_order(hg, seed=9)

# warm up the compiled kernels so timings measure partitioning only
run(PartitionerConfig("minmax", K=4), stream)
run(PartitionerConfig("minmax-n2p", K=4), stream)

print(f"{'K':>5} {'minmax s':>9} {'n2p s':>7} {'speedup':>8}  identical")
for K in (16, 128, 1024):
    a = run(PartitionerConfig("minmax", K=K), stream)
    b = run(PartitionerConfig("minmax-n2p", K=K), stream)
    same = a.part.tobytes() == b.part.tobytes()
    print(f"{K:5d} {a.wall_seconds:9.3f} {b.wall_seconds:7.3f} "
          f"{a.wall_seconds / b.wall_seconds:7.1f}x  {same}")

# Memory is where they differ too: one entry per (net, part) pair that
# actually occurs, and that count is always cut + nets seen.
b = run(PartitionerConfig("minmax-n2p", K=1024), stream)
print(f"entries {b.entries} = cut {b.cut} + nets seen {b.nets_seen}")
