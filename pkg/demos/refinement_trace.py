"""Buffered refinement and what each flush does.

Vertices are partitioned by MINMAX-N2P as they arrive and also kept in a
buffer.  When the buffer is full, every buffered vertex is revisited a few
times and moved if another part shares more of its nets.

    python3 demos/refinement_trace.py
"""
from streamhp import PartitionerConfig, RefineConfig, run, run_refined, stream_order
from streamhp.generators import synthetic_hypergraph

K = 64
hg = synthetic_hypergraph(20_000, 200_000, seed=8)
stream = stream_order(hg, seed=1)
cfg = PartitionerConfig(K=K)

base = run(PartitionerConfig("minmax-n2p", K=K), stream).cut
print(f"minmax-n2p cut: {base}")

for strategy in ("ref", "ref-rlx", "ref-rlx-sv"):
    for passes in (1, 4):
        r = run_refined(cfg, RefineConfig(strategy, passes=passes), stream)
        print(f"{strategy:>10} passes={passes}: cut {r.cut:6d} "
              f"({100 * (base - r.cut) / base:+.1f}% better), {len(r.flushes)} flushes")

# Each flush record shows the cut before and after sweeping the buffer.
r = run_refined(cfg, RefineConfig("ref-rlx", passes=4, theta=0.1), stream)
print("\nstream_position  cut_before  cut_after  moves")
for rec in r.flushes:
    print(f"{rec['stream_position']:15d} {rec['cut_before']:11d} {rec['cut_after']:10d} "
          f"{rec['moves']:6d}")
