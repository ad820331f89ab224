import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from streamhp.core import (Hypergraph, InvariantError, NetConnectivity, PartitionState,
                           StreamElement, assign, connectivity_cutsize)
from streamhp.generators import random_hypergraph
from streamhp.ingest import stream_from_elements, stream_order
from streamhp.partitioners import PartitionerConfig, run
from streamhp.refine import (STRATEGIES, RefineBuffer, RefineConfig, is_bufferable,
                             is_moveable, leave_gain, refine_flush, remove_vertex,
                             run_refined)


def counted(pairs):
    """Counted connectivity from (net, part) pin pairs."""
    conn = NetConnectivity(counted=True)
    for n, p in pairs:
        conn.add(n, p)
    return conn


def build(elements, parts, K=2, beta=2.0):
    """State and counted connectivity with each element placed as given."""
    state = PartitionState(K, beta=beta)
    conn = NetConnectivity(counted=True)
    for (v, nets), p in zip(elements, parts):
        assign(state, conn, StreamElement(v, nets), p, check=False)
    return state, conn


# ------------------------------------------------------------ leave gain

def test_leave_gain_mixed_nets():
    conn = counted([(1, 0), (1, 1), (2, 0), (2, 0), (2, 0)])
    assert leave_gain(conn, StreamElement(0, (1, 2)), 0) == 1


def test_leave_gain_internal_nets():
    conn = counted([(1, 0), (1, 0), (2, 0)])
    assert leave_gain(conn, StreamElement(0, (1, 2)), 0) == 0


def test_leave_gain_three_way_net():
    conn = counted([(1, 0), (1, 1), (1, 2)])
    assert leave_gain(conn, StreamElement(0, (1,)), 0) == 1


def test_leave_gain_missing_count_fails_fast():
    conn = counted([(1, 1)])
    with pytest.raises(InvariantError):
        leave_gain(conn, StreamElement(0, (1,)), 0)
    with pytest.raises(InvariantError):
        leave_gain(NetConnectivity(), StreamElement(0, (1,)), 0)


# ------------------------------------------------------------ policies

def test_is_bufferable():
    e12 = StreamElement(0, tuple(range(12)))
    e8 = StreamElement(0, tuple(range(8)))
    assert is_bufferable("ref", e12)
    assert is_bufferable("ref-rlx", e12)
    assert not is_bufferable("ref-rlx-sv", e12, 8)
    assert is_bufferable("ref-rlx-sv", e8, 8)
    assert not is_bufferable("ref", StreamElement(0, ()))


def test_is_moveable():
    assert not is_moveable("ref", 0)
    assert is_moveable("ref", 2)
    assert is_moveable("ref-rlx", 0)
    assert is_moveable("ref-rlx-sv", 0)


def test_buffer_load_accounting():
    buf = RefineBuffer(5)
    assert buf.insert(StreamElement(0, (1, 2, 3)))
    assert not buf.insert(StreamElement(1, (4, 5, 6)))
    assert buf.insert(StreamElement(2, (7, 8)))
    assert buf.load == 5 and buf.is_full() and len(buf) == 2
    buf.clear()
    assert buf.load == 0 and len(buf) == 0


def test_config_capacity_and_validation():
    assert RefineConfig(theta=0.15).capacity(1000) == 150
    assert RefineConfig(buffer_pins=40).capacity(1000) == 40
    for bad in (RefineConfig("nope"), RefineConfig(passes=0), RefineConfig(theta=0.0),
                RefineConfig(theta=1.5), RefineConfig(buffer_pins=-1)):
        with pytest.raises(ValueError):
            bad.validate()


# ------------------------------------------------------------ remove_vertex

def test_remove_last_pin_drops_part():
    state, conn = build([(0, (1,)), (1, (1,))], [0, 1])
    remove_vertex(state, conn, StreamElement(0, (1,)))
    assert conn.parts(1) == {1}
    assert conn.connectivity(1) == 1
    assert state.part[0] == -1 and list(state.weights) == [0, 1]
    assert state.p_min == 0


def test_remove_one_of_many_pins():
    elems = [(v, (1,)) for v in range(4)]
    state, conn = build(elems, [0, 0, 0, 0], beta=100.0)
    remove_vertex(state, conn, StreamElement(0, (1,)))
    assert conn.count(1, 0) == 3 and conn.parts(1) == {0}


def test_remove_then_reassign_round_trip():
    elems = [(0, (1, 2)), (1, (2, 3)), (2, (1, 3)), (3, (3,))]
    state, conn = build(elems, [0, 1, 1, 0])
    before = (state.weights.copy(), state.part.copy(), state.p_min,
              {n: (conn.parts(n), [conn.count(n, p) for p in range(2)]) for n in (1, 2, 3)},
              conn.cut, conn.entry_count())
    e = StreamElement(*elems[1])
    remove_vertex(state, conn, e)
    assign(state, conn, e, 1, check=False)
    after = (state.weights.copy(), state.part.copy(), state.p_min,
             {n: (conn.parts(n), [conn.count(n, p) for p in range(2)]) for n in (1, 2, 3)},
             conn.cut, conn.entry_count())
    assert (before[0] == after[0]).all() and (before[1] == after[1]).all()
    assert before[2:] == after[2:]


def test_remove_unassigned_fails():
    state, conn = build([(0, (1,))], [0])
    with pytest.raises(InvariantError):
        remove_vertex(state, conn, StreamElement(5, (1,)))


# ------------------------------------------------------------ refine_flush

def test_ref_with_zero_gains_moves_nothing():
    elems = [(0, (1,)), (1, (1,)), (2, (2,)), (3, (2,))]
    state, conn = build(elems, [0, 0, 1, 1])
    buf = RefineBuffer(10)
    for v, nets in elems:
        buf.insert(StreamElement(v, nets))
    part = state.part.copy()
    rec = refine_flush(state, conn, buf, RefineConfig("ref", passes=2))
    assert rec["moves"] == 0 and (state.part == part).all()
    assert len(buf) == 0


def test_self_move_keeps_cut():
    elems = [(0, (1,)), (1, (1,)), (2, (2,))]
    state, conn = build(elems, [0, 0, 1])
    buf = RefineBuffer(10)
    buf.insert(StreamElement(0, (1,)))
    rec = refine_flush(state, conn, buf, RefineConfig("ref-rlx", passes=1))
    assert state.part[0] == 0
    assert rec["cut_before"] == rec["cut_after"] == 0


def test_boundary_vertex_moves_and_cut_drops():
    # u=0 sits alone in part 0 on net 7 whose other pins are in part 1
    elems = [(0, (7,)), (1, (8,)), (2, (7,)), (3, (7,))]
    state, conn = build(elems, [0, 0, 1, 1])
    hg = Hypergraph.from_nets([[], [], [], [], [], [], [], [0, 2, 3], [1]], n_vertices=4)
    assert connectivity_cutsize(hg, state.part) == 1
    assert leave_gain(conn, StreamElement(0, (7,)), 0) == 1
    buf = RefineBuffer(10)
    buf.insert(StreamElement(0, (7,)))
    rec = refine_flush(state, conn, buf, RefineConfig("ref", passes=1), trace_hg=hg, check=True)
    assert state.part[0] == 1
    assert connectivity_cutsize(hg, state.part) == 0 == rec["cut_after"]
    assert rec["move_cuts"] == [0]


def test_move_blocked_by_balance():
    # same instance with a tight slack: the move would leave weights [1, 3]
    elems = [(0, (7,)), (1, (8,)), (2, (7,)), (3, (7,))]
    state, conn = build(elems, [0, 0, 1, 1], beta=0.1)
    buf = RefineBuffer(10)
    buf.insert(StreamElement(0, (7,)))
    refine_flush(state, conn, buf, RefineConfig("ref", passes=1), check=True)
    assert state.part[0] == 0


# ------------------------------------------------------------ run_refined

def test_zero_buffer_reproduces_n2p(small_synthetic):
    for stream in small_synthetic:
        plain = run(PartitionerConfig("minmax-n2p", K=16), stream)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = run_refined(PartitionerConfig(K=16), RefineConfig("ref-rlx", theta=1e-9), stream)
        assert ref.part.tobytes() == plain.part.tobytes()
        assert ref.flushes == []


def test_small_buffer_warns_about_big_vertices(small_synthetic):
    with pytest.warns(UserWarning, match="were not buffered"):
        run_refined(PartitionerConfig(K=8), RefineConfig("ref", buffer_pins=3), small_synthetic[0])


@pytest.mark.parametrize("strategy", STRATEGIES)
@pytest.mark.parametrize("passes", [2, 4, 8])
def test_per_move_cuts_never_increase(small_synthetic, strategy, passes):
    stream = small_synthetic[0]
    r = run_refined(PartitionerConfig(K=16), RefineConfig(strategy, passes=passes),
                    stream, check=True, trace=True)
    assert r.flushes
    for rec in r.flushes:
        cuts = [rec["cut_before"]] + rec["move_cuts"]
        assert all(b <= a for a, b in zip(cuts, cuts[1:]))
        assert cuts[-1] == rec["cut_after"]


@given(st.integers(0, 10**6), st.sampled_from(STRATEGIES), st.integers(2, 6),
       st.sampled_from([0.05, 0.2, 0.5]), st.integers(1, 3))
def test_refinement_properties_on_random_hypergraphs(seed, strategy, K, theta, passes):
    stream = stream_order(random_hypergraph(50, 40, 6, seed=seed), seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = run_refined(PartitionerConfig(K=K, beta=0.2), RefineConfig(strategy, passes, theta),
                        stream, check=True, trace=True)
    for rec in r.flushes:
        cuts = [rec["cut_before"]] + rec["move_cuts"]
        assert all(b <= a for a, b in zip(cuts, cuts[1:]))
    assert r.cut == connectivity_cutsize(Hypergraph.from_stream(stream), r.part)
    assert r.entries == r.cut + r.nets_seen


def test_flush_records_have_documented_fields(small_synthetic):
    r = run_refined(PartitionerConfig(K=8), RefineConfig("ref"), small_synthetic[1])
    assert r.flushes
    for rec in r.flushes:
        assert set(rec) == {"stream_position", "cut_before", "cut_after", "moves", "pass_count"}
        assert rec["cut_after"] <= rec["cut_before"]
    positions = [rec["stream_position"] for rec in r.flushes]
    assert positions == sorted(positions) and positions[-1] == len(small_synthetic[1])


def test_fast_and_instrumented_runs_agree(small_synthetic):
    cfg, rcfg = PartitionerConfig(K=32), RefineConfig("ref-rlx-sv", passes=3)
    a = run_refined(cfg, rcfg, small_synthetic[2])
    b = run_refined(cfg, rcfg, small_synthetic[2], check=True)
    assert a.part.tobytes() == b.part.tobytes()
    assert a.flushes == b.flushes


def test_sv_threshold_limits_buffered_degree():
    # threshold 1: only the degree-1 vertices may be refined
    elems = [(0, (0, 1)), (1, (0,)), (2, (1,)), (3, (0, 1)), (4, (2,)), (5, (2,))]
    stream = stream_from_elements(elems)
    r = run_refined(PartitionerConfig(K=2, beta=2.0),
                    RefineConfig("ref-rlx-sv", passes=1, buffer_pins=100, sv_threshold=1), stream)
    assert r.flushes and r.flushes[-1]["stream_position"] == 6


def test_refinement_memory_counts_one_integer_per_entry(small_synthetic):
    r = run_refined(PartitionerConfig(K=16), RefineConfig(), small_synthetic[0])
    B = RefineConfig().capacity(small_synthetic[0].n_pins)
    assert r.aux_ints == 2 * r.peak_entries + B


def test_more_passes_do_not_hurt_much(small_synthetic):
    wins = 0
    for stream in small_synthetic:
        c2 = run_refined(PartitionerConfig(K=32), RefineConfig("ref-rlx", passes=2), stream).cut
        c8 = run_refined(PartitionerConfig(K=32), RefineConfig("ref-rlx", passes=8), stream).cut
        wins += c8 <= c2
    assert wins >= 2
