import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from streamhp import _rng
from streamhp.core import Hypergraph
from streamhp.ingest import (MAGIC, MatrixMarketError, SparseMatrixPattern, StreamFile,
                             StreamFormatError, column_net, parse_matrix, random_order,
                             read_matrix, stream_from_elements, stream_order, write_matrix)
from streamhp.generators import random_hypergraph, synthetic_pattern


def mm(body, field="pattern", sym="general"):
    return f"%%MatrixMarket matrix coordinate {field} {sym}\n" + body


# ------------------------------------------------------------ parse_matrix

def test_general_shift_to_zero_based():
    m = parse_matrix(mm("3 3 2\n1 1\n2 3\n"))
    assert m.coordinate_set() == {(0, 0), (1, 2)}


def test_symmetric_expansion():
    m = parse_matrix(mm("3 3 1\n3 1\n", sym="symmetric"))
    assert m.coordinate_set() == {(2, 0), (0, 2)}


def test_symmetric_diagonal_expanded_once():
    m = parse_matrix(mm("2 2 2\n1 1\n2 1\n", sym="symmetric"))
    assert m.nnz == 3


def test_out_of_range_coordinate_names_line():
    with pytest.raises(MatrixMarketError, match=r":4:"):
        parse_matrix(mm("3 3 2\n1 1\n4 1\n"))


@pytest.mark.parametrize("text", [
    "",
    "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
    "%%MatrixMarket vector coordinate real general\n",
    "%%MatrixMarket matrix coordinate real weird\n1 1 0\n",
    mm("2 2\n"),
    mm("2 2 3\n1 1\n"),
    mm("2 2 1\n1 x\n"),
    mm("2 2 1\n1 1 5.0\n"),
    mm("2 3 1\n1 2\n", sym="symmetric"),
])
def test_malformed_inputs_raise(text):
    with pytest.raises(MatrixMarketError):
        parse_matrix(text)


def test_values_ignored_but_explicit_zeros_dropped():
    m = parse_matrix(mm("2 2 3\n1 1 2.5\n2 2 0\n1 2 -1e-3\n", field="real"))
    assert m.coordinate_set() == {(0, 0), (0, 1)}


def test_duplicates_collapse_and_comments_skip():
    m = parse_matrix(mm("% note\n2 2 3\n1 2\n% inside\n1 2\n2 1\n"))
    assert m.coordinate_set() == {(0, 1), (1, 0)}


def test_complex_field_and_skew():
    m = parse_matrix(mm("2 2 1\n2 1 0 1\n", field="complex", sym="skew-symmetric"))
    assert m.coordinate_set() == {(1, 0), (0, 1)}


def test_rectangular_accepted(tmp_path):
    m = SparseMatrixPattern(2, 5, np.array([[0, 4], [1, 0]]))
    path = tmp_path / "r.mtx"
    write_matrix(path, m)
    back = read_matrix(path)
    assert (back.rows, back.cols) == (2, 5)
    assert back.coordinate_set() == m.coordinate_set()


# ------------------------------------------------------------ column_net

def test_column_net_example():
    hg = column_net(SparseMatrixPattern(3, 3, np.array([[0, 0], [0, 1], [1, 1], [2, 2]])))
    assert [sorted(hg.pins(n)) for n in range(3)] == [[0], [0, 1], [2]]
    assert list(hg.nets(0)) == [0, 1]


def test_column_net_diagonal():
    n = 6
    hg = column_net(SparseMatrixPattern(n, n, np.stack([np.arange(n)] * 2, axis=1)))
    assert all(len(hg.pins(j)) == 1 for j in range(n))


def test_column_net_empty():
    hg = column_net(SparseMatrixPattern(0, 0, np.zeros((0, 2), dtype=np.int64)))
    assert hg.n_pins == 0 and hg.n_vertices == 0


@given(st.integers(0, 10_000))
def test_column_net_conserves_pins(seed):
    rng = np.random.default_rng(seed)
    rows, cols = rng.integers(1, 30, 2)
    coords = np.unique(np.stack([rng.integers(0, rows, 50), rng.integers(0, cols, 50)], 1), axis=0)
    m = SparseMatrixPattern(int(rows), int(cols), coords)
    hg = column_net(m)
    assert hg.n_pins == m.nnz
    got = {(int(v), n) for n in range(hg.n_nets) for v in hg.pins(n)}
    assert got == m.coordinate_set()
    for v in range(hg.n_vertices):
        assert len(set(hg.nets(v))) == len(hg.nets(v))


# ------------------------------------------------------------ RNG and ordering

def test_splitmix_known_value():
    # first output of SplitMix64 seeded with 0, as published with the algorithm
    state = _rng.new_state(0)
    assert int(_rng.next_u64(state)) == 0xE220A8397B1DCDAF


@given(st.integers(0, 2**64 - 1))
def test_splitmix_compiled_matches_reference(seed):
    state = _rng.new_state(seed)
    assert [int(_rng.next_u64(state)) for _ in range(5)] == _rng.splitmix64_reference(seed, 5)


def test_random_order_is_uniform_enough():
    # position of element 0 over many seeds: chi-square against uniform on 5 slots
    counts = np.zeros(5)
    for seed in range(5000):
        counts[int(np.flatnonzero(random_order(5, seed) == 0)[0])] += 1
    chi2 = ((counts - 1000) ** 2 / 1000).sum()
    assert chi2 < 18.5  # p ~ 0.001 at 4 degrees of freedom


def test_stream_order_determinism_and_permutation():
    hg = random_hypergraph(300, 200, 5, seed=3)
    a, b = stream_order(hg, 9), stream_order(hg, 9)
    assert a.to_bytes() == b.to_bytes()
    assert sorted(a.order) == list(range(300))
    assert a.n_pins == hg.n_pins


def test_stream_order_single_vertex():
    hg = Hypergraph.from_nets([[0]], n_vertices=1)
    assert list(stream_order(hg, 12345).order) == [0]


def test_stream_order_seeds_differ():
    hg = Hypergraph.from_nets([], n_vertices=10_000)
    assert (stream_order(hg, 1).order != stream_order(hg, 2).order).any()


def test_stream_keeps_degree_zero_vertices():
    hg = Hypergraph.from_nets([[0, 2]], n_vertices=4)
    s = stream_order(hg, 0)
    assert len(s) == 4
    assert sorted(len(e.nets) for e in s) == [0, 0, 1, 1]


def test_stream_elements_match_hypergraph():
    hg = random_hypergraph(50, 30, 4, seed=8)
    for e in stream_order(hg, 4):
        assert list(e.nets) == list(hg.nets(e.vertex))


# ------------------------------------------------------------ StreamFile format

def test_stream_file_layout():
    s = stream_from_elements([(1, (4, 2)), (0, ())], n_vertices=2, n_nets=5, seed=7)
    data = s.to_bytes()
    assert data[:8] == MAGIC
    assert struct.unpack_from("<4Q", data, 8) == (2, 5, 2, 7)
    assert list(np.frombuffer(data[40:], dtype="<u4")) == [1, 2, 4, 2, 0, 0]


@given(st.integers(0, 1000), st.integers(0, 2**64 - 1))
def test_stream_file_round_trip(seed, order_seed):
    hg = random_hypergraph(40, 25, 5, seed=seed)
    s = stream_order(hg, order_seed)
    back = StreamFile.from_bytes(s.to_bytes())
    assert back.seed == s.seed
    assert (back.order == s.order).all()
    assert (back.indptr == s.indptr).all()
    assert (back.indices == s.indices).all()


def test_stream_file_on_disk(tmp_path):
    s = stream_order(column_net(synthetic_pattern(200, 1500, seed=2)), 3)
    s.write(tmp_path / "x.hs")
    assert StreamFile.read(tmp_path / "x.hs").to_bytes() == s.to_bytes()


def test_stream_file_rejects_corruption():
    good = stream_from_elements([(0, (0,)), (1, (0, 1))]).to_bytes()
    with pytest.raises(StreamFormatError):
        StreamFile.from_bytes(b"XXXXXXXX" + good[8:])
    with pytest.raises(StreamFormatError):
        StreamFile.from_bytes(good[:20])
    with pytest.raises(StreamFormatError):
        StreamFile.from_bytes(good[:-4])
    dup = bytearray(good)
    dup[40 + 4 * 3:40 + 4 * 4] = (0).to_bytes(4, "little")  # second element claims vertex 0
    with pytest.raises(StreamFormatError):
        StreamFile.from_bytes(bytes(dup))


def test_synthetic_generator_shape():
    m = synthetic_pattern(10_000, 100_000, seed=11)
    assert 80_000 < m.nnz < 120_000
    deg = np.bincount(m.nonzeros[:, 0], minlength=m.rows)
    # heavy tail: the busiest vertex is far above the mean
    assert deg.max() > 10 * deg.mean()
