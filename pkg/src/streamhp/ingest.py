"""Sparse-matrix ingestion, column-net hypergraphs and replayable stream files.

Stream file layout (all integers little-endian)::

    offset  size  field
    0       8     magic b"HSTREAM1"
    8       8     u64 vertex count
    16      8     u64 net count
    24      8     u64 pin count
    32      8     u64 ordering seed
    40      ...   one record per stream element, in stream order:
                  u32 vertex id, u32 degree d, d x u32 net ids

A file is valid when every vertex id appears exactly once, every net id is
below the net count, and the degrees sum to the pin count.
"""
from dataclasses import dataclass
import struct

import numpy as np
from numba import njit

from . import _rng
from .core import Hypergraph, StreamElement

MAGIC = b"HSTREAM1"
_HEADER = struct.Struct("<8sQQQQ")


class MatrixMarketError(ValueError):
    pass


class StreamFormatError(ValueError):
    pass


@dataclass
class SparseMatrixPattern:
    rows: int
    cols: int
    nonzeros: np.ndarray  # (nnz, 2) int64, sorted row-major, no duplicates

    @property
    def nnz(self):
        return int(self.nonzeros.shape[0])

    def coordinate_set(self):
        return {(int(r), int(c)) for r, c in self.nonzeros}


_FIELDS = {"real", "double", "integer", "complex", "pattern"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def parse_matrix(source, name="<matrix>"):
    """Parse Matrix Market coordinate text into a deduplicated 0-based pattern.

    Symmetric, skew-symmetric and hermitian files are expanded so each stored
    off-diagonal (i, j) also yields (j, i).  Entries whose value is exactly
    zero are dropped; pattern files carry no values.
    """
    lines = source.splitlines()
    if not lines:
        raise MatrixMarketError(f"{name}:1: empty input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise MatrixMarketError(f"{name}:1: malformed header {lines[0]!r}")
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(f"{name}:1: only coordinate format is supported, got {fmt!r}")
    if fld not in _FIELDS:
        raise MatrixMarketError(f"{name}:1: unknown field {fld!r}")
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"{name}:1: unknown symmetry {sym!r}")

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if text and not text.startswith("%"):
            size = text.split()
            break
    if size is None:
        raise MatrixMarketError(f"{name}:{lineno}: missing size line")
    try:
        rows, cols, nnz = (int(x) for x in size)
    except ValueError:
        raise MatrixMarketError(f"{name}:{lineno}: malformed size line") from None
    if rows < 0 or cols < 0 or nnz < 0:
        raise MatrixMarketError(f"{name}:{lineno}: negative dimension")

    nvals = {"pattern": 0, "complex": 2}.get(fld, 1)
    coords = []
    seen = 0
    for k in range(lineno, len(lines)):
        text = lines[k].strip()
        if not text or text.startswith("%"):
            continue
        at = k + 1
        tok = text.split()
        if len(tok) != 2 + nvals:
            raise MatrixMarketError(f"{name}:{at}: expected {2 + nvals} fields, got {len(tok)}")
        try:
            i, j = int(tok[0]), int(tok[1])
            vals = [float(x) for x in tok[2:]]
        except ValueError:
            raise MatrixMarketError(f"{name}:{at}: malformed entry {text!r}") from None
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise MatrixMarketError(f"{name}:{at}: coordinate ({i}, {j}) outside {rows}x{cols}")
        seen += 1
        if vals and all(x == 0.0 for x in vals):
            continue
        coords.append((i - 1, j - 1))
        if sym != "general" and i != j:
            coords.append((j - 1, i - 1))
    if seen != nnz:
        raise MatrixMarketError(f"{name}:{len(lines)}: header declares {nnz} entries, found {seen}")
    if sym != "general" and rows != cols:
        raise MatrixMarketError(f"{name}:1: {sym} matrix must be square")

    arr = np.array(coords, dtype=np.int64).reshape(-1, 2)
    if arr.size:
        arr = np.unique(arr, axis=0)
    return SparseMatrixPattern(rows, cols, arr)


def read_matrix(path):
    with open(path) as f:
        return parse_matrix(f.read(), name=str(path))


def write_matrix(path, m, symmetry="general"):
    """Write a pattern matrix in coordinate format (used for fixtures)."""
    with open(path, "w") as f:
        f.write(f"%%MatrixMarket matrix coordinate pattern {symmetry}\n")
        f.write(f"{m.rows} {m.cols} {m.nnz}\n")
        f.write("".join(f"{r + 1} {c + 1}\n" for r, c in m.nonzeros))


def column_net(m):
    """Rows become vertices, columns become nets; (i, j) nonzero makes i a pin of j."""
    nz = m.nonzeros
    vptr = np.zeros(m.rows + 1, dtype=np.int64)
    if nz.size:
        order = np.lexsort((nz[:, 1], nz[:, 0]))
        nz = nz[order]
        np.cumsum(np.bincount(nz[:, 0], minlength=m.rows), out=vptr[1:])
        vnets = nz[:, 1].copy()
    else:
        vnets = np.zeros(0, dtype=np.int64)
    return Hypergraph.from_vertex_csr(vptr, vnets, n_nets=m.cols)


@dataclass
class StreamFile:
    n_vertices: int
    n_nets: int
    n_pins: int
    seed: int
    order: np.ndarray    # vertex id of each element
    indptr: np.ndarray   # element e owns indices[indptr[e]:indptr[e+1]]
    indices: np.ndarray

    def __len__(self):
        return int(self.order.shape[0])

    def element(self, e):
        lo, hi = self.indptr[e], self.indptr[e + 1]
        return StreamElement(int(self.order[e]), tuple(int(n) for n in self.indices[lo:hi]))

    def __iter__(self):
        for e in range(len(self)):
            yield self.element(e)

    def to_bytes(self):
        deg = np.diff(self.indptr)
        body = np.empty(2 * len(self) + self.n_pins, dtype="<u4")
        starts = 2 * np.arange(len(self), dtype=np.int64) + self.indptr[:-1]
        body[starts] = self.order
        body[starts + 1] = deg
        mask = np.ones(body.shape[0], dtype=bool)
        mask[starts] = False
        mask[starts + 1] = False
        body[mask] = self.indices
        header = _HEADER.pack(MAGIC, self.n_vertices, self.n_nets, self.n_pins,
                              self.seed & 0xFFFFFFFFFFFFFFFF)
        return header + body.tobytes()

    @classmethod
    def from_bytes(cls, data, name="<stream>"):
        if len(data) < _HEADER.size:
            raise StreamFormatError(f"{name}: truncated header")
        magic, nv, nn, npins, seed = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise StreamFormatError(f"{name}: bad magic {magic!r}")
        body = np.frombuffer(data, dtype="<u4", offset=_HEADER.size).astype(np.int64)
        if body.shape[0] != 2 * nv + npins:
            raise StreamFormatError(
                f"{name}: body holds {body.shape[0]} words, header implies {2 * nv + npins}")
        order = np.empty(nv, dtype=np.int64)
        indptr = np.zeros(nv + 1, dtype=np.int64)
        indices = np.empty(npins, dtype=np.int64)
        status = _decode(body, order, indptr, indices)
        if status == 1:
            raise StreamFormatError(f"{name}: pin total does not match header")
        stream = cls(nv, nn, npins, seed, order, indptr, indices)
        stream.validate(name)
        return stream

    def validate(self, name="<stream>"):
        seen = np.zeros(self.n_vertices, dtype=np.int64)
        if self.order.size and (self.order.min() < 0 or self.order.max() >= self.n_vertices):
            raise StreamFormatError(f"{name}: vertex id out of range")
        np.add.at(seen, self.order, 1)
        if self.order.shape[0] != self.n_vertices or (seen != 1).any():
            raise StreamFormatError(f"{name}: every vertex must appear exactly once")
        if int(self.indptr[-1]) != self.n_pins:
            raise StreamFormatError(f"{name}: pin total does not match header")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n_nets):
            raise StreamFormatError(f"{name}: net id out of range")

    def write(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def read(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read(), name=str(path))


@njit(cache=True)
def _decode(body, order, indptr, indices):
    pos = 0
    out = 0
    for e in range(order.shape[0]):
        if pos + 2 > body.shape[0]:
            return 1
        order[e] = body[pos]
        d = body[pos + 1]
        pos += 2
        if pos + d > body.shape[0] or out + d > indices.shape[0]:
            return 1
        for t in range(d):
            indices[out + t] = body[pos + t]
        pos += d
        out += d
        indptr[e + 1] = out
    if out != indices.shape[0]:
        return 1
    return 0


@njit(cache=True)
def _fisher_yates(perm, state):
    for i in range(perm.shape[0] - 1, 0, -1):
        j = _rng.bounded(state, i + 1)
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t


def random_order(n, seed):
    perm = np.arange(n, dtype=np.int64)
    _fisher_yates(perm, _rng.new_state(seed))
    return perm


def stream_order(hg, seed):
    """Stream the hypergraph's vertices in a seeded uniformly random order."""
    order = random_order(hg.n_vertices, seed)
    deg = np.diff(hg.vptr)[order]
    indptr = np.zeros(hg.n_vertices + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    starts = np.repeat(hg.vptr[order], deg)
    offs = np.arange(int(indptr[-1]), dtype=np.int64) - np.repeat(indptr[:-1], deg)
    indices = hg.vnets[starts + offs] if offs.size else np.zeros(0, dtype=np.int64)
    return StreamFile(hg.n_vertices, hg.n_nets, hg.n_pins, int(seed), order, indptr,
                      indices.astype(np.int64))


def stream_from_elements(elements, n_vertices=None, n_nets=None, seed=0):
    """Build a StreamFile from explicit (vertex, nets) pairs in the given order."""
    elements = [e if isinstance(e, StreamElement) else StreamElement(*e) for e in elements]
    order = np.array([e.vertex for e in elements], dtype=np.int64)
    indptr = np.zeros(len(elements) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(e.nets) for e in elements])
    indices = np.array([n for e in elements for n in e.nets], dtype=np.int64)
    if n_vertices is None:
        n_vertices = int(order.max()) + 1 if order.size else 0
    if n_nets is None:
        n_nets = int(indices.max()) + 1 if indices.size else 0
    stream = StreamFile(int(n_vertices), int(n_nets), int(indptr[-1]), int(seed),
                        order, indptr, indices)
    stream.validate()
    return stream
