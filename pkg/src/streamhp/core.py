"""Partition state, the balance law, net connectivity, and the exact cut oracle.

Everything that mutates state during a stream is a numba kernel operating
on plain arrays.  The Python classes here own those arrays and expose the
per-vertex operations for callers and tests that work one element at a time.

Layout notes
------------
``PartitionState`` keeps ``meta = [p_min, i]`` in an int64 array so kernels
can update both in place.  ``NetConnectivity`` stores the part set of net
``n`` as a contiguous block ``e_part[start[n] : start[n] + lam[n]]`` (pin
counts alongside in ``e_cnt``) inside one bump-allocated arena.  A full
block moves to a fresh block of twice the capacity, so a net whose part
set peaked at size L has consumed fewer than 4L slots and the arena never
needs more than 4 * |H| slots.  ``ctr`` holds the running counters below.
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

PMIN = 0
NASSIGNED = 1

ENTRIES = 0
CUT = 1
NETS_SEEN = 2
TOP = 3
PEAK = 4
_NCTR = 5


class InvariantError(AssertionError):
    """Raised when a bookkeeping invariant or a call contract is violated."""


@dataclass(frozen=True)
class StreamElement:
    vertex: int
    nets: tuple = field(default_factory=tuple)

    def __post_init__(self):
        nets = tuple(int(n) for n in self.nets)
        if len(set(nets)) != len(nets):
            nets = tuple(dict.fromkeys(nets))
        object.__setattr__(self, "nets", nets)

    def arrays(self):
        """One-element stream as (order, indptr, indices) arrays."""
        return (np.array([self.vertex], dtype=np.int64),
                np.array([0, len(self.nets)], dtype=np.int64),
                np.array(self.nets, dtype=np.int64))


def beta_fraction(beta):
    """Exact rational form of the imbalance ratio, so slack needs no float floor."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    frac = Fraction(str(beta)).limit_denominator(10**6)
    return frac.numerator, frac.denominator


def dynamic_slack(i, K, beta):
    """Slack allowed while placing a vertex after ``i`` assignments: max(1, floor(beta*i/K))."""
    num, den = beta_fraction(beta)
    return max(1, (num * i) // (den * K))


@njit(cache=True)
def _slack(i, K, beta_num, beta_den):
    s = (beta_num * i) // (beta_den * K)
    if s < 1:
        return 1
    return s


@njit(cache=True)
def _rescan_pmin(weights, meta):
    best = 0
    for k in range(1, weights.shape[0]):
        if weights[k] < weights[best]:
            best = k
    meta[PMIN] = best


@njit(cache=True)
def _place(weights, part, meta, v, p):
    part[v] = p
    weights[p] += 1
    meta[NASSIGNED] += 1
    if p == meta[PMIN]:
        _rescan_pmin(weights, meta)


@njit(cache=True)
def _unplace(weights, part, meta, v):
    p = part[v]
    part[v] = -1
    weights[p] -= 1
    meta[NASSIGNED] -= 1
    if weights[p] < weights[meta[PMIN]]:
        meta[PMIN] = p
    return p


@njit(cache=True)
def _lowest_eligible(weights, pmin, s):
    wmin = weights[pmin]
    for k in range(weights.shape[0]):
        if weights[k] - wmin < s:
            return k
    return pmin


@njit(cache=True)
def _touch(seen, ctr, n):
    if seen[n] == 0:
        seen[n] = 1
        ctr[NETS_SEEN] += 1


# Per-net header columns: where the net's block starts in the arena, how many
# parts it holds (lambda_n) and the block's capacity.  Keeping the three in
# one row means one cache line per net visit.
H_START, H_LAM, H_CAP = 0, 1, 2


@njit(cache=True)
def _find(hdr, e_part, n, p):
    b = hdr[n, H_START]
    for e in range(b, b + hdr[n, H_LAM]):
        if e_part[e] == p:
            return e
    return -1


@njit(cache=True)
def _conn_add(hdr, e_part, e_cnt, ctr, n, p, counted):
    e = _find(hdr, e_part, n, p)
    if e != -1:
        if counted:
            e_cnt[e] += 1
        return
    lam = hdr[n, H_LAM]
    cap = hdr[n, H_CAP]
    if cap == 0:
        ctr[NETS_SEEN] += 1
    if lam == cap:
        # move the block to the top of the arena with twice the room
        size = 1 if cap == 0 else 2 * cap
        top = ctr[TOP]
        if top + size > e_part.shape[0]:
            raise ValueError("connectivity arena exhausted")
        b = hdr[n, H_START]
        for t in range(lam):
            e_part[top + t] = e_part[b + t]
            e_cnt[top + t] = e_cnt[b + t]
        hdr[n, H_START] = top
        hdr[n, H_CAP] = size
        ctr[TOP] = top + size
    e = hdr[n, H_START] + lam
    e_part[e] = p
    e_cnt[e] = 1
    hdr[n, H_LAM] = lam + 1
    ctr[ENTRIES] += 1
    if ctr[ENTRIES] > ctr[PEAK]:
        ctr[PEAK] = ctr[ENTRIES]
    if lam >= 1:
        ctr[CUT] += 1


@njit(cache=True)
def _conn_remove(hdr, e_part, e_cnt, ctr, n, p):
    e = _find(hdr, e_part, n, p)
    if e == -1 or e_cnt[e] <= 0:
        raise ValueError("pin count underflow")
    e_cnt[e] -= 1
    if e_cnt[e] > 0:
        return
    last = hdr[n, H_START] + hdr[n, H_LAM] - 1
    e_part[e] = e_part[last]
    e_cnt[e] = e_cnt[last]
    hdr[n, H_LAM] -= 1
    ctr[ENTRIES] -= 1
    if hdr[n, H_LAM] >= 1:
        ctr[CUT] -= 1


@njit(cache=True)
def _assign_sets(indices, lo, hi, hdr, e_part, ctr, p, absent):
    """Uncounted fast path: add ``p`` to each net's part set.

    ``absent`` says ``p`` is known to be in none of the nets, which skips the
    membership scan.  Entries only grow here, so the peak is left for the
    caller to sync.
    """
    for j in range(lo, hi):
        n = indices[j]
        b = hdr[n, H_START]
        lam = hdr[n, H_LAM]
        if not absent:
            hit = False
            for e in range(b, b + lam):
                if e_part[e] == p:
                    hit = True
                    break
            if hit:
                continue
        cap = hdr[n, H_CAP]
        if cap == 0:
            ctr[NETS_SEEN] += 1
        if lam == cap:
            size = 1 if cap == 0 else 2 * cap
            top = ctr[TOP]
            if top + size > e_part.shape[0]:
                raise ValueError("connectivity arena exhausted")
            for t in range(lam):
                e_part[top + t] = e_part[b + t]
            b = top
            hdr[n, H_START] = top
            hdr[n, H_CAP] = size
            ctr[TOP] = top + size
        e_part[b + lam] = p
        hdr[n, H_LAM] = lam + 1
        ctr[ENTRIES] += 1
        if lam >= 1:
            ctr[CUT] += 1


@njit(cache=True)
def _assign_conn(indices, lo, hi, hdr, e_part, e_cnt, ctr, p, counted):
    for j in range(lo, hi):
        _conn_add(hdr, e_part, e_cnt, ctr, indices[j], p, counted)


class PartitionState:
    """Part weights, the vertex-to-part map, p_min and the assigned count."""

    def __init__(self, K, n_vertices=0, beta=0.1):
        if K < 1:
            raise ValueError("K must be at least 1")
        self.K = int(K)
        self.beta = float(beta)
        self.beta_num, self.beta_den = beta_fraction(beta)
        self.weights = np.zeros(self.K, dtype=np.int64)
        self.part = np.full(max(int(n_vertices), 0), -1, dtype=np.int64)
        self.meta = np.zeros(2, dtype=np.int64)

    @property
    def p_min(self):
        return int(self.meta[PMIN])

    @property
    def i(self):
        return int(self.meta[NASSIGNED])

    def reserve(self, n_vertices):
        if n_vertices > self.part.shape[0]:
            grown = np.full(max(n_vertices, 2 * self.part.shape[0]), -1, dtype=np.int64)
            grown[:self.part.shape[0]] = self.part
            self.part = grown

    def slack(self):
        return int(_slack(self.meta[NASSIGNED], self.K, self.beta_num, self.beta_den))

    def eligible(self, p):
        return eligible(self, p)

    def imbalance(self):
        return imbalance(self)

    def check(self, slack=None):
        """Verify weights, p_min and (optionally) the balance bound."""
        w = self.weights
        if int(w.sum()) != self.i:
            raise InvariantError(f"weights sum {int(w.sum())} != assigned {self.i}")
        if w[self.p_min] != w.min():
            raise InvariantError(f"p_min {self.p_min} is not a least-loaded part")
        if slack is not None and imbalance(self) > slack:
            raise InvariantError(f"imbalance {imbalance(self)} exceeds slack {slack}")


def eligible(state, p):
    w = state.weights
    return bool(w[p] - w[state.p_min] < state.slack())


def imbalance(state):
    w = state.weights
    return int(w.max() - w.min()) if w.shape[0] else 0


class NetConnectivity:
    """Per-net part sets (the n2p map), optionally with per-(net, part) pin counts.

    Each net owns a block in a shared arena; ``hdr[n]`` holds the block's
    start, the number of parts stored (lambda_n) and its capacity.  A full
    block is moved to the top of the arena with doubled capacity, so the
    arena is bounded by about 4x the pin count.  A net counts as seen once
    it has a block.
    """

    def __init__(self, n_nets=0, n_pins=None, counted=False):
        self.counted = bool(counted)
        n_nets = max(int(n_nets), 1)
        arena = 4 * int(n_pins) + 1 if n_pins is not None else 4 * n_nets
        self.hdr = np.zeros((n_nets, 3), dtype=np.int64)
        self.e_part = np.zeros(arena, dtype=np.int32)
        self.e_cnt = np.zeros(arena, dtype=np.int32)
        self.ctr = np.zeros(_NCTR, dtype=np.int64)

    @property
    def lam(self):
        return self.hdr[:, H_LAM]

    def reserve(self, n_nets, nets=()):
        """Grow the header to ``n_nets`` and leave room to add a part to each of ``nets``."""
        if n_nets > self.hdr.shape[0]:
            grown = np.zeros((max(n_nets, 2 * self.hdr.shape[0]), 3), dtype=np.int64)
            grown[:self.hdr.shape[0]] = self.hdr
            self.hdr = grown
        need = int(self.ctr[TOP]) + sum(2 * max(int(self.hdr[n, H_CAP]), 1) for n in nets)
        if need > self.e_part.shape[0]:
            size = max(need, 2 * self.e_part.shape[0])
            self.e_part = _grown(self.e_part, size, 0)
            self.e_cnt = _grown(self.e_cnt, size, 0)

    def arrays(self):
        return (self.hdr, self.e_part, self.e_cnt, self.ctr)

    def parts(self, n):
        if n >= self.hdr.shape[0]:
            return set()
        b, lam = self.hdr[n, H_START], self.hdr[n, H_LAM]
        return {int(p) for p in self.e_part[b:b + lam]}

    def count(self, n, p):
        """Pin count of net ``n`` in part ``p`` (counted mode)."""
        if n >= self.hdr.shape[0]:
            return 0
        e = _find(self.hdr, self.e_part, n, p)
        return int(self.e_cnt[e]) if e != -1 else 0

    def connectivity(self, n):
        return int(self.hdr[n, H_LAM]) if n < self.hdr.shape[0] else 0

    @property
    def nets_seen(self):
        return int(self.ctr[NETS_SEEN])

    @property
    def cut(self):
        """Incrementally tracked connectivity-1 cut of the assigned pins."""
        return int(self.ctr[CUT])

    @property
    def peak_entries(self):
        return int(self.ctr[PEAK])

    def entry_count(self):
        return int(self.ctr[ENTRIES])

    def add(self, n, p):
        self.reserve(n + 1, (n,))
        _conn_add(self.hdr, self.e_part, self.e_cnt, self.ctr, n, p, self.counted)

    def remove(self, n, p):
        if not self.counted:
            raise InvariantError("removal needs counted connectivity")
        try:
            _conn_remove(self.hdr, self.e_part, self.e_cnt, self.ctr, n, p)
        except ValueError as exc:
            raise InvariantError(f"net {n}, part {p}: {exc}") from None

    def audit(self, assigned_pins):
        """Check counted-mode consistency against ``assigned_pins[n]``."""
        n_nets = self.hdr.shape[0]
        start, lam, cap = self.hdr[:, H_START], self.hdr[:, H_LAM], self.hdr[:, H_CAP]
        pins = np.zeros(n_nets, dtype=np.int64)
        k = min(n_nets, len(assigned_pins))
        pins[:k] = assigned_pins[:k]
        if (lam > cap).any():
            raise InvariantError("a part set overflowed its block")
        if int((cap > 0).sum()) != self.nets_seen:
            raise InvariantError("nets-seen counter drifted")
        if self.counted:
            owner = np.repeat(np.arange(n_nets), lam)
            slots = (np.repeat(start, lam)
                     + np.arange(owner.shape[0]) - np.repeat(np.cumsum(lam) - lam, lam))
            counts = self.e_cnt[slots]
            if (counts <= 0).any():
                raise InvariantError("a stored pin count is not positive")
            total = np.bincount(owner, weights=counts, minlength=n_nets).astype(np.int64)
            bad = np.flatnonzero(total != pins)
            if bad.size:
                n = int(bad[0])
                raise InvariantError(f"net {n}: counts sum to {total[n]}, {pins[n]} pins assigned")
        if int(lam.sum()) != self.entry_count():
            raise InvariantError("entry counter drifted")
        if int(np.maximum(lam - 1, 0).sum()) != self.cut:
            raise InvariantError("cut counter drifted")


def _grown(arr, size, fill):
    out = np.full(size, fill, dtype=arr.dtype)
    out[:arr.shape[0]] = arr
    return out


def entry_count(conn):
    return conn.entry_count()


def assign(state, conn, elem, p, check=True):
    """Place ``elem.vertex`` into part ``p`` and record p in each of its nets."""
    if check and not eligible(state, p):
        raise InvariantError(
            f"part {p} is not eligible (weight {state.weights[p]}, "
            f"min {state.weights[state.p_min]}, slack {state.slack()})")
    state.reserve(elem.vertex + 1)
    if conn is not None and elem.nets:
        conn.reserve(max(elem.nets) + 1, elem.nets)
        idx = np.asarray(elem.nets, dtype=np.int64)
        _assign_conn(idx, 0, idx.shape[0], *conn.arrays(), p, conn.counted)
    _place(state.weights, state.part, state.meta, elem.vertex, p)
    return state


@dataclass
class Hypergraph:
    """Offline pin structure in both orientations (CSR by vertex and by net)."""

    n_vertices: int
    n_nets: int
    vptr: np.ndarray
    vnets: np.ndarray
    nptr: np.ndarray
    npins: np.ndarray

    @property
    def n_pins(self):
        return int(self.vnets.shape[0])

    def nets(self, v):
        return self.vnets[self.vptr[v]:self.vptr[v + 1]]

    def pins(self, n):
        return self.npins[self.nptr[n]:self.nptr[n + 1]]

    @classmethod
    def from_vertex_csr(cls, vptr, vnets, n_nets=None):
        vptr = np.asarray(vptr, dtype=np.int64)
        vnets = np.asarray(vnets, dtype=np.int64)
        n_vertices = vptr.shape[0] - 1
        if n_nets is None:
            n_nets = int(vnets.max()) + 1 if vnets.size else 0
        nptr, npins = _transpose(vptr, vnets, n_nets)
        return cls(n_vertices, int(n_nets), vptr, vnets, nptr, npins)

    @classmethod
    def from_nets(cls, pins, n_vertices=None):
        """Build from a list of pin lists, one per net."""
        nptr = np.zeros(len(pins) + 1, dtype=np.int64)
        nptr[1:] = np.cumsum([len(set(p)) for p in pins])
        npins = np.array([v for p in pins for v in dict.fromkeys(p)], dtype=np.int64)
        if n_vertices is None:
            n_vertices = int(npins.max()) + 1 if npins.size else 0
        vptr, vnets = _transpose(nptr, npins, n_vertices)
        return cls(int(n_vertices), len(pins), vptr, vnets, nptr, npins)

    @classmethod
    def from_stream(cls, stream, upto=None):
        """The hypergraph induced by the first ``upto`` stream elements."""
        upto = stream.n_vertices if upto is None else int(upto)
        order = stream.order[:upto]
        deg = np.zeros(stream.n_vertices, dtype=np.int64)
        deg[order] = np.diff(stream.indptr[:upto + 1])
        vptr = np.zeros(stream.n_vertices + 1, dtype=np.int64)
        np.cumsum(deg, out=vptr[1:])
        vnets = np.empty(int(vptr[-1]), dtype=np.int64)
        src = stream.indices[:stream.indptr[upto]]
        # scatter each element's net list to its vertex slot
        owner = np.repeat(order, np.diff(stream.indptr[:upto + 1]))
        offs = np.arange(src.shape[0]) - np.repeat(stream.indptr[:upto], np.diff(stream.indptr[:upto + 1]))
        vnets[vptr[owner] + offs] = src
        nptr, npins = _transpose(vptr, vnets, stream.n_nets)
        return cls(stream.n_vertices, stream.n_nets, vptr, vnets, nptr, npins)


def _transpose(ptr, idx, n_cols):
    rows = np.repeat(np.arange(ptr.shape[0] - 1, dtype=np.int64), np.diff(ptr))
    perm = np.argsort(idx, kind="stable")
    tptr = np.zeros(n_cols + 1, dtype=np.int64)
    if idx.size:
        np.cumsum(np.bincount(idx, minlength=n_cols), out=tptr[1:])
    return tptr, rows[perm]


def net_connectivities(hg, part):
    """lambda_n for every net, recomputed from the pins and the part vector."""
    part = np.asarray(part, dtype=np.int64)
    owner = np.repeat(np.arange(hg.n_nets, dtype=np.int64), np.diff(hg.nptr))
    if hg.npins.size == 0:
        return np.zeros(hg.n_nets, dtype=np.int64)
    pin_parts = part[hg.npins]
    if (pin_parts < 0).any():
        bad = int(hg.npins[np.argmax(pin_parts < 0)])
        raise ValueError(f"vertex {bad} is a pin but has no part")
    width = int(pin_parts.max()) + 1
    pairs = np.unique(owner * width + pin_parts)
    return np.bincount(pairs // width, minlength=hg.n_nets).astype(np.int64)


def connectivity_cutsize(hg, part):
    """Connectivity-1 cut, sum over nets of (lambda_n - 1), from scratch."""
    lam = net_connectivities(hg, part)
    return int(np.maximum(lam - 1, 0).sum())


def boundary_vertices(hg, part):
    """Vertices that are pins of at least one cut net."""
    lam = net_connectivities(hg, part)
    cut_nets = np.flatnonzero(lam > 1)
    if cut_nets.size == 0:
        return np.zeros(0, dtype=np.int64)
    pins = np.concatenate([hg.pins(n) for n in cut_nets])
    return np.unique(pins)


def write_partition(path, part):
    with open(path, "w") as f:
        f.write("".join(f"{int(p)}\n" for p in part))


def read_partition(path):
    values = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not an integer part id: {line!r}") from None
    return np.array(values, dtype=np.int64)


def checkpoint_record(vertices, nets_seen, pins, cut, imbalance, entries, elapsed_seconds):
    return {
        "vertices": int(vertices),
        "nets_seen": int(nets_seen),
        "pins": int(pins),
        "cut": int(cut),
        "imbalance": int(imbalance),
        "entries": int(entries),
        "elapsed_seconds": float(elapsed_seconds),
    }
