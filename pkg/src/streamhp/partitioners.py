"""The six one-pass streaming partitioners.

Every algorithm is a numba kernel ``_drive_*`` that consumes stream
elements ``start..stop-1``.  Whole runs call it once; instrumented runs
call it one element at a time and check invariants in between, so both
paths execute the same code.

Shared rules:

* a part is eligible when ``weights[p] - weights[p_min] < s`` with
  ``s = max(1, floor(beta * i / K))`` and ``i`` the vertices assigned before
  the current one;
* equal savings go to the lowest part id;
* a vertex with no nets goes to ``p_min``.
"""
from dataclasses import dataclass, field
import time
import warnings

import numpy as np
from numba import njit

from . import _rng
from .core import (CUT, ENTRIES, H_LAM, H_START, NETS_SEEN, PEAK, PMIN, NASSIGNED, Hypergraph,
                   NetConnectivity, PartitionState, _assign_conn, _assign_sets, _lowest_eligible,
                   _place, _slack, _touch, checkpoint_record, connectivity_cutsize,
                   imbalance)
from .sketch import (DEFAULT_BF_BITS, DEFAULT_HASHES, MERSENNE31, BloomFilter,
                     MinHashFamily, _bf_insert, _bf_query, _minhash_part)

ALGORITHMS = ("random", "minmax", "minmax-n2p", "minmax-l", "minmax-bf", "minmax-mh")

_ONE = np.uint64(1)


@dataclass
class PartitionerConfig:
    algorithm: str = "minmax-n2p"
    K: int = 2
    beta: float = 0.1
    ell: int | None = None
    bf_bits: int = DEFAULT_BF_BITS
    bf_hashes: int = DEFAULT_HASHES
    mh_hashes: int = DEFAULT_HASHES
    mh_q: int = MERSENNE31
    seed: int = 0

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.algorithm == "minmax-l" and (self.ell is None or self.ell < 1):
            raise ValueError("minmax-l needs ell >= 1")
        if self.algorithm == "minmax-bf" and not self.bf_bits >= self.bf_hashes >= 1:
            raise ValueError("minmax-bf needs bf_bits >= bf_hashes >= 1")
        if self.algorithm == "minmax-mh" and self.mh_hashes < 1:
            raise ValueError("minmax-mh needs at least one hash function")
        return self


class ActivePartScratch:
    """save / mark / pids / indx, each of length K, allocated once.

    ``mark`` holds a stamp that increases with every vertex examined, so the
    arrays never need a reset between vertices.
    """

    def __init__(self, K):
        self.save = np.zeros(K, dtype=np.int64)
        self.mark = np.full(K, -1, dtype=np.int64)
        self.pids = np.zeros(K, dtype=np.int64)
        self.indx = np.zeros(K, dtype=np.int64)
        self.stamp = np.zeros(1, dtype=np.int64)

    def arrays(self):
        return self.save, self.mark, self.pids, self.indx, self.stamp


class PartToNet:
    """MINMAX's per-part net sets, one bit row per part."""

    def __init__(self, K, n_nets):
        self.bits = np.zeros((K, max((n_nets + 63) // 64, 1)), dtype=np.uint64)
        self.seen = np.zeros(max(n_nets, 1), dtype=np.uint8)
        self.ctr = np.zeros(6, dtype=np.int64)

    def reserve(self, n_nets):
        words = (n_nets + 63) // 64
        if words > self.bits.shape[1]:
            grown = np.zeros((self.bits.shape[0], max(words, 2 * self.bits.shape[1])),
                             dtype=np.uint64)
            grown[:, :self.bits.shape[1]] = self.bits
            self.bits = grown
        if n_nets > self.seen.shape[0]:
            seen = np.zeros(max(n_nets, 2 * self.seen.shape[0]), dtype=np.uint8)
            seen[:self.seen.shape[0]] = self.seen
            self.seen = seen

    def nets(self, p):
        out = set()
        for w, word in enumerate(self.bits[p]):
            word = int(word)
            while word:
                low = word & -word
                out.add(64 * w + low.bit_length() - 1)
                word ^= low
        return out

    def entry_count(self):
        return int(self.ctr[ENTRIES])


class TruncatedNetParts:
    """Per-net part lists capped at ``ell`` slots (MINMAX-L)."""

    def __init__(self, n_nets, ell):
        self.ell = int(ell)
        n_nets = max(int(n_nets), 1)
        self.slots = np.full(n_nets * self.ell, -1, dtype=np.int64)
        self.lens = np.zeros(n_nets, dtype=np.int64)
        self.seen = np.zeros(n_nets, dtype=np.uint8)
        self.ctr = np.zeros(6, dtype=np.int64)

    def reserve(self, n_nets):
        if n_nets > self.lens.shape[0]:
            size = max(n_nets, 2 * self.lens.shape[0])
            slots = np.full(size * self.ell, -1, dtype=np.int64)
            slots[:self.slots.shape[0]] = self.slots
            self.slots = slots
            for name in ("lens", "seen"):
                old = getattr(self, name)
                new = np.zeros(size, dtype=old.dtype)
                new[:old.shape[0]] = old
                setattr(self, name, new)

    def parts(self, n):
        if n >= self.lens.shape[0]:
            return []
        base = n * self.ell
        return [int(p) for p in self.slots[base:base + self.lens[n]]]

    def entry_count(self):
        return int(self.ctr[ENTRIES])


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _drive_random(order, indptr, start, stop, weights, part, meta, bn, bd, rng):
    K = weights.shape[0]
    for e in range(start, stop):
        v = order[e]
        if indptr[e + 1] == indptr[e]:
            _place(weights, part, meta, v, meta[PMIN])
            continue
        s = _slack(meta[NASSIGNED], K, bn, bd)
        wmin = weights[meta[PMIN]]
        p = _rng.bounded(rng, K)
        while weights[p] - wmin >= s:
            p = _rng.bounded(rng, K)
        _place(weights, part, meta, v, p)


@njit(cache=True)
def _drive_minmax(order, indptr, indices, start, stop, weights, part, meta, bn, bd,
                  bits, seen, ctr):
    K = weights.shape[0]
    for e in range(start, stop):
        v = order[e]
        lo = indptr[e]
        hi = indptr[e + 1]
        if hi == lo:
            _place(weights, part, meta, v, meta[PMIN])
            continue
        s = _slack(meta[NASSIGNED], K, bn, bd)
        wmin = weights[meta[PMIN]]
        saved = -1
        p = -1
        for i in range(K):
            if weights[i] - wmin < s:
                c = 0
                for j in range(lo, hi):
                    n = indices[j]
                    if (bits[i, n >> 6] >> np.uint64(n & 63)) & _ONE:
                        c += 1
                if c > saved:
                    saved = c
                    p = i
        for j in range(lo, hi):
            n = indices[j]
            _touch(seen, ctr, n)
            w = n >> 6
            mask = _ONE << np.uint64(n & 63)
            if bits[p, w] & mask == 0:
                bits[p, w] |= mask
                ctr[ENTRIES] += 1
        ctr[PEAK] = ctr[ENTRIES]
        ctr[CUT] = ctr[ENTRIES] - ctr[NETS_SEEN]
        _place(weights, part, meta, v, p)


@njit(cache=True)
def _collect_active(indices, lo, hi, hdr, e_part, save, mark, pids, indx, stamp):
    stamp[0] += 1
    st = stamp[0]
    active = 0
    for j in range(lo, hi):
        n = indices[j]
        b = hdr[n, H_START]
        for e in range(b, b + hdr[n, H_LAM]):
            i = e_part[e]
            if mark[i] != st:
                mark[i] = st
                pids[active] = i
                save[active] = 1
                indx[i] = active
                active += 1
            else:
                save[indx[i]] += 1
    return active


@njit(cache=True)
def _select_active(active, pids, save, weights, pmin, s):
    wmin = weights[pmin]
    best = -1
    saved = -1
    for j in range(active):
        i = pids[j]
        if weights[i] - wmin < s:
            if save[j] > saved or (save[j] == saved and i < best):
                saved = save[j]
                best = i
    return best


@njit(cache=True)
def _drive_n2p(order, indptr, indices, first, stop, weights, part, meta, bn, bd,
               hdr, e_part, e_cnt, ctr, save, mark, pids, indx, stamp, counted):
    K = weights.shape[0]
    for e in range(first, stop):
        v = order[e]
        lo = indptr[e]
        hi = indptr[e + 1]
        if hi == lo:
            _place(weights, part, meta, v, meta[PMIN])
            continue
        s = _slack(meta[NASSIGNED], K, bn, bd)
        active = _collect_active(indices, lo, hi, hdr, e_part, save, mark, pids, indx, stamp)
        p = _select_active(active, pids, save, weights, meta[PMIN], s)
        if p == -1:
            p = _lowest_eligible(weights, meta[PMIN], s)
        if counted:
            _assign_conn(indices, lo, hi, hdr, e_part, e_cnt, ctr, p, True)
        else:
            _assign_sets(indices, lo, hi, hdr, e_part, ctr, p, mark[p] != stamp[0])
        _place(weights, part, meta, v, p)
    if not counted and ctr[ENTRIES] > ctr[PEAK]:
        ctr[PEAK] = ctr[ENTRIES]


@njit(cache=True)
def _collect_truncated(indices, lo, hi, slots, lens, ell, save, mark, pids, indx, stamp):
    stamp[0] += 1
    st = stamp[0]
    active = 0
    for j in range(lo, hi):
        base = indices[j] * ell
        for t in range(lens[indices[j]]):
            i = slots[base + t]
            if mark[i] != st:
                mark[i] = st
                pids[active] = i
                save[active] = 1
                indx[i] = active
                active += 1
            else:
                save[indx[i]] += 1
    return active


@njit(cache=True)
def _drive_minmax_l(order, indptr, indices, start, stop, weights, part, meta, bn, bd,
                    slots, lens, seen, ctr, ell, save, mark, pids, indx, stamp, rng):
    K = weights.shape[0]
    for e in range(start, stop):
        v = order[e]
        lo = indptr[e]
        hi = indptr[e + 1]
        if hi == lo:
            _place(weights, part, meta, v, meta[PMIN])
            continue
        s = _slack(meta[NASSIGNED], K, bn, bd)
        active = _collect_truncated(indices, lo, hi, slots, lens, ell,
                                    save, mark, pids, indx, stamp)
        p = _select_active(active, pids, save, weights, meta[PMIN], s)
        if p == -1:
            p = _lowest_eligible(weights, meta[PMIN], s)
        for j in range(lo, hi):
            n = indices[j]
            _touch(seen, ctr, n)
            base = n * ell
            present = False
            for t in range(lens[n]):
                if slots[base + t] == p:
                    present = True
                    break
            if present:
                continue
            if lens[n] < ell:
                slots[base + lens[n]] = p
                lens[n] += 1
                ctr[ENTRIES] += 1
            else:
                slots[base + _rng.bounded(rng, ell)] = p
        ctr[PEAK] = ctr[ENTRIES]
        _place(weights, part, meta, v, p)


@njit(cache=True)
def _drive_bf(order, indptr, indices, start, stop, weights, part, meta, bn, bd,
              words, m, k, inserted):
    K = weights.shape[0]
    for e in range(start, stop):
        v = order[e]
        lo = indptr[e]
        hi = indptr[e + 1]
        if hi == lo:
            _place(weights, part, meta, v, meta[PMIN])
            continue
        s = _slack(meta[NASSIGNED], K, bn, bd)
        wmin = weights[meta[PMIN]]
        saved = -1
        p = -1
        for i in range(K):
            if weights[i] - wmin < s:
                c = 0
                for j in range(lo, hi):
                    if _bf_query(words, m, k, indices[j] * K + i):
                        c += 1
                if c > saved:
                    saved = c
                    p = i
        for j in range(lo, hi):
            _bf_insert(words, m, k, indices[j] * K + p)
        inserted[0] += hi - lo
        _place(weights, part, meta, v, p)


@njit(cache=True)
def _drive_mh(order, indptr, indices, start, stop, weights, part, meta, bn, bd, a, b, q):
    K = weights.shape[0]
    for e in range(start, stop):
        v = order[e]
        p = _minhash_part(indices, indptr[e], indptr[e + 1], a, b, q, K)
        if p == -1:
            p = meta[PMIN]
        else:
            s = _slack(meta[NASSIGNED], K, bn, bd)
            wmin = weights[meta[PMIN]]
            while weights[p] - wmin >= s:
                p = (p + 1) % K
        _place(weights, part, meta, v, p)


# ------------------------------------------------- per-element operations

def _prepare(state, elem):
    state.reserve(elem.vertex + 1)
    return elem.arrays()


def step_random(state, elem, rng):
    order, indptr, _ = _prepare(state, elem)
    _drive_random(order, indptr, 0, 1, state.weights, state.part, state.meta,
                  state.beta_num, state.beta_den, rng)
    return int(state.part[elem.vertex])


def step_minmax(state, p2n, elem):
    order, indptr, indices = _prepare(state, elem)
    if elem.nets:
        p2n.reserve(max(elem.nets) + 1)
    _drive_minmax(order, indptr, indices, 0, 1, state.weights, state.part, state.meta,
                  state.beta_num, state.beta_den, p2n.bits, p2n.seen, p2n.ctr)
    return int(state.part[elem.vertex])


def step_minmax_n2p(state, conn, scratch, elem):
    order, indptr, indices = _prepare(state, elem)
    if elem.nets:
        conn.reserve(max(elem.nets) + 1, elem.nets)
    _drive_n2p(order, indptr, indices, 0, 1, state.weights, state.part, state.meta,
               state.beta_num, state.beta_den, *conn.arrays(), *scratch.arrays(),
               conn.counted)
    return int(state.part[elem.vertex])


def step_minmax_l(state, parts, scratch, elem, rng):
    order, indptr, indices = _prepare(state, elem)
    if elem.nets:
        parts.reserve(max(elem.nets) + 1)
    _drive_minmax_l(order, indptr, indices, 0, 1, state.weights, state.part, state.meta,
                    state.beta_num, state.beta_den, parts.slots, parts.lens, parts.seen,
                    parts.ctr, parts.ell, *scratch.arrays(), rng)
    return int(state.part[elem.vertex])


def step_minmax_bf(state, bf, elem):
    order, indptr, indices = _prepare(state, elem)
    inserted = np.array([bf.inserted], dtype=np.int64)
    _drive_bf(order, indptr, indices, 0, 1, state.weights, state.part, state.meta,
              state.beta_num, state.beta_den, bf.words, bf.m, bf.k, inserted)
    bf.inserted = int(inserted[0])
    return int(state.part[elem.vertex])


def step_minmax_mh(state, fam, elem):
    order, indptr, indices = _prepare(state, elem)
    if elem.nets and max(elem.nets) >= fam.q:
        raise ValueError(f"net ids must stay below q={fam.q}")
    _drive_mh(order, indptr, indices, 0, 1, state.weights, state.part, state.meta,
              state.beta_num, state.beta_den, fam.a, fam.b, fam.q)
    return int(state.part[elem.vertex])


# ------------------------------------------------------------- whole runs

class _Runner:
    """Holds one algorithm's state for a stream of known header sizes."""

    def __init__(self, cfg, stream):
        self.cfg = cfg
        self.stream = stream
        self.state = PartitionState(cfg.K, stream.n_vertices, cfg.beta)
        self.rng = _rng.new_state(cfg.seed)
        alg = cfg.algorithm
        if alg == "minmax":
            self.p2n = PartToNet(cfg.K, stream.n_nets)
        elif alg == "minmax-n2p":
            self.conn = NetConnectivity(stream.n_nets, stream.n_pins)
            self.scratch = ActivePartScratch(cfg.K)
        elif alg == "minmax-l":
            self.trunc = TruncatedNetParts(stream.n_nets, cfg.ell)
            self.scratch = ActivePartScratch(cfg.K)
        elif alg == "minmax-bf":
            self.bf = BloomFilter(cfg.bf_bits, cfg.bf_hashes)
            self.inserted = np.zeros(1, dtype=np.int64)
        elif alg == "minmax-mh":
            self.fam = MinHashFamily.from_seed(cfg.mh_hashes, cfg.seed, cfg.mh_q)
            if stream.n_nets > self.fam.q:
                raise ValueError(f"net ids must stay below q={self.fam.q}")

    def advance(self, start, stop):
        st, s, alg = self.state, self.stream, self.cfg.algorithm
        common = (st.weights, st.part, st.meta, st.beta_num, st.beta_den)
        if alg == "random":
            _drive_random(s.order, s.indptr, start, stop, *common, self.rng)
        elif alg == "minmax":
            p = self.p2n
            _drive_minmax(s.order, s.indptr, s.indices, start, stop, *common,
                          p.bits, p.seen, p.ctr)
        elif alg == "minmax-n2p":
            _drive_n2p(s.order, s.indptr, s.indices, start, stop, *common,
                       *self.conn.arrays(), *self.scratch.arrays(), False)
        elif alg == "minmax-l":
            t = self.trunc
            _drive_minmax_l(s.order, s.indptr, s.indices, start, stop, *common,
                            t.slots, t.lens, t.seen, t.ctr, t.ell,
                            *self.scratch.arrays(), self.rng)
        elif alg == "minmax-bf":
            b = self.bf
            _drive_bf(s.order, s.indptr, s.indices, start, stop, *common,
                      b.words, b.m, b.k, self.inserted)
            b.inserted = int(self.inserted[0])
        else:
            f = self.fam
            _drive_mh(s.order, s.indptr, s.indices, start, stop, *common, f.a, f.b, f.q)

    def entries(self):
        """Exact connectivity entries, or None when the algorithm keeps none."""
        alg = self.cfg.algorithm
        if alg == "minmax":
            return self.p2n.entry_count()
        if alg == "minmax-n2p":
            return self.conn.entry_count()
        if alg == "minmax-l":
            return self.trunc.entry_count()
        return None

    def peak_entries(self):
        alg = self.cfg.algorithm
        if alg == "minmax-n2p":
            return self.conn.peak_entries
        return self.entries()

    def nets_seen(self):
        alg = self.cfg.algorithm
        if alg == "minmax":
            return int(self.p2n.ctr[NETS_SEEN])
        if alg == "minmax-n2p":
            return self.conn.nets_seen
        if alg == "minmax-l":
            return int(self.trunc.ctr[NETS_SEEN])
        return None

    def aux_ints(self):
        """Structural memory: integers (or 64-bit words) held for connectivity."""
        alg = self.cfg.algorithm
        if alg == "random":
            return 0
        if alg == "minmax-bf":
            return int(self.bf.words.shape[0])
        if alg == "minmax-mh":
            return 2 * self.fam.k
        return int(self.peak_entries())


@dataclass
class RunResult:
    algorithm: str
    K: int
    seed: int
    part: np.ndarray
    cut: int
    imbalance: int
    entries: int | None
    peak_entries: int | None
    aux_ints: int
    nets_seen: int
    pins: int
    wall_seconds: float
    empty_parts: int
    checkpoints: list = field(default_factory=list)
    flushes: list = field(default_factory=list)

    @property
    def exact_connectivity(self):
        """True when ``entries`` counts every (net, part) pair, so entries = cut + nets seen."""
        return self.entries is not None and not self.algorithm.startswith("minmax-l")

    @property
    def pins_per_second(self):
        return self.pins / self.wall_seconds if self.wall_seconds > 0 else float("inf")

    def stats(self):
        """Stats record; only ``elapsed_seconds`` varies between identical runs."""
        out = checkpoint_record(len(self.part), self.nets_seen, self.pins, self.cut,
                                self.imbalance, self.entries if self.entries is not None else 0,
                                self.wall_seconds)
        out.update(algorithm=self.algorithm, K=self.K, seed=self.seed,
                   peak_entries=self.peak_entries, aux_ints=self.aux_ints,
                   empty_parts=self.empty_parts, exact_connectivity=self.exact_connectivity)
        return out


def prefix_nets_seen(stream, upto):
    return int(np.unique(stream.indices[:stream.indptr[upto]]).shape[0])


def _checkpoint_positions(n, count):
    if not count or n == 0:
        return set()
    return {int(x) for x in np.linspace(0, n, count + 1)[1:].round()}


def run(config, stream, check=False, checkpoints=0):
    """Partition ``stream`` with ``config``; see RunResult for the outputs.

    With ``check`` the stream is consumed one element at a time and the
    weights, p_min and the balance bound are verified after every
    assignment.  ``checkpoints`` evenly spaced prefixes are additionally
    measured with the cut oracle.
    """
    config.validate()
    if config.K > stream.n_vertices:
        warnings.warn(f"K={config.K} exceeds the {stream.n_vertices} vertices; "
                      "some parts will stay empty", stacklevel=2)
    runner = _Runner(config, stream)
    state = runner.state
    n = len(stream)
    marks = _checkpoint_positions(n, checkpoints)
    records = []
    t0 = time.perf_counter()
    if not check and not marks:
        runner.advance(0, n)
    else:
        step = 1 if check else None
        stops = sorted(marks | {n}) if step is None else range(1, n + 1)
        pos = 0
        for stop in stops:
            slack = state.slack()
            runner.advance(pos, stop)
            pos = stop
            if check:
                state.check(slack=slack)
            if stop in marks:
                records.append(_checkpoint(runner, stop, time.perf_counter() - t0))
    wall = time.perf_counter() - t0
    return _result(runner, wall, records)


def _checkpoint(runner, upto, elapsed):
    stream, state = runner.stream, runner.state
    hg = Hypergraph.from_stream(stream, upto)
    seen = runner.nets_seen()
    entries = runner.entries()
    return checkpoint_record(state.i, seen if seen is not None else prefix_nets_seen(stream, upto),
                             int(stream.indptr[upto]), connectivity_cutsize(hg, state.part),
                             imbalance(state), entries if entries is not None else 0, elapsed)


def _result(runner, wall, records, flushes=()):
    stream, state, cfg = runner.stream, runner.state, runner.cfg
    part = state.part[:stream.n_vertices].copy()
    hg = Hypergraph.from_stream(stream)
    seen = runner.nets_seen()
    return RunResult(
        algorithm=cfg.algorithm, K=cfg.K, seed=cfg.seed, part=part,
        cut=connectivity_cutsize(hg, part), imbalance=imbalance(state),
        entries=runner.entries(), peak_entries=runner.peak_entries(),
        aux_ints=runner.aux_ints(),
        nets_seen=seen if seen is not None else prefix_nets_seen(stream, len(stream)),
        pins=stream.n_pins, wall_seconds=wall,
        empty_parts=int((state.weights == 0).sum()), checkpoints=records,
        flushes=list(flushes))
