"""Buffered refinement on top of MINMAX-N2P.

The stream is partitioned by MINMAX-N2P with pin counts per (net, part).
Selected elements are kept in a buffer whose load is measured in pins.
When the buffer fills, or the stream ends, every buffered vertex is
revisited ``passes`` times and may be moved to a part that shares more of
its nets.  Moves update the counts immediately, so later vertices in the
same pass see them.

Strategies differ in which vertices are buffered and which are re-placed:

=============  ===============================  =======================
strategy       buffered                         re-placed
=============  ===============================  =======================
``ref``        every vertex with a net          leave gain > 0
``ref-rlx``    every vertex with a net          always
``ref-rlx-sv`` degree <= small-degree threshold always
=============  ===============================  =======================

A move must keep ``max(weights) - min(weights) <= s`` after it lands.
Because removing a vertex can lower the minimum, this is checked against
the post-move weights rather than just ``weights[p] - weights[p_min] < s``.
The vacated part always passes, so a move never raises the cut.
"""
from dataclasses import dataclass
import time
import warnings

import numpy as np
from numba import njit

from .core import (H_LAM, PMIN, NASSIGNED, Hypergraph, InvariantError, NetConnectivity,
                   StreamElement, _assign_conn, _conn_remove, _find, _place, _slack,
                   _unplace, connectivity_cutsize, imbalance)
from .partitioners import (ActivePartScratch, PartitionerConfig, _collect_active,
                           _drive_n2p, _Runner, _result)

STRATEGIES = ("ref", "ref-rlx", "ref-rlx-sv")
_CODES = {name: code for code, name in enumerate(STRATEGIES)}
REF, REF_RLX, REF_RLX_SV = 0, 1, 2

# buffer meta slots
_COUNT, _LOAD, _DEGSUM, _SEEN, _TOO_BIG = range(5)


@dataclass
class RefineConfig:
    strategy: str = "ref-rlx"
    passes: int = 4
    theta: float = 0.15
    buffer_pins: int | None = None
    sv_threshold: int | None = None

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown refinement strategy {self.strategy!r}")
        if self.passes < 1:
            raise ValueError("passes must be at least 1")
        if self.buffer_pins is None and not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.buffer_pins is not None and self.buffer_pins < 0:
            raise ValueError("buffer_pins must be non-negative")
        return self

    def capacity(self, n_pins):
        if self.buffer_pins is not None:
            return int(self.buffer_pins)
        return int(self.theta * n_pins)


class RefineBuffer:
    """Stream elements awaiting refinement; load counts stored pins."""

    def __init__(self, capacity):
        self.capacity = int(capacity)
        self.elements = []
        self.load = 0

    def __len__(self):
        return len(self.elements)

    def fits(self, elem):
        return self.load + len(elem.nets) <= self.capacity

    def insert(self, elem):
        if not self.fits(elem):
            return False
        self.elements.append(elem)
        self.load += len(elem.nets)
        return True

    def is_full(self):
        return self.load >= self.capacity

    def clear(self):
        self.elements.clear()
        self.load = 0

    def arrays(self):
        order = np.array([e.vertex for e in self.elements], dtype=np.int64)
        indptr = np.zeros(len(self.elements) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(e.nets) for e in self.elements])
        indices = np.array([n for e in self.elements for n in e.nets], dtype=np.int64)
        return order, indptr, indices


def is_bufferable(strategy, elem, threshold=None):
    """REF / REF_RLX keep everything; REF_RLX_SV keeps degree <= threshold.

    Elements without nets are never buffered: they cannot affect the cut.
    """
    deg = len(elem.nets)
    if deg == 0:
        return False
    if strategy == "ref-rlx-sv":
        if threshold is None:
            raise ValueError("ref-rlx-sv needs a degree threshold")
        return deg <= threshold
    return True


def is_moveable(strategy, gain):
    if strategy == "ref":
        return gain > 0
    return True


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _leave_gain(indices, lo, hi, p, hdr, e_part, e_cnt):
    g = 0
    for j in range(lo, hi):
        n = indices[j]
        e = _find(hdr, e_part, n, p)
        if e == -1 or e_cnt[e] <= 0:
            return -1
        if e_cnt[e] == 1 and hdr[n, H_LAM] > 1:
            g += 1
    return g


@njit(cache=True)
def _remove_vertex(v, indices, lo, hi, weights, part, meta,
                   hdr, e_part, e_cnt, ctr):
    p = part[v]
    for j in range(lo, hi):
        _conn_remove(hdr, e_part, e_cnt, ctr, indices[j], p)
    _unplace(weights, part, meta, v)
    return p


@njit(cache=True)
def _weight_profile(weights):
    lo = weights[0]
    hi = weights[0]
    nlo = 0
    for k in range(weights.shape[0]):
        w = weights[k]
        if w > hi:
            hi = w
        if w < lo:
            lo = w
    lo2 = hi + 1
    for k in range(weights.shape[0]):
        w = weights[k]
        if w == lo:
            nlo += 1
        elif w < lo2:
            lo2 = w
    if nlo > 1:
        lo2 = lo
    return lo, nlo, lo2, hi


@njit(cache=True)
def _move_ok(w, lo, nlo, lo2, hi, s):
    if w - lo >= s:
        return False
    newmin = lo
    if w == lo and nlo == 1:
        newmin = lo + 1 if lo + 1 < lo2 else lo2
    newmax = hi if hi > w + 1 else w + 1
    return newmax - newmin <= s


@njit(cache=True)
def _refine_select(active, pids, save, weights, s):
    lo, nlo, lo2, hi = _weight_profile(weights)
    best = -1
    saved = -1
    for j in range(active):
        i = pids[j]
        if _move_ok(weights[i], lo, nlo, lo2, hi, s):
            if save[j] > saved or (save[j] == saved and i < best):
                saved = save[j]
                best = i
    if best == -1:
        for k in range(weights.shape[0]):
            if _move_ok(weights[k], lo, nlo, lo2, hi, s):
                return k
    return best


@njit(cache=True)
def _refine_vertex(e, order, indptr, indices, strategy, weights, part, meta, bn, bd,
                   hdr, e_part, e_cnt, ctr,
                   save, mark, pids, indx, stamp):
    """Revisit one buffered element; returns its new part or -1 if left alone."""
    v = order[e]
    lo = indptr[e]
    hi = indptr[e + 1]
    g = _leave_gain(indices, lo, hi, part[v], hdr, e_part, e_cnt)
    if g < 0:
        raise ValueError("pin counts missing for a buffered vertex")
    if strategy == REF and g <= 0:
        return -1
    _remove_vertex(v, indices, lo, hi, weights, part, meta,
                   hdr, e_part, e_cnt, ctr)
    s = _slack(meta[NASSIGNED], weights.shape[0], bn, bd)
    active = _collect_active(indices, lo, hi, hdr, e_part,
                             save, mark, pids, indx, stamp)
    p = _refine_select(active, pids, save, weights, s)
    _assign_conn(indices, lo, hi, hdr, e_part, e_cnt, ctr, p, True)
    _place(weights, part, meta, v, p)
    return p


@njit(cache=True)
def _flush(order, indptr, indices, n, passes, strategy, weights, part, meta, bn, bd,
           hdr, e_part, e_cnt, ctr,
           save, mark, pids, indx, stamp):
    moves = 0
    for _ in range(passes):
        for e in range(n):
            old = part[order[e]]
            p = _refine_vertex(e, order, indptr, indices, strategy, weights, part, meta,
                               bn, bd, hdr, e_part, e_cnt, ctr,
                               save, mark, pids, indx, stamp)
            if p != -1 and p != old:
                moves += 1
    return moves


@njit(cache=True)
def _drive_refined(order, indptr, indices, first, stop, weights, part, meta, bn, bd,
                   hdr, e_part, e_cnt, ctr,
                   save, mark, pids, indx, stamp,
                   buf, bmeta, B, strategy, sv_threshold):
    """Stream elements until the buffer needs a flush; returns (next position, flush?)."""
    for e in range(first, stop):
        _drive_n2p(order, indptr, indices, e, e + 1, weights, part, meta, bn, bd,
                   hdr, e_part, e_cnt, ctr,
                   save, mark, pids, indx, stamp, True)
        deg = indptr[e + 1] - indptr[e]
        bmeta[_DEGSUM] += deg
        bmeta[_SEEN] += 1
        if deg == 0:
            continue
        if strategy == REF_RLX_SV:
            thr = sv_threshold
            if thr < 0:
                thr = (bmeta[_DEGSUM] + bmeta[_SEEN] - 1) // bmeta[_SEEN]
            if deg > thr:
                continue
        if deg > B:
            bmeta[_TOO_BIG] += 1
            continue
        if bmeta[_LOAD] + deg > B:
            return e + 1, True
        buf[bmeta[_COUNT]] = e
        bmeta[_COUNT] += 1
        bmeta[_LOAD] += deg
        if bmeta[_LOAD] == B:
            return e + 1, True
    return stop, False


# ------------------------------------------------- per-element operations

def leave_gain(conn, elem, p):
    """Cut reduction from taking ``elem.vertex`` out of part ``p``."""
    if not conn.counted:
        raise InvariantError("leave_gain needs counted connectivity")
    _, indptr, indices = elem.arrays()
    g = _leave_gain(indices, 0, indptr[1], p, conn.hdr, conn.e_part, conn.e_cnt)
    if g < 0:
        raise InvariantError(f"vertex {elem.vertex} has a net with no pins counted in part {p}")
    return int(g)


def remove_vertex(state, conn, elem):
    if not conn.counted:
        raise InvariantError("remove_vertex needs counted connectivity")
    if elem.vertex >= state.part.shape[0] or state.part[elem.vertex] < 0:
        raise InvariantError(f"vertex {elem.vertex} is not assigned")
    _, indptr, indices = elem.arrays()
    try:
        _remove_vertex(elem.vertex, indices, 0, indptr[1], state.weights, state.part,
                       state.meta, conn.hdr, conn.e_part,
                       conn.e_cnt, conn.ctr)
    except ValueError as exc:
        raise InvariantError(str(exc)) from None
    return state


def refine_flush(state, conn, buf, cfg, scratch=None, trace_hg=None, check=False,
                 stream_position=None):
    """Sweep the buffer ``cfg.passes`` times, then empty it.

    With ``trace_hg`` (the hypergraph of everything assigned so far) the cut
    is recomputed from scratch after every examined vertex and returned in
    ``move_cuts``; ``check`` also verifies the balance bound after each move.
    """
    if not conn.counted:
        raise InvariantError("refinement needs counted connectivity")
    scratch = scratch or ActivePartScratch(state.K)
    order, indptr, indices = buf.arrays()
    record = _sweep(state, conn, scratch, order, indptr, indices, cfg, trace_hg, check)
    record["stream_position"] = stream_position if stream_position is not None else state.i
    buf.clear()
    return record


def _sweep(state, conn, scratch, order, indptr, indices, cfg, trace_hg, check):
    code = _CODES[cfg.strategy]
    n = order.shape[0]
    cut_before = conn.cut
    args = (state.weights, state.part, state.meta, state.beta_num, state.beta_den,
            *conn.arrays(), *scratch.arrays())
    record = {"cut_before": cut_before}
    if trace_hg is None and not check:
        moves = _flush(order, indptr, indices, n, cfg.passes, code, *args)
    else:
        moves = 0
        cuts = []
        for _ in range(cfg.passes):
            for e in range(n):
                v = order[e]
                old = state.part[v]
                slack_before = int(_slack(state.meta[NASSIGNED] - 1, state.K,
                                          state.beta_num, state.beta_den))
                p = _refine_vertex(e, order, indptr, indices, code, *args)
                if p == -1:
                    continue
                moves += p != old
                if check:
                    state.check(slack=slack_before)
                if trace_hg is not None:
                    cuts.append(connectivity_cutsize(trace_hg, state.part))
        if trace_hg is not None:
            record["move_cuts"] = cuts
    record.update(cut_after=conn.cut, moves=int(moves), pass_count=cfg.passes)
    return record


# ------------------------------------------------------------- whole runs

def run_refined(config, refine_cfg, stream, check=False, trace=False):
    """MINMAX-N2P with buffered refinement.

    Returns a RunResult whose ``flushes`` lists one record per flush:
    ``{stream_position, cut_before, cut_after, moves, pass_count}``.  With
    ``trace`` each record also carries ``move_cuts``, the oracle cut after
    every examined vertex.  With ``check`` balance is verified after every
    assignment and move, and after every flush the pin counts are audited
    and the tracked cut is compared with the oracle.
    """
    config = PartitionerConfig(**{**config.__dict__, "algorithm": "minmax-n2p"}).validate()
    refine_cfg.validate()
    if config.K > stream.n_vertices:
        warnings.warn(f"K={config.K} exceeds the {stream.n_vertices} vertices", stacklevel=2)
    runner = _Runner(config, stream)
    runner.conn = NetConnectivity(stream.n_nets, stream.n_pins, counted=True)
    state, conn, scratch = runner.state, runner.conn, runner.scratch
    B = refine_cfg.capacity(stream.n_pins)
    code = _CODES[refine_cfg.strategy]
    thr = -1 if refine_cfg.sv_threshold is None else int(refine_cfg.sv_threshold)
    buf = np.zeros(min(len(stream), B) + 1, dtype=np.int64)
    bmeta = np.zeros(5, dtype=np.int64)
    flushes = []

    def flush(pos):
        count = int(bmeta[_COUNT])
        idx = buf[:count]
        order = stream.order[idx]
        deg = stream.indptr[idx + 1] - stream.indptr[idx]
        indptr = np.zeros(count + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        offs = np.arange(int(indptr[-1]), dtype=np.int64) - np.repeat(indptr[:-1], deg)
        indices = stream.indices[np.repeat(stream.indptr[idx], deg) + offs]
        hg = Hypergraph.from_stream(stream, pos) if (check or trace) else None
        if check:
            _audit(conn, state, hg)
        rec = _sweep(state, conn, scratch, order, indptr, indices, refine_cfg,
                     hg if trace else None, check)
        if check:
            _audit(conn, state, hg)
        rec["stream_position"] = int(pos)
        flushes.append({k: rec[k] for k in ("stream_position", "cut_before", "cut_after",
                                            "moves", "pass_count", "move_cuts") if k in rec})
        bmeta[_COUNT] = 0
        bmeta[_LOAD] = 0

    n = len(stream)
    t0 = time.perf_counter()
    pos = 0
    while pos < n:
        stop = pos + 1 if check else n
        slack = state.slack()
        pos, need = _drive_refined(
            stream.order, stream.indptr, stream.indices, pos, stop,
            state.weights, state.part, state.meta, state.beta_num, state.beta_den,
            *conn.arrays(), *scratch.arrays(), buf, bmeta, B, code, thr)
        if check:
            state.check(slack=slack)
        if need:
            flush(pos)
    if bmeta[_COUNT]:
        flush(pos)
    wall = time.perf_counter() - t0
    if bmeta[_TOO_BIG]:
        warnings.warn(f"{int(bmeta[_TOO_BIG])} vertices have more nets than the "
                      f"{B}-pin buffer and were not buffered", stacklevel=2)
    result = _result(runner, wall, [], flushes)
    result.algorithm = f"minmax-n2p+{refine_cfg.strategy}"
    result.aux_ints = 2 * int(conn.peak_entries) + B
    return result


def _audit(conn, state, hg):
    """Counted-mode audit and oracle agreement for the assigned prefix."""
    assigned = np.diff(hg.nptr)
    conn.audit(assigned)
    oracle = connectivity_cutsize(hg, state.part)
    if oracle != conn.cut:
        raise InvariantError(f"tracked cut {conn.cut} != oracle cut {oracle}")
