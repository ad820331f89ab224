"""Command-line front end.

    streamhp convert  MATRIX OUT.hs [--seed S]
    streamhp generate OUT.mtx [--vertices V] [--pins P] [--seed S]
    streamhp partition STREAM --alg A --parts K [...] [--out PART] [--stats JSON]
    streamhp evaluate INPUT PART --parts K
    streamhp bench MANIFEST [--out CSV] [--jobs J]

Exit codes: 0 success, 1 usage, 2 input error, 3 internal invariant failure.
"""
import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys

import numpy as np

from .core import (Hypergraph, InvariantError, boundary_vertices, connectivity_cutsize,
                   net_connectivities, read_partition, write_partition)
from .generators import synthetic_pattern
from .ingest import (MAGIC, MatrixMarketError, StreamFile, StreamFormatError, column_net,
                     read_matrix, stream_order, write_matrix)
from .partitioners import ALGORITHMS, PartitionerConfig, run
from .refine import STRATEGIES, RefineConfig, run_refined
from .sketch import DEFAULT_BF_BITS, DEFAULT_HASHES

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3

BENCH_HEADER = ["algorithm", "K", "seed", "cut", "imbalance", "entries", "aux_ints",
                "wall_s", "pins_per_s"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is our input-error code
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    ap = _Parser(prog="streamhp", description="Streaming hypergraph partitioning.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convert", help="Matrix Market file -> seeded stream file")
    c.add_argument("matrix")
    c.add_argument("out")
    c.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("generate", help="write a synthetic Matrix Market pattern")
    g.add_argument("out")
    g.add_argument("--vertices", type=int, default=10_000)
    g.add_argument("--pins", type=int, default=100_000)
    g.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("partition", help="run a partitioner over a stream file")
    p.add_argument("stream")
    p.add_argument("--alg", choices=ALGORITHMS, default="minmax-n2p")
    p.add_argument("--parts", "-K", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--ell", type=int)
    p.add_argument("--bf-bits", type=int)
    p.add_argument("--bf-hashes", type=int)
    p.add_argument("--mh-hashes", type=int)
    p.add_argument("--refine", choices=("off",) + STRATEGIES, default="off")
    p.add_argument("--passes", type=int)
    p.add_argument("--buffer-frac", type=float)
    p.add_argument("--buffer-pins", type=int)
    p.add_argument("--sv-threshold", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="part vector, one part id per line")
    p.add_argument("--stats", help="stats JSON (default: stdout)")
    p.add_argument("--trace", help="flush trace, JSON lines")
    p.add_argument("--checkpoints", type=int, default=0)
    p.add_argument("--verify", action="store_true",
                   help="check invariants per step and re-derive cut, entries, imbalance")

    e = sub.add_parser("evaluate", help="metrics of a part vector")
    e.add_argument("input", help="stream file or Matrix Market file")
    e.add_argument("part")
    e.add_argument("--parts", "-K", type=int, required=True)

    b = sub.add_parser("bench", help="run a JSON manifest, write CSV")
    b.add_argument("manifest")
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.add_argument("--jobs", type=int, default=1)
    return ap


# ------------------------------------------------------------- validation

_ALG_FLAGS = {"ell": "minmax-l", "bf_bits": "minmax-bf", "bf_hashes": "minmax-bf",
              "mh_hashes": "minmax-mh"}
_REFINE_FLAGS = ("passes", "buffer_frac", "buffer_pins", "sv_threshold")


def partition_configs(args):
    """Turn parsed flags into (PartitionerConfig, RefineConfig or None).

    Raises UsageError for any combination that makes no sense, before any
    input is read.
    """
    for name, alg in _ALG_FLAGS.items():
        if getattr(args, name) is not None and args.alg != alg:
            raise UsageError(f"--{name.replace('_', '-')} only applies to --alg {alg}")
    if args.alg == "minmax-l" and args.ell is None:
        raise UsageError("--alg minmax-l needs --ell")
    refine = args.refine != "off"
    if not refine:
        for name in _REFINE_FLAGS:
            if getattr(args, name) is not None:
                raise UsageError(f"--{name.replace('_', '-')} needs --refine")
    else:
        if args.alg != "minmax-n2p":
            raise UsageError("--refine runs on top of --alg minmax-n2p only")
        if args.buffer_frac is not None and args.buffer_pins is not None:
            raise UsageError("give --buffer-frac or --buffer-pins, not both")
        if args.sv_threshold is not None and args.refine != "ref-rlx-sv":
            raise UsageError("--sv-threshold only applies to --refine ref-rlx-sv")
    if args.checkpoints < 0:
        raise UsageError("--checkpoints must be non-negative")

    cfg = PartitionerConfig(
        algorithm=args.alg, K=args.parts, beta=args.beta, ell=args.ell,
        bf_bits=args.bf_bits if args.bf_bits is not None else DEFAULT_BF_BITS,
        bf_hashes=args.bf_hashes if args.bf_hashes is not None else DEFAULT_HASHES,
        mh_hashes=args.mh_hashes if args.mh_hashes is not None else DEFAULT_HASHES,
        seed=args.seed)
    rcfg = None
    if refine:
        rcfg = RefineConfig(
            strategy=args.refine,
            passes=args.passes if args.passes is not None else 4,
            theta=args.buffer_frac if args.buffer_frac is not None else 0.15,
            buffer_pins=args.buffer_pins, sv_threshold=args.sv_threshold)
    try:
        cfg.validate()
        if rcfg is not None:
            rcfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, rcfg


# --------------------------------------------------------------- commands

def load_hypergraph(path):
    """A stream file (by magic) or a Matrix Market file, as a Hypergraph."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
    if magic == MAGIC:
        return Hypergraph.from_stream(StreamFile.read(path))
    return column_net(read_matrix(path))


def cmd_convert(args):
    hg = column_net(read_matrix(args.matrix))
    stream = stream_order(hg, args.seed)
    stream.write(args.out)
    print(f"{args.out}: {stream.n_vertices} vertices, {stream.n_nets} nets, "
          f"{stream.n_pins} pins, seed {args.seed}", file=sys.stderr)


def cmd_generate(args):
    if args.vertices < 1 or args.pins < 1:
        raise UsageError("--vertices and --pins must be positive")
    m = synthetic_pattern(args.vertices, args.pins, seed=args.seed)
    write_matrix(args.out, m)
    print(f"{args.out}: {m.rows}x{m.cols}, {m.nnz} nonzeros", file=sys.stderr)


def execute(cfg, rcfg, stream, verify=False, checkpoints=0):
    if rcfg is None:
        return run(cfg, stream, check=verify, checkpoints=checkpoints)
    return run_refined(cfg, rcfg, stream, check=verify)


def verify_result(result, stream):
    """Re-derive cut, imbalance and entries from the outputs alone."""
    hg = Hypergraph.from_stream(stream)
    cut = connectivity_cutsize(hg, result.part)
    if cut != result.cut:
        raise InvariantError(f"reported cut {result.cut} != recomputed {cut}")
    weights = np.bincount(result.part, minlength=result.K)
    if int(weights.max() - weights.min()) != result.imbalance:
        raise InvariantError("reported imbalance does not match the part vector")
    if result.exact_connectivity:
        seen = int((np.diff(hg.nptr) > 0).sum())
        if result.entries != cut + seen:
            raise InvariantError(f"entries {result.entries} != cut {cut} + nets seen {seen}")


def cmd_partition(args):
    cfg, rcfg = partition_configs(args)
    stream = StreamFile.read(args.stream)
    result = execute(cfg, rcfg, stream, verify=args.verify, checkpoints=args.checkpoints)
    if args.verify:
        verify_result(result, stream)
    stats = result.stats()
    stats["verified"] = bool(args.verify)
    if args.checkpoints:
        stats["checkpoints"] = result.checkpoints
    if rcfg is not None:
        stats["flushes"] = result.flushes
    if args.out:
        write_partition(args.out, result.part)
    if args.trace:
        with open(args.trace, "w") as f:
            for rec in result.flushes:
                f.write(json.dumps(rec, sort_keys=True) + "\n")
    text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
    if args.stats:
        with open(args.stats, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def evaluate(hg, part, K):
    part = np.asarray(part, dtype=np.int64)
    if part.shape[0] != hg.n_vertices:
        raise ValueError(f"part vector has {part.shape[0]} entries for {hg.n_vertices} vertices")
    if part.size and (part.min() < 0 or part.max() >= K):
        bad = int(np.flatnonzero((part < 0) | (part >= K))[0])
        raise ValueError(f"vertex {bad} has part {int(part[bad])} outside [0, {K})")
    lam = net_connectivities(hg, part)
    hist = np.bincount(lam) if lam.size else np.zeros(0, dtype=np.int64)
    weights = np.bincount(part, minlength=K)
    return {
        "cut": connectivity_cutsize(hg, part),
        "lambda_histogram": {str(k): int(c) for k, c in enumerate(hist) if c},
        "imbalance": int(weights.max() - weights.min()),
        "boundary_vertices": int(boundary_vertices(hg, part).shape[0]),
        "vertices": hg.n_vertices,
        "nets": hg.n_nets,
        "pins": hg.n_pins,
        "K": K,
    }


def cmd_evaluate(args):
    if args.parts < 1:
        raise UsageError("--parts must be positive")
    hg = load_hypergraph(args.input)
    part = read_partition(args.part)
    sys.stdout.write(json.dumps(evaluate(hg, part, args.parts), indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ bench

def load_manifest(path):
    """Expand a manifest into a list of run runs.

    The manifest is a JSON list (or ``{"runs": [...]}``) of entries like::

        {"stream": "a.hs", "algorithm": "minmax-n2p", "K": 256,
         "params": {"ell": 5}, "seeds": [1, 2, 3]}

    ``matrix`` may replace ``stream``; the matrix is then streamed once per
    seed with that seed as the ordering seed.  ``params`` may carry any
    PartitionerConfig field plus ``refine``, ``passes``, ``theta``,
    ``buffer_pins`` and ``sv_threshold``.  Relative paths are resolved
    against the manifest's directory.
    """
    with open(path) as f:
        data = json.load(f)
    if isinstance(data, dict):
        data = data.get("runs", [])
    if not isinstance(data, list):
        raise ValueError(f"{path}: manifest must be a list of runs")
    base = os.path.dirname(os.path.abspath(path))
    runs = []
    for entry in data:
        seeds = entry.get("seeds", [entry.get("seed", 0)])
        for seed in seeds:
            job = dict(entry)
            job.pop("seeds", None)
            job["seed"] = int(seed)
            for key in ("stream", "matrix"):
                if key in job:
                    job[key] = os.path.join(base, job[key])
            runs.append(job)
    return runs


_REFINE_KEYS = ("passes", "theta", "buffer_pins", "sv_threshold")


def bench_one(job):
    """One manifest run -> CSV row dict; failures land in the row."""
    alg = job.get("algorithm", "?")
    row = {"algorithm": alg, "K": job.get("K", ""), "seed": job.get("seed", "")}
    try:
        params = dict(job.get("params", {}))
        strategy = params.pop("refine", None)
        rparams = {k: params.pop(k) for k in _REFINE_KEYS if k in params}
        cfg = PartitionerConfig(algorithm=alg, K=int(job["K"]), seed=job["seed"], **params)
        rcfg = RefineConfig(strategy=strategy, **rparams) if strategy else None
        if "stream" in job:
            stream = StreamFile.read(job["stream"])
        else:
            stream = stream_order(column_net(read_matrix(job["matrix"])), job["seed"])
        result = execute(cfg, rcfg, stream)
        row.update(algorithm=result.algorithm, cut=result.cut, imbalance=result.imbalance,
                   entries="" if result.entries is None else result.entries,
                   aux_ints=result.aux_ints, wall_s=f"{result.wall_seconds:.6f}",
                   pins_per_s=f"{result.pins_per_second:.1f}")
    except Exception as exc:  # noqa: BLE001  recorded in-row, the bench continues
        row["cut"] = f"error: {type(exc).__name__}: {exc}"
    return row


def bench_csv(runs, jobs=1):
    if jobs > 1 and len(runs) > 1:
        with concurrent.futures.ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(bench_one, runs))
    else:
        rows = [bench_one(job) for job in runs]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_HEADER, restval="", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_bench(args):
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    text = bench_csv(load_manifest(args.manifest), args.jobs)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


COMMANDS = {"convert": cmd_convert, "generate": cmd_generate, "partition": cmd_partition,
            "evaluate": cmd_evaluate, "bench": cmd_bench}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, ValueError, MatrixMarketError, StreamFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
