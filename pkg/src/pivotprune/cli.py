"""Command-line interface: extract -> pivots -> index -> query/knn -> verify, plus bench.

Machine-readable output (JSON / JSON lines) goes to ``--output`` or stdout;
human-readable summaries go to stderr. Every command accepts
``--config FILE``, an INI file whose ``[pivotprune]`` section sets any long
option by name (dashes or underscores); command-line flags win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import synth
from .errors import PivotPruneError
from .index import build_index, load_index, save_index
from .ingest import (
    SuffixSpec,
    dataset_from_dict,
    extract_suffixes,
    load_dataset,
    parse_csv,
    save_dataset,
)
from .metricspace import DISTANCE_KINDS, Dataset, DistanceSpec, Metric, Suffix, featurize_bag_of_activities
from .oracle import verify
from .pivots import default_k, greedy_farthest_point, load_pivots, save_pivots
from .query import DEFAULT_BATCH_SIZE, KnnMode, PruneStats, RangeMode, batch_query, write_results


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _emit_json(doc, path) -> None:
    with _output(path) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


# -- queries -----------------------------------------------------------------

def _remap(q: Suffix, qalpha: dict, alphabet: dict) -> Suffix:
    names = {v: k for k, v in qalpha.items()}
    try:
        acts = tuple(alphabet[names[a]] for a in q.activities)
    except KeyError as exc:
        raise PivotPruneError(f"query {q.id!r} uses activity {exc} unknown to the dataset") from None
    return Suffix(q.id, acts, q.features, q.outcome)


def load_queries(args, data: Dataset) -> list[Suffix]:
    """Queries come from a dataset file, an id-per-line file, or a seeded sample of rows."""
    if args.queries:
        text = Path(args.queries).read_text(encoding="utf-8")
        if text.lstrip().startswith("{"):
            qdata = dataset_from_dict(json.loads(text))
            if dict(qdata.alphabet) == dict(data.alphabet):
                return list(qdata)
            return [_remap(q, dict(qdata.alphabet), dict(data.alphabet)) for q in qdata]
        return [data[data.row_of(line.strip())] for line in text.splitlines() if line.strip()]
    if args.sample_queries:
        rng = np.random.default_rng(args.rng_seed)
        rows = rng.choice(len(data), size=min(args.sample_queries, len(data)), replace=False)
        return [data[int(i)] for i in sorted(rows.tolist())]
    raise PivotPruneError("no queries: pass --queries FILE or --sample-queries N")


# -- commands ----------------------------------------------------------------

def cmd_extract(args) -> int:
    log = parse_csv(args.log)
    spec = SuffixSpec(args.min_length, args.max_length, not args.no_full_trace)
    data = extract_suffixes(log, spec)
    if args.featurize:
        data = featurize_bag_of_activities(data)
    save_dataset(data, args.output)
    _note(f"{len(log.cases)} cases, {len(data.alphabet)} activities -> {len(data)} suffixes "
          f"written to {args.output}")
    return 0


def cmd_synth(args) -> int:
    if args.kind == "vectors":
        data, queries = synth.clustered_vectors(args.n, args.dim, args.clusters, args.rng_seed,
                                                n_queries=args.n_queries)
    else:
        data, queries = synth.mutated_sequences(args.n, args.clusters, rng_seed=args.rng_seed,
                                                n_queries=args.n_queries)
    save_dataset(data, args.output)
    if args.queries_output:
        save_dataset(Dataset(tuple(queries), data.alphabet, data.feature_dim), args.queries_output)
    _note(f"{len(data)} {args.kind} written to {args.output}")
    return 0


def cmd_pivots(args) -> int:
    data = load_dataset(args.dataset)
    spec = DistanceSpec(args.distance)
    k = args.k if args.k else default_k(len(data))
    pivots = greedy_farthest_point(data, spec, k, args.seed_index)
    if args.output:
        save_pivots(pivots, data, args.output)
    doc = {
        "distance": spec.kind,
        "k": len(pivots),
        "pivot_indices": list(pivots.pivot_indices),
        "pivot_ids": [data[i].id for i in pivots.pivot_indices],
        "coverage_radius": pivots.coverage_radius,
    }
    print(json.dumps(doc))
    _note(f"K={len(pivots)} pivots, coverage radius {pivots.coverage_radius:.6g}")
    return 0


def cmd_index(args) -> int:
    data = load_dataset(args.dataset)
    pivots = load_pivots(args.pivots, data)
    spec = DistanceSpec(args.distance) if args.distance else pivots.distance_spec
    table = build_index(data, spec, pivots, workers=args.workers)
    meta, binary = save_index(table, args.output)
    _note(f"{table.n}x{table.k} {spec.kind} table written to {meta} and {binary}")
    return 0


def _run_queries(args, mode) -> int:
    data = load_dataset(args.dataset)
    table = load_index(args.index, data)
    queries = load_queries(args, data)

    def progress(done, total):
        _note(f"batch done: {done}/{total} queries")

    batch = batch_query(table, data, queries, mode, args.batch_size, args.workers,
                        on_batch=progress)
    with _output(args.output) as fh:
        write_results(batch.results, fh)
    _print_stats(batch.stats, len(data), len(queries))
    return 0


def _print_stats(stats: PruneStats, n: int, n_queries: int) -> None:
    baseline = n * n_queries
    ratio = stats.evaluations / baseline if baseline else 0.0
    _note(f"candidates={stats.candidates} pruned_lb={stats.pruned_lb} "
          f"accepted_ub={stats.accepted_ub} computed={stats.computed} "
          f"pivot_evals={stats.pivot_evals} ratio_vs_brute_force={ratio:.4f}")


def cmd_query(args) -> int:
    return _run_queries(args, RangeMode(args.tau, args.exact_distances))


def cmd_knn(args) -> int:
    return _run_queries(args, KnnMode(args.k))


def cmd_verify(args) -> int:
    if (args.tau is None) == (args.k is None):
        raise PivotPruneError("verify needs exactly one of --tau or --k")
    data = load_dataset(args.dataset)
    table = load_index(args.index, data)
    queries = load_queries(args, data)
    mode = KnnMode(args.k) if args.k is not None else RangeMode(args.tau, args.exact_distances)
    report = verify(table, data, queries, mode, workers=args.workers)
    _emit_json(report.to_dict(), args.output)
    _note(f"queries={report.queries_checked} accuracy={report.accuracy:.4f} "
          f"evaluation_ratio={report.evaluation_ratio:.4f} mismatches={len(report.mismatches)}")
    return 0 if report.accuracy == 1.0 else 1


def run_bench(n: int, clusters: int, dim: int, k_pivots, n_queries: int, rng_seed: int,
              percentile: float = 5.0, distance: str = "euclidean", workers: int = 1,
              batch_size: int = DEFAULT_BATCH_SIZE) -> dict:
    """Count exact evaluations of pruned range search against brute force
    on seeded clustered data. Deterministic for fixed arguments."""
    spec = DistanceSpec(distance)
    if distance == "levenshtein":
        data, queries = synth.mutated_sequences(n, clusters, rng_seed=rng_seed, n_queries=n_queries)
    else:
        data, queries = synth.clustered_vectors(n, dim, clusters, rng_seed, n_queries=n_queries)
    metric = Metric(spec, data)
    tau = float(synth.sample_tau(data, spec, percentile, rng_seed=rng_seed, metric=metric))
    k_pivots = sorted(set(k_pivots))
    pivots = greedy_farthest_point(data, spec, max(k_pivots), metric=metric)
    full = build_index(data, spec, pivots, metric=metric)

    rows = []
    baseline = len(data) * len(queries)
    for k in k_pivots:
        table = full.prefix(k, data) if k < len(pivots) else full
        start = time.perf_counter()
        batch = batch_query(table, data, queries, RangeMode(tau), batch_size, workers,
                            metric=metric)
        elapsed = time.perf_counter() - start
        s = batch.stats
        rows.append({
            "k": k,
            "computed": s.computed,
            "pruned_lb": s.pruned_lb,
            "accepted_ub": s.accepted_ub,
            "pivot_evals": s.pivot_evals,
            "baseline_evals": baseline,
            "evaluation_ratio": s.evaluations / baseline,
            "_seconds": elapsed,
        })
    return {
        "config": {"n": n, "clusters": clusters, "dim": dim, "queries": n_queries,
                   "rng_seed": rng_seed, "percentile": percentile, "distance": distance},
        "tau": tau,
        "rows": rows,
    }


def cmd_bench(args) -> int:
    result = run_bench(args.n, args.clusters, args.dim, args.k_pivots, args.n_queries,
                       args.rng_seed, args.percentile, args.distance, args.workers,
                       args.batch_size)
    _note(f"{'K':>4} {'computed':>10} {'pruned_lb':>10} {'accepted_ub':>11} "
          f"{'ratio':>8} {'seconds':>8}")
    for r in result["rows"]:
        _note(f"{r['k']:>4} {r['computed']:>10} {r['pruned_lb']:>10} {r['accepted_ub']:>11} "
              f"{r['evaluation_ratio']:>8.4f} {r.pop('_seconds'):>8.2f}")
    _emit_json(result, args.output)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pivotprune", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="INI file with a [pivotprune] section of defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    workers_default = os.cpu_count() or 1

    def common(p, out_required=False):
        p.add_argument("--config", help=argparse.SUPPRESS)
        p.add_argument("-o", "--output", required=out_required,
                       help="output path" + ("" if out_required else " (default: stdout)"))

    def query_inputs(p):
        p.add_argument("dataset")
        p.add_argument("--index", required=True, help="index base path (<name>.meta/.pvtb)")
        p.add_argument("--queries", help="dataset file of query suffixes, or one suffix id per line")
        p.add_argument("--sample-queries", type=int, default=0,
                       help="use N randomly sampled dataset rows as queries")
        p.add_argument("--rng-seed", type=int, default=0)
        p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
        p.add_argument("--workers", type=int, default=workers_default)

    p = sub.add_parser("extract", help="CSV event log -> suffix dataset")
    common(p, out_required=True)
    p.add_argument("log")
    p.add_argument("--min-length", type=int, default=1)
    p.add_argument("--max-length", type=int, default=None)
    p.add_argument("--no-full-trace", action="store_true", help="drop position-1 suffixes")
    p.add_argument("--featurize", action="store_true",
                   help="add bag-of-activities vectors for euclidean/angular")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    common(p, out_required=True)
    p.add_argument("--kind", choices=("vectors", "sequences"), default="vectors")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--clusters", type=int, default=8)
    p.add_argument("--n-queries", type=int, default=0)
    p.add_argument("--queries-output")
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pivots", help="greedy farthest-point pivot selection")
    common(p)
    p.add_argument("dataset")
    p.add_argument("--k", type=int, default=None, help="number of pivots (default min(32, ceil(sqrt N)))")
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--distance", choices=DISTANCE_KINDS, default="levenshtein")
    p.set_defaults(func=cmd_pivots)

    p = sub.add_parser("index", help="build and save the suffix-to-pivot table")
    common(p, out_required=True)
    p.add_argument("dataset")
    p.add_argument("--pivots", required=True)
    p.add_argument("--distance", choices=DISTANCE_KINDS, default=None,
                   help="must match the pivot file (default: taken from it)")
    p.add_argument("--workers", type=int, default=workers_default)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="exact range queries")
    common(p)
    query_inputs(p)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--exact-distances", action="store_true",
                   help="also compute distances for rows accepted by the upper bound")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("knn", help="exact k-nearest-neighbour queries")
    common(p)
    query_inputs(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("verify", help="compare pruned results with exhaustive search")
    common(p)
    query_inputs(p)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--exact-distances", action="store_true")
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="count distance evaluations on synthetic data")
    common(p)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--clusters", type=int, default=8)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--k-pivots", type=_int_list, default="1,4,16")
    p.add_argument("--queries", dest="n_queries", type=int, default=100)
    p.add_argument("--percentile", type=float, default=5.0)
    p.add_argument("--distance", choices=DISTANCE_KINDS, default="euclidean")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--workers", type=int, default=workers_default)
    p.set_defaults(func=cmd_bench)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cp = configparser.ConfigParser()
    if not cp.read(known.config, encoding="utf-8"):
        raise PivotPruneError(f"cannot read config file {known.config}")
    if not cp.has_section("pivotprune"):
        return
    section = cp["pivotprune"]
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        defaults = {}
        for action in sp._actions:
            if action.dest in ("help", "config") or not action.option_strings:
                continue
            for key in (action.dest, action.dest.replace("_", "-"),
                        action.option_strings[-1].lstrip("-"),
                        action.option_strings[-1].lstrip("-").replace("-", "_")):
                if key in section:
                    if isinstance(action, argparse._StoreTrueAction):
                        defaults[action.dest] = section.getboolean(key)
                    else:
                        defaults[action.dest] = section[key]
                    if action.required:
                        action.required = False
                    break
        sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        for name in ("batch_size", "workers"):
            if getattr(args, name, 1) < 1:
                raise PivotPruneError(f"--{name.replace('_', '-')} must be >= 1")
        return args.func(args)
    except (PivotPruneError, OSError, ValueError, KeyError, IndexError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
