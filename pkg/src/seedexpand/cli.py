"""Command-line interface: build, expand, eval, sweep, gen-synth.

Every expansion output embeds a run manifest (tool version, config snapshot,
input digests, timestamp) so results stay reproducible. Config defaults can
be overridden by a JSON file named in the SEEDEXPAND_CONFIG environment
variable; explicit flags win over both.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import mention_stream, parse_corpus
from .evaluation import (BenchmarkReport, load_queries, load_truths, run_benchmark)
from .expansion import Config, ExpansionError, expand
from .graph import EmptyGraphError, GraphError, build_graph, load_index, save_index
from .synth import SynthParams, audit, write_synthetic

CONFIG_ENV_VAR = "SEEDEXPAND_CONFIG"

SWEEP_PARAMS = {
    "Q": "num_context_features",
    "T": "ensemble_batches",
    "alpha": "subset_fraction",
    "r": "rank_threshold",
}


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(command: str, inputs: dict[str, Path], config: Config | None,
              status: str | None = None) -> dict:
    manifest = {
        "tool": "seedexpand",
        "version": __version__,
        "command": command,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)}
                   for name, p in inputs.items()},
    }
    if config is not None:
        manifest["config"] = dataclasses.asdict(config)
    if status is not None:
        manifest["status"] = status
    return manifest


def _config_from_args(args: argparse.Namespace) -> Config:
    values = {}
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        values.update(json.loads(Path(env_path).read_text(encoding="utf-8")))
    flag_map = {
        "num_context_features": args.num_context_features,
        "ensemble_batches": args.ensemble_batches,
        "subset_fraction": args.subset_fraction,
        "rank_threshold": args.rank_threshold,
        "target_size": args.target_size,
        "rng_seed": args.rng_seed,
        "max_iterations": args.max_iterations,
    }
    for name, value in flag_map.items():
        if value is not None:
            values[name] = value
    if getattr(args, "no_type_filter", False):
        values["type_filter"] = False
    cutoff = getattr(args, "list_cutoff", None)
    if cutoff is not None:
        values["list_cutoff"] = None if cutoff == "all" else int(cutoff)
    config = Config(**values)
    config.validate()
    return config


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-K", dest="target_size", type=int, default=None,
                        help="stop once the expanded set reaches this size")
    parser.add_argument("-Q", dest="num_context_features", type=int, default=None,
                        help="context features selected per iteration")
    parser.add_argument("-T", dest="ensemble_batches", type=int, default=None,
                        help="ranked lists combined per iteration")
    parser.add_argument("--alpha", dest="subset_fraction", type=float, default=None,
                        help="fraction of selected contexts sampled per list")
    parser.add_argument("-r", dest="rank_threshold", type=float, default=None,
                        help="average-rank acceptance threshold")
    parser.add_argument("--rng-seed", dest="rng_seed", type=int, default=None)
    parser.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    parser.add_argument("--no-type-filter", action="store_true",
                        help="do not restrict candidates to the seeds' dominant types")
    parser.add_argument("--list-cutoff", default=None,
                        help="truncate each ranked list ('all' or a positive integer)")


def cmd_build(args: argparse.Namespace) -> int:
    corpus_path = Path(args.corpus)
    errors: list[tuple[int, str]] = []

    def on_error(line_no: int, message: str) -> None:
        errors.append((line_no, message))
        print(f"warning: line {line_no}: {message}", file=sys.stderr)

    try:
        with corpus_path.open("r", encoding="utf-8") as handle:
            records = mention_stream(parse_corpus(handle, on_error=on_error))
            graph = build_graph(records, min_count=args.min_count)
    except OSError as exc:
        print(f"error: cannot read corpus: {exc}", file=sys.stderr)
        return 1
    except EmptyGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        save_index(graph, args.index)
    except OSError as exc:
        print(f"error: cannot write index: {exc}", file=sys.stderr)
        return 1
    if errors:
        print(f"skipped {len(errors)} malformed corpus lines", file=sys.stderr)
    print(f"entities: {graph.n_entities}")
    print(f"features: {graph.n_features}")
    print(f"edges: {graph.n_edges}")
    print(f"index written to {args.index}")
    return 0


def _expansion_rows(state) -> list[dict]:
    return [
        {"entity": entity, "rank": rank, "iteration": iteration, "mrr": mrr}
        for rank, (entity, iteration, mrr) in enumerate(state.additions(), start=1)
    ]


def cmd_expand(args: argparse.Namespace) -> int:
    try:
        config = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return 1
    index_path = Path(args.index)
    try:
        graph = load_index(index_path)
    except (OSError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        state = expand(args.seed, graph, config)
    except (ExpansionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = _manifest("expand", {"index": index_path}, config, status=state.status)
    manifest["seeds"] = list(state.seeds)
    rows = _expansion_rows(state)

    if args.output == "json":
        text = json.dumps({"manifest": manifest, "entities": rows},
                          indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"# {key}: {json.dumps(value, sort_keys=True)}"
                 for key, value in sorted(manifest.items())]
        lines.append("entity\trank\titeration\tmrr")
        for row in rows:
            lines.append(f"{row['entity']}\t{row['rank']}\t{row['iteration']}\t{row['mrr']:.6f}")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _parse_ks(raw: str) -> tuple[int, ...]:
    ks = tuple(int(part) for part in raw.split(",") if part.strip())
    if not ks or any(k < 1 for k in ks):
        raise ValueError(f"bad cutoff list: {raw!r}")
    return ks


def _run_eval(args: argparse.Namespace, config: Config) -> tuple[BenchmarkReport, dict]:
    graph = load_index(args.index)
    queries = load_queries(args.queries)
    truths = load_truths(args.truth)
    ks = _parse_ks(args.k)
    report = run_benchmark(graph, queries, truths, config, ks=ks, workers=args.workers)
    manifest = _manifest("eval", {
        "index": Path(args.index),
        "queries": Path(args.queries),
        "truth": Path(args.truth),
    }, config)
    return report, manifest


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        config = _config_from_args(args)
        report, manifest = _run_eval(args, config)
    except (OSError, GraphError, ExpansionError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.format_table())
    if args.out:
        payload = {"manifest": manifest, "report": report.to_dict()}
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    field = SWEEP_PARAMS[args.param]
    caster = int if args.param in ("Q", "T") else float
    try:
        values = [caster(part) for part in args.values.split(",") if part.strip()]
        if not values:
            raise ValueError(f"no values given: {args.values!r}")
        base = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = []
    for value in values:
        try:
            config = base.with_overrides(**{field: value})
            report, _ = _run_eval(args, config)
        except (OSError, GraphError, ExpansionError, ValueError, KeyError) as exc:
            print(f"error: {args.param}={value}: {exc}", file=sys.stderr)
            return 1
        rows.append((value, {k: report.mmap.get(k) for k in report.ks}))

    ks = _parse_ks(args.k)
    header = [args.param] + [f"MMAP@{k}" for k in ks]
    table = [header]
    for value, mmap in rows:
        table.append([str(value)] + [f"{mmap[k]:.4f}" if mmap.get(k) is not None else "-"
                                     for k in ks])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if args.out:
        payload = {
            "param": args.param,
            "ks": list(ks),
            "points": [{"value": value, "mmap": {str(k): v for k, v in mmap.items()}}
                       for value, mmap in rows],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return 0


def cmd_gen_synth(args: argparse.Namespace) -> int:
    params = SynthParams(
        classes=args.classes,
        entities_per_class=args.entities_per_class,
        noise=args.noise,
        rng_seed=args.rng_seed,
        queries_per_class=args.queries_per_class,
        seeds_per_query=args.seeds_per_query,
    )
    try:
        params.validate()
        corpus_path, queries_path, truth_path = write_synthetic(params, args.output)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = audit(params, corpus_path)
    print(f"corpus: {corpus_path}")
    print(f"queries: {queries_path}")
    print(f"truth: {truth_path}")
    print(f"specific mentions: {report['specific_mentions']}, "
          f"cross-class: {report['cross_class_mentions']} "
          f"(rate {report['contamination_rate']:.4f})")
    if not report["ok"]:
        for problem in report["problems"]:
            print(f"error: audit: {problem}", file=sys.stderr)
        return 1
    print("audit: ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seedexpand",
        description="Corpus-based entity set expansion from small seed sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="index an annotated corpus")
    p_build.add_argument("corpus", help="annotated corpus (one JSON object per line)")
    p_build.add_argument("index", help="output index path")
    p_build.add_argument("--min-count", type=int, default=3,
                         help="drop entities with fewer mentions than this")
    p_build.set_defaults(func=cmd_build)

    p_expand = sub.add_parser("expand", help="expand a seed set against an index")
    p_expand.add_argument("index")
    p_expand.add_argument("--seed", action="append", required=True,
                          help="seed entity surface form (repeatable)")
    p_expand.add_argument("--output", choices=("tsv", "json"), default="tsv")
    p_expand.add_argument("--out", default=None, help="write output here instead of stdout")
    _add_config_flags(p_expand)
    p_expand.set_defaults(func=cmd_expand)

    p_eval = sub.add_parser("eval", help="score expansions against ground truth")
    p_eval.add_argument("index")
    p_eval.add_argument("queries")
    p_eval.add_argument("truth")
    p_eval.add_argument("--k", default="10,20,50", help="comma-separated cutoffs")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--out", default=None, help="write the JSON report here")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="evaluate across one parameter's values")
    p_sweep.add_argument("index")
    p_sweep.add_argument("queries")
    p_sweep.add_argument("truth")
    p_sweep.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--k", default="10,20,50")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", default=None)
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_synth = sub.add_parser("gen-synth", help="generate a planted-class corpus")
    p_synth.add_argument("output", help="corpus output path (query/truth paths derive from it)")
    p_synth.add_argument("--classes", type=int, default=3)
    p_synth.add_argument("--entities-per-class", type=int, default=30)
    p_synth.add_argument("--noise", type=float, default=0.05)
    p_synth.add_argument("--rng-seed", type=int, default=0)
    p_synth.add_argument("--queries-per-class", type=int, default=5)
    p_synth.add_argument("--seeds-per-query", type=int, default=3)
    p_synth.set_defaults(func=cmd_gen_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
