"""Score expansions against labeled ground truth.

A query is a small seed set from one semantic class; truth is that class's
full member list. Seeds are removed from both the ranked output and the truth
set before scoring, so only genuinely extracted entities count. Average
precision at k is normalized by min(k, |truth|), which gives a perfect ranking
a score of exactly 1 regardless of truth size.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import EntityId, normalize_mention
from .expansion import Config, ExpansionError, expand
from .graph import BipartiteGraph

DEFAULT_KS = (10, 20, 50)


@dataclass(frozen=True)
class Query:
    class_name: str
    seeds: tuple[str, ...]

    def __post_init__(self):
        if not self.seeds:
            raise ValueError(f"query for {self.class_name!r} has no seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"query for {self.class_name!r} has duplicate seeds")


@dataclass(frozen=True)
class GroundTruth:
    class_name: str
    members: frozenset[str]

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"ground truth for {self.class_name!r} is empty")


def load_queries(path: str | Path) -> list[Query]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [Query(q["class"], tuple(q["seeds"])) for q in data]


def load_truths(path: str | Path) -> dict[str, GroundTruth]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    truths = {}
    for t in data:
        truth = GroundTruth(t["class"], frozenset(t["members"]))
        truths[truth.class_name] = truth
    return truths


def average_precision_at_k(ranked: Sequence[EntityId], truth: GroundTruth, k: int) -> float:
    """Average of precision@i over relevant positions i <= k, normalized."""
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = {normalize_mention(m).canonical for m in truth.members}
    if not relevant:
        raise ValueError(f"ground truth for {truth.class_name!r} is empty")
    hits = 0
    total = 0.0
    for i, entity in enumerate(ranked[:k], start=1):
        if entity.canonical in relevant:
            hits += 1
            total += hits / i
    return total / min(k, len(relevant))


def map_at_k(ap_values: Sequence[float]) -> float:
    """Mean average precision over one class's queries."""
    if not ap_values:
        raise ValueError("MAP needs at least one query")
    return sum(ap_values) / len(ap_values)


def mmap_at_k(map_values: Sequence[float]) -> float:
    """Mean of per-class MAP values."""
    if not map_values:
        raise ValueError("MMAP needs at least one class")
    return sum(map_values) / len(map_values)


@dataclass
class QueryResult:
    query: Query
    status: str                       # expansion status, or "failed"
    error: str | None = None
    ap: dict[int, float] = field(default_factory=dict)
    extracted: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class BenchmarkReport:
    ks: tuple[int, ...]
    results: list[QueryResult]
    class_map: dict[str, dict[int, float]]
    mmap: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "queries": [
                {
                    "class": r.query.class_name,
                    "seeds": list(r.query.seeds),
                    "status": r.status,
                    "error": r.error,
                    "ap": {str(k): v for k, v in sorted(r.ap.items())},
                    "extracted": r.extracted,
                }
                for r in self.results
            ],
            "class_map": {c: {str(k): v for k, v in sorted(m.items())}
                          for c, m in sorted(self.class_map.items())},
            "mmap": {str(k): v for k, v in sorted(self.mmap.items())},
            "failed_queries": sum(1 for r in self.results if r.failed),
        }

    def format_table(self) -> str:
        header = ["class", "queries"] + [f"MAP@{k}" for k in self.ks]
        rows = [header]
        per_class_counts: dict[str, int] = {}
        for r in self.results:
            if not r.failed:
                per_class_counts[r.query.class_name] = (
                    per_class_counts.get(r.query.class_name, 0) + 1)
        for name in sorted(self.class_map):
            row = [name, str(per_class_counts.get(name, 0))]
            row += [f"{self.class_map[name][k]:.4f}" for k in self.ks]
            rows.append(row)
        summary = ["MMAP", str(sum(per_class_counts.values()))]
        summary += [f"{self.mmap[k]:.4f}" if k in self.mmap else "-" for k in self.ks]
        rows.append(summary)
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in rows]
        failed = [r for r in self.results if r.failed]
        if failed:
            lines.append("")
            lines.append(f"failed queries: {len(failed)}")
            for r in failed:
                lines.append(f"  {r.query.class_name} {list(r.query.seeds)}: {r.error}")
        return "\n".join(lines)


def _run_query(index: int, query: Query, truths: dict[str, GroundTruth],
               graph: BipartiteGraph, config: Config, ks: Sequence[int]) -> QueryResult:
    truth = truths.get(query.class_name)
    if truth is None:
        return QueryResult(query, "failed", error=f"no ground truth for class {query.class_name!r}")
    # Each query gets its own derived seed so parallel order cannot matter.
    derived = config.with_overrides(rng_seed=config.rng_seed ^ index)
    try:
        state = expand(list(query.seeds), graph, derived)
    except (ExpansionError, ValueError) as exc:
        return QueryResult(query, "failed", error=str(exc))
    seed_keys = {normalize_mention(s).canonical for s in query.seeds}
    ranked = [EntityId(e) for e, _, _ in state.additions() if e not in seed_keys]
    remaining = frozenset(m for m in truth.members
                          if normalize_mention(m).canonical not in seed_keys)
    if not remaining:
        return QueryResult(query, "failed",
                           error="ground truth contains nothing beyond the seeds")
    scored_truth = GroundTruth(truth.class_name, remaining)
    ap = {k: average_precision_at_k(ranked, scored_truth, k) for k in ks}
    return QueryResult(query, state.status, ap=ap, extracted=[e.canonical for e in ranked])


def run_benchmark(graph: BipartiteGraph, queries: Sequence[Query],
                  truths: dict[str, GroundTruth], config: Config,
                  ks: Sequence[int] = DEFAULT_KS, workers: int = 1) -> BenchmarkReport:
    """Expand every query and aggregate AP into per-class MAP and overall MMAP."""
    ks = tuple(ks)
    if workers > 1 and len(queries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda item: _run_query(item[0], item[1], truths, graph, config, ks),
                enumerate(queries)))
    else:
        results = [_run_query(i, q, truths, graph, config, ks)
                   for i, q in enumerate(queries)]

    by_class: dict[str, list[QueryResult]] = {}
    for result in results:
        if not result.failed:
            by_class.setdefault(result.query.class_name, []).append(result)
    class_map = {name: {k: map_at_k([r.ap[k] for r in group]) for k in ks}
                 for name, group in by_class.items()}
    mmap = ({k: mmap_at_k([m[k] for m in class_map.values()]) for k in ks}
            if class_map else {})
    return BenchmarkReport(ks, results, class_map, mmap)
