"""Iterative set expansion: select contexts, rank under sampled subsets, accept.

Each iteration rebuilds the selected feature set from scratch (no pool is
carried across iterations), draws T feature subsets, ranks candidates under
each subset, and combines the rankings by mean reciprocal rank. Candidates
whose accumulated reciprocal rank reaches T / r join the expanded set.

The whole run is a pure function of (graph, seeds, config): subset draws are
seeded per iteration, and every tie anywhere is broken by serialized key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Sequence

import numpy as np

from .corpus import EntityId, normalize_mention, parse_feature
from .graph import BipartiteGraph
from .similarity import FeatureSet

STATUS_REACHED_K = "reached_K"
STATUS_STALLED = "stalled"
STATUS_MAX_ITERATIONS = "max_iterations"


class ExpansionError(Exception):
    pass


class UnknownSeedError(ExpansionError):
    def __init__(self, surface: str):
        super().__init__(f"seed entity not found in the index: {surface!r}")
        self.surface = surface


class EmptySelectionError(ExpansionError):
    """No context feature has positive accumulated weight with the expanded set."""


@dataclass(frozen=True)
class Config:
    """Expansion parameters; defaults follow the stable plateau of each knob."""

    num_context_features: int = 150   # contexts selected per iteration
    ensemble_batches: int = 60        # ranked lists combined per iteration
    subset_fraction: float = 0.6      # share of selected contexts per batch
    rank_threshold: float = 5.0       # acceptance bar: average rank at or above this
    target_size: int = 50             # stop once the expanded set reaches this size
    rng_seed: int = 0
    max_iterations: int = 20
    type_filter: bool = True          # candidates must share a seed's dominant type
    list_cutoff: int | None = None    # None ranks every positive-score candidate

    def validate(self) -> None:
        if self.num_context_features < 1:
            raise ValueError("num_context_features must be >= 1")
        if self.ensemble_batches < 1:
            raise ValueError("ensemble_batches must be >= 1")
        if not (0.0 < self.subset_fraction < 1.0):
            raise ValueError("subset_fraction must be strictly between 0 and 1")
        if self.rank_threshold < 1.0:
            raise ValueError("rank_threshold must be >= 1")
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.list_cutoff is not None and self.list_cutoff < 1:
            raise ValueError("list_cutoff must be >= 1 or None")

    def with_overrides(self, **kwargs) -> "Config":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class RankedList:
    """Candidates under one feature subset: score descending, key ascending."""

    entries: tuple[tuple[EntityId, float], ...]

    def entities(self) -> list[EntityId]:
        return [e for e, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


MrrTable = Dict[EntityId, float]


@dataclass(frozen=True)
class IterationRecord:
    index: int                                   # 1-based iteration number
    feature_keys: tuple[str, ...]                # selected contexts, selection order
    subsets: tuple[tuple[int, ...], ...]         # drawn indices into feature_keys
    accepted: tuple[tuple[str, float], ...]      # (entity, mrr) in acceptance order


@dataclass(frozen=True)
class ExpansionState:
    seeds: tuple[str, ...]
    members: tuple[str, ...]   # seeds first, then additions in acceptance order
    status: str
    iterations: tuple[IterationRecord, ...] = field(default_factory=tuple)

    def additions(self) -> list[tuple[str, int, float]]:
        """Accepted entities as (canonical, iteration, mrr), acceptance order."""
        out = []
        for record in self.iterations:
            for entity, mrr in record.accepted:
                out.append((entity, record.index, mrr))
        return out


def select_context_features(members: Sequence[EntityId], limit: int,
                            graph: BipartiteGraph) -> FeatureSet:
    """Top features by accumulated edge weight over the expanded set.

    Only features with positive accumulated weight qualify; ties are broken by
    feature key ascending. The selection never depends on earlier iterations.
    """
    if not members:
        raise ValueError("feature selection needs a non-empty expanded set")
    if limit < 1:
        raise ValueError("feature limit must be >= 1")
    member_ids = [eid for eid in (graph.entity_id(m) for m in members) if eid is not None]
    scores = graph.sum_feature_weights(member_ids)
    positive = np.flatnonzero(scores > 0.0)
    if len(positive) == 0:
        raise EmptySelectionError(
            "no context feature has positive weight with the expanded set")
    order = np.lexsort((positive, -scores[positive]))[:limit]
    return FeatureSet(parse_feature(graph.features[int(fid)]) for fid in positive[order])


def sample_subsets(features: FeatureSet, batches: int, fraction: float,
                   rng: np.random.Generator) -> list[FeatureSet]:
    """Draw ``batches`` uniform subsets of size ceil(fraction * |features|).

    Sampling is without replacement within a subset; subsets are independent.
    """
    n = len(features)
    if n == 0:
        raise ValueError("cannot sample from an empty feature set")
    if batches < 1:
        raise ValueError("batches must be >= 1")
    size = min(n, max(1, math.ceil(fraction * n)))
    subsets = []
    for _ in range(batches):
        picked = np.sort(rng.permutation(n)[:size])
        subsets.append(FeatureSet(features.features[int(i)] for i in picked))
    return subsets


def rank_candidates(members: Sequence[EntityId], features: FeatureSet,
                    graph: BipartiteGraph, config: Config,
                    seeds: Sequence[EntityId] | None = None) -> RankedList:
    """Rank every eligible candidate by mean similarity to the expanded set.

    Candidates are all graph entities outside the expanded set; with the type
    filter on, a candidate's dominant type must match some seed's dominant
    type. Zero-score candidates never enter the list.
    """
    if not members:
        raise ValueError("ranking needs a non-empty expanded set")
    if len(features) == 0:
        raise ValueError("ranking needs a non-empty feature set")
    fids = np.array(
        sorted(fid for fid in (graph.feature_id(f) for f in features) if fid is not None),
        dtype=np.int64)
    member_ids = [eid for eid in (graph.entity_id(m) for m in members) if eid is not None]
    excluded = set(member_ids)

    if len(fids) == 0:
        return RankedList(())
    support = graph.entities_touching(fids)
    keep = np.array([int(eid) not in excluded for eid in support], dtype=bool)
    if config.type_filter:
        reference = members if seeds is None else seeds
        allowed = {graph.dominant_types[eid]
                   for eid in (graph.entity_id(s) for s in reference) if eid is not None}
        for i, eid in enumerate(support):
            if keep[i] and graph.dominant_types[int(eid)] not in allowed:
                keep[i] = False
    candidates = support[keep]
    if len(candidates) == 0:
        return RankedList(())

    cand_block = graph.dense_rows(candidates, fids)
    cand_totals = cand_block.sum(axis=1)
    member_block = graph.dense_rows(np.array(member_ids, dtype=np.int64), fids)
    member_totals = member_block.sum(axis=1)

    sims = np.zeros(len(candidates), dtype=np.float64)
    for row, total in zip(member_block, member_totals):
        mins = np.minimum(cand_block, row).sum(axis=1)
        dens = cand_totals + total - mins
        sims += np.divide(mins, dens, out=np.zeros_like(mins), where=dens > 0.0)
    scores = sims / len(members)

    positive = scores > 0.0
    candidates = candidates[positive]
    scores = scores[positive]
    order = np.lexsort((candidates, -scores))
    if config.list_cutoff is not None:
        order = order[:config.list_cutoff]
    entries = tuple((EntityId(graph.entities[int(candidates[i])]), float(scores[i]))
                    for i in order)
    return RankedList(entries)


def list_ranks(ranked: RankedList) -> list[int]:
    """Rank of each entry: the number of entries scoring at least as high.

    Tied entries share a rank, e.g. two entries tied at the top both rank 2.
    """
    neg = np.array([-s for _, s in ranked.entries], dtype=np.float64)  # ascending
    return [int(r) for r in np.searchsorted(neg, neg, side="right")]


def ensemble_mrr(lists: Iterable[RankedList]) -> MrrTable:
    """Accumulate reciprocal ranks across lists; absence contributes nothing."""
    table: MrrTable = {}
    for ranked in lists:
        if not ranked.entries:
            continue
        for (entity, _), rank in zip(ranked.entries, list_ranks(ranked)):
            table[entity] = table.get(entity, 0.0) + 1.0 / rank
    return table


def accept_entities(table: MrrTable, batches: int, rank_threshold: float) -> list[EntityId]:
    """Entities whose accumulated reciprocal rank reaches batches / threshold."""
    bar = batches / rank_threshold
    chosen = [(entity, score) for entity, score in table.items() if score >= bar]
    chosen.sort(key=lambda item: (-item[1], item[0].canonical))
    return [entity for entity, _ in chosen]


def _seed_entropy(seed: int) -> int:
    return seed & 0xFFFF_FFFF_FFFF_FFFF


def expand(seeds: Sequence[EntityId | str], graph: BipartiteGraph,
           config: Config) -> ExpansionState:
    """Grow a seed set until it reaches the target size, stalls, or times out."""
    config.validate()
    if not seeds:
        raise ExpansionError("expansion needs at least one seed")
    seed_keys: list[str] = []
    for seed in seeds:
        surface = seed.canonical if isinstance(seed, EntityId) else str(seed)
        entity = seed if isinstance(seed, EntityId) else normalize_mention(surface)
        if not graph.has_entity(entity):
            raise UnknownSeedError(surface)
        if entity.canonical not in seed_keys:
            seed_keys.append(entity.canonical)

    seed_entities = [EntityId(k) for k in seed_keys]
    members = list(seed_keys)
    records: list[IterationRecord] = []
    status = None
    step = 0
    while True:
        if len(members) >= config.target_size:
            status = STATUS_REACHED_K
            break
        if step >= config.max_iterations:
            status = STATUS_MAX_ITERATIONS
            break
        member_entities = [EntityId(k) for k in members]
        try:
            selected = select_context_features(
                member_entities, config.num_context_features, graph)
        except EmptySelectionError:
            status = STATUS_STALLED
            break
        rng = np.random.default_rng([_seed_entropy(config.rng_seed), step])
        subsets = sample_subsets(
            selected, config.ensemble_batches, config.subset_fraction, rng)
        lists = [rank_candidates(member_entities, subset, graph, config,
                                 seeds=seed_entities)
                 for subset in subsets]
        table = ensemble_mrr(lists)
        accepted = accept_entities(table, config.ensemble_batches, config.rank_threshold)

        position = {f: i for i, f in enumerate(selected.features)}
        records.append(IterationRecord(
            index=step + 1,
            feature_keys=tuple(selected.keys()),
            subsets=tuple(tuple(position[f] for f in subset) for subset in subsets),
            accepted=tuple((e.canonical, table[e]) for e in accepted)))
        if not accepted:
            status = STATUS_STALLED
            break
        members.extend(e.canonical for e in accepted)
        step += 1

    return ExpansionState(seeds=tuple(seed_keys), members=tuple(members),
                          status=status, iterations=tuple(records))
