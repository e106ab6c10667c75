"""Entity-entity similarity conditioned on a chosen set of context features.

Similarity is the weighted Jaccard of the two entities' edge-weight profiles
restricted to the feature set: sum of pointwise minima over sum of pointwise
maxima. A 0/0 ratio is defined as 0, so an entity with no evidence on the
selected contexts is never considered similar to anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .corpus import ContextFeature, EntityId, feature_key
from .graph import BipartiteGraph


class FeatureSet:
    """Ordered collection of distinct context features."""

    def __init__(self, features: Iterable[ContextFeature]):
        seen = set()
        ordered = []
        for f in features:
            if f not in seen:
                seen.add(f)
                ordered.append(f)
        self.features: tuple[ContextFeature, ...] = tuple(ordered)

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self) -> Iterator[ContextFeature]:
        return iter(self.features)

    def __contains__(self, feature: ContextFeature) -> bool:
        return feature in self.features

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return self.features == other.features

    def __repr__(self) -> str:
        return f"FeatureSet({len(self.features)} features)"

    def keys(self) -> list[str]:
        return [feature_key(f) for f in self.features]


@dataclass(frozen=True)
class EntityScore:
    entity: EntityId
    value: float


def context_sim(e1: EntityId, e2: EntityId, features: FeatureSet,
                graph: BipartiteGraph) -> float:
    """Weighted Jaccard of two entities over the given features, in [0, 1]."""
    if len(features) == 0:
        raise ValueError("similarity needs a non-empty feature set")
    num = 0.0
    den = 0.0
    for feature in features:
        w1 = graph.weight(e1, feature)
        w2 = graph.weight(e2, feature)
        num += min(w1, w2)
        den += max(w1, w2)
    if den == 0.0:
        return 0.0
    return num / den


def entity_score(entity: EntityId, members: Sequence[EntityId],
                 features: FeatureSet, graph: BipartiteGraph) -> EntityScore:
    """Mean similarity of an entity to every member of the expanded set."""
    if not members:
        raise ValueError("scoring needs a non-empty expanded set")
    total = 0.0
    for member in members:
        total += context_sim(entity, member, features, graph)
    return EntityScore(entity, total / len(members))
