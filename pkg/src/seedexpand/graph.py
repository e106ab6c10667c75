"""Sparse bipartite entity-context graph: build, weight, persist, query.

Edges carry both the raw co-occurrence count and a TF-IDF style weight
log(1 + count) * max(0, log |E| - log column_sum). The IDF bracket is clamped
at zero so every weight stays non-negative, which the weighted-Jaccard
similarity downstream requires.

Entity and feature tables are kept sorted by key, so node ids double as
lexicographic ranks and two builds from the same record stream are identical.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import ContextFeature, EntityId, MentionRecord, feature_key, parse_feature

INDEX_MAGIC = b"SXGRAPH\x00"
INDEX_VERSION = 1


class GraphError(Exception):
    pass


class EmptyGraphError(GraphError):
    """No entity survived the build (empty stream or min_count too high)."""


class IndexFormatError(GraphError):
    """Index file is not readable: bad magic, version, or checksum."""


@dataclass(frozen=True)
class EntityStats:
    entity: EntityId
    mention_count: int
    dominant_type: str | None


def tfidf_weight(x_ec: int, total_entities: int, column_sum: int) -> float:
    """Edge weight from a raw count, the entity total, and the feature column sum."""
    if x_ec < 0:
        raise ValueError(f"negative co-occurrence count: {x_ec}")
    if total_entities < 1:
        raise ValueError(f"total_entities must be >= 1, got {total_entities}")
    if column_sum < x_ec:
        raise ValueError(f"column_sum {column_sum} < count {x_ec}")
    if x_ec == 0:
        return 0.0
    if column_sum == 0:
        raise ValueError("column_sum is 0 for an edge with a positive count")
    idf = math.log(total_entities) - math.log(column_sum)
    return math.log1p(x_ec) * max(0.0, idf)


class BipartiteGraph:
    """Immutable entity-feature graph with row (entity) and column (feature) views.

    Entity rows are stored CSR-style over sorted feature columns; a transposed
    CSC view backs per-feature queries. Safe to share across threads.
    """

    def __init__(
        self,
        entities: list[str],
        features: list[str],
        indptr: np.ndarray,
        indices: np.ndarray,
        counts: np.ndarray,
        weights: np.ndarray,
        mention_counts: np.ndarray,
    ):
        self.entities = entities
        self.features = features
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.mention_counts = np.asarray(mention_counts, dtype=np.int64)
        self._entity_id = {e: i for i, e in enumerate(entities)}
        self._feature_id = {f: i for i, f in enumerate(features)}
        self._build_transpose()
        self._compute_dominant_types()

    def _build_transpose(self):
        n_feat = len(self.features)
        edge_rows = np.repeat(
            np.arange(len(self.entities), dtype=np.int64), np.diff(self.indptr))
        order = np.argsort(self.indices, kind="stable")
        self.col_indptr = np.zeros(n_feat + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=n_feat), out=self.col_indptr[1:])
        self.col_entities = edge_rows[order]
        self.col_counts = self.counts[order]
        self.col_weights = self.weights[order]

    def _compute_dominant_types(self):
        # Per entity: the type feature with the highest raw count, ties broken
        # by type name ascending.
        type_names = {}
        for fid, key in enumerate(self.features):
            if key.startswith("type:"):
                type_names[fid] = key[len("type:"):]
        self.dominant_types: list[str | None] = [None] * len(self.entities)
        if not type_names:
            return
        for eid in range(len(self.entities)):
            best: tuple[int, str] | None = None
            for j in range(self.indptr[eid], self.indptr[eid + 1]):
                name = type_names.get(int(self.indices[j]))
                if name is None:
                    continue
                cand = (-int(self.counts[j]), name)
                if best is None or cand < best:
                    best = cand
            if best is not None:
                self.dominant_types[eid] = best[1]

    # -- basic views ---------------------------------------------------------

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_edges(self) -> int:
        return len(self.indices)

    def entity_id(self, entity: EntityId) -> int | None:
        return self._entity_id.get(entity.canonical)

    def feature_id(self, feature: ContextFeature) -> int | None:
        return self._feature_id.get(feature_key(feature))

    def has_entity(self, entity: EntityId) -> bool:
        return entity.canonical in self._entity_id

    def features_of(self, entity: EntityId) -> list[tuple[ContextFeature, float]]:
        """Weighted features of an entity, sorted by feature key. Unknown -> []."""
        eid = self.entity_id(entity)
        if eid is None:
            return []
        lo, hi = self.indptr[eid], self.indptr[eid + 1]
        return [(parse_feature(self.features[int(f)]), float(w))
                for f, w in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def entities_with(self, feature: ContextFeature) -> list[tuple[EntityId, float]]:
        """Weighted entities of a feature, sorted by entity key. Unknown -> []."""
        fid = self.feature_id(feature)
        if fid is None:
            return []
        lo, hi = self.col_indptr[fid], self.col_indptr[fid + 1]
        return [(EntityId(self.entities[int(e)]), float(w))
                for e, w in zip(self.col_entities[lo:hi], self.col_weights[lo:hi])]

    def weight(self, entity: EntityId, feature: ContextFeature) -> float:
        """Edge weight, 0.0 when the edge (or either node) is absent."""
        eid = self.entity_id(entity)
        fid = self.feature_id(feature)
        if eid is None or fid is None:
            return 0.0
        lo, hi = self.indptr[eid], self.indptr[eid + 1]
        pos = lo + np.searchsorted(self.indices[lo:hi], fid)
        if pos < hi and self.indices[pos] == fid:
            return float(self.weights[pos])
        return 0.0

    def entity_stats(self, entity: EntityId) -> EntityStats:
        eid = self.entity_id(entity)
        if eid is None:
            raise KeyError(f"unknown entity: {entity.canonical!r}")
        return EntityStats(entity, int(self.mention_counts[eid]), self.dominant_types[eid])

    # -- bulk access used by the ranking kernels -----------------------------

    def sum_feature_weights(self, entity_ids: Iterable[int]) -> np.ndarray:
        """Accumulated edge weight per feature column over the given entity rows."""
        scores = np.zeros(self.n_features, dtype=np.float64)
        for eid in entity_ids:
            lo, hi = self.indptr[eid], self.indptr[eid + 1]
            np.add.at(scores, self.indices[lo:hi], self.weights[lo:hi])
        return scores

    def dense_rows(self, entity_ids: np.ndarray, feature_ids: np.ndarray) -> np.ndarray:
        """Dense (rows x columns) weight block for the given entities and features.

        ``feature_ids`` must be sorted ascending.
        """
        entity_ids = np.asarray(entity_ids, dtype=np.int64)
        feature_ids = np.asarray(feature_ids, dtype=np.int64)
        out = np.zeros((len(entity_ids), len(feature_ids)), dtype=np.float64)
        if len(entity_ids) == 0 or len(feature_ids) == 0:
            return out
        starts = self.indptr[entity_ids]
        lens = (self.indptr[entity_ids + 1] - starts).astype(np.int64)
        total = int(lens.sum())
        if total == 0:
            return out
        offsets = np.repeat(np.cumsum(lens) - lens, lens)
        flat = np.arange(total, dtype=np.int64) - offsets + np.repeat(starts, lens)
        cols_raw = self.indices[flat]
        col_pos = np.searchsorted(feature_ids, cols_raw)
        col_pos = np.minimum(col_pos, len(feature_ids) - 1)
        mask = feature_ids[col_pos] == cols_raw
        rows = np.repeat(np.arange(len(entity_ids), dtype=np.int64), lens)
        out[rows[mask], col_pos[mask]] = self.weights[flat[mask]]
        return out

    def entities_touching(self, feature_ids: Iterable[int]) -> np.ndarray:
        """Sorted unique entity rows with at least one edge into the given columns."""
        chunks = []
        for fid in feature_ids:
            lo, hi = self.col_indptr[fid], self.col_indptr[fid + 1]
            chunks.append(self.col_entities[lo:hi])
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(chunks))

    # -- construction --------------------------------------------------------

    @classmethod
    def from_weighted_edges(
        cls,
        edges: Mapping[tuple[str, str], tuple[int, float]],
        mention_counts: Mapping[str, int] | None = None,
    ) -> "BipartiteGraph":
        """Build directly from {(entity key, feature key): (count, weight)}.

        Intended for fixtures and tests; ``build_graph`` is the production path.
        """
        entities = sorted({e for e, _ in edges})
        features = sorted({f for _, f in edges})
        eid = {e: i for i, e in enumerate(entities)}
        fid = {f: i for i, f in enumerate(features)}
        rows: list[list[tuple[int, int, float]]] = [[] for _ in entities]
        for (e, f), (count, weight) in edges.items():
            rows[eid[e]].append((fid[f], int(count), float(weight)))
        indptr = np.zeros(len(entities) + 1, dtype=np.int64)
        indices, counts, weights = [], [], []
        for i, row in enumerate(rows):
            row.sort()
            indptr[i + 1] = indptr[i] + len(row)
            for f, c, w in row:
                indices.append(f)
                counts.append(c)
                weights.append(w)
        if mention_counts is None:
            mc = [sum(c for _, c, _ in row) for row in rows]
        else:
            mc = [int(mention_counts.get(e, 0)) for e in entities]
        return cls(entities, features,
                   indptr, np.asarray(indices, dtype=np.int64),
                   np.asarray(counts, dtype=np.int64),
                   np.asarray(weights, dtype=np.float64),
                   np.asarray(mc, dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (self.entities == other.entities
                and self.features == other.features
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.mention_counts, other.mention_counts))


def build_graph(records: Iterable[MentionRecord], min_count: int = 3) -> BipartiteGraph:
    """Count co-occurrences, drop rare entities, and weight the surviving edges."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    edge_counts: Counter[tuple[str, str]] = Counter()
    mention_counts: Counter[str] = Counter()
    for record in records:
        entity = record.entity.canonical
        mention_counts[entity] += 1
        for feature in record.features:
            edge_counts[(entity, feature_key(feature))] += 1
    kept = {e for e, n in mention_counts.items() if n >= min_count}
    if not kept:
        raise EmptyGraphError(
            "no entity reached the mention threshold "
            f"(min_count={min_count}, entities seen={len(mention_counts)})")
    entities = sorted(kept)
    eid = {e: i for i, e in enumerate(entities)}
    surviving = {(e, f): c for (e, f), c in edge_counts.items() if e in kept}
    features = sorted({f for _, f in surviving})
    fid = {f: i for i, f in enumerate(features)}

    column_sums = np.zeros(len(features), dtype=np.int64)
    rows: list[list[tuple[int, int]]] = [[] for _ in entities]
    for (e, f), c in surviving.items():
        j = fid[f]
        column_sums[j] += c
        rows[eid[e]].append((j, c))

    indptr = np.zeros(len(entities) + 1, dtype=np.int64)
    indices, counts, weights = [], [], []
    n_entities = len(entities)
    for i, row in enumerate(rows):
        row.sort()
        indptr[i + 1] = indptr[i] + len(row)
        for j, c in row:
            indices.append(j)
            counts.append(c)
            weights.append(tfidf_weight(c, n_entities, int(column_sums[j])))
    return BipartiteGraph(
        entities, features,
        indptr, np.asarray(indices, dtype=np.int64),
        np.asarray(counts, dtype=np.int64),
        np.asarray(weights, dtype=np.float64),
        np.asarray([mention_counts[e] for e in entities], dtype=np.int64))


# -- persistence ---------------------------------------------------------------
#
# Layout: magic (8 bytes) | version u32 | crc32 u32 | payload length u64 |
# payload. The payload is a fixed sequence of length-prefixed sections:
# entity table (JSON), feature table (JSON), then the raw little-endian
# arrays mention_counts, indptr, indices, counts, weights.

_HEADER = struct.Struct("<8sIIQ")
_SECTION_LEN = struct.Struct("<Q")


def _pack_sections(sections: list[bytes]) -> bytes:
    parts = []
    for data in sections:
        parts.append(_SECTION_LEN.pack(len(data)))
        parts.append(data)
    return b"".join(parts)


def _unpack_sections(payload: bytes, expected: int) -> list[bytes]:
    sections = []
    pos = 0
    for _ in range(expected):
        if pos + _SECTION_LEN.size > len(payload):
            raise IndexFormatError("index payload truncated")
        (length,) = _SECTION_LEN.unpack_from(payload, pos)
        pos += _SECTION_LEN.size
        if pos + length > len(payload):
            raise IndexFormatError("index payload truncated")
        sections.append(payload[pos:pos + length])
        pos += length
    if pos != len(payload):
        raise IndexFormatError("trailing bytes after index payload")
    return sections


def save_index(graph: BipartiteGraph, path: str | Path) -> None:
    """Write the graph to a versioned, checksummed binary index file."""
    if graph.n_features > 0xFFFFFFFF:
        raise GraphError("feature table too large for index format v1")
    payload = _pack_sections([
        json.dumps(graph.entities, ensure_ascii=False).encode("utf-8"),
        json.dumps(graph.features, ensure_ascii=False).encode("utf-8"),
        graph.mention_counts.astype("<i8").tobytes(),
        graph.indptr.astype("<i8").tobytes(),
        graph.indices.astype("<u4").tobytes(),
        graph.counts.astype("<i8").tobytes(),
        graph.weights.astype("<f8").tobytes(),
    ])
    header = _HEADER.pack(INDEX_MAGIC, INDEX_VERSION, zlib.crc32(payload), len(payload))
    Path(path).write_bytes(header + payload)


def load_index(path: str | Path) -> BipartiteGraph:
    """Read an index file back; magic, version, and checksum are verified."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise IndexFormatError(f"{path}: too short to be an index file")
    magic, version, crc, length = _HEADER.unpack_from(blob)
    if magic != INDEX_MAGIC:
        raise IndexFormatError(f"{path}: not an entity-context index file")
    if version != INDEX_VERSION:
        raise IndexFormatError(
            f"{path}: unsupported index format version {version} (expected {INDEX_VERSION})")
    payload = blob[_HEADER.size:]
    if len(payload) != length:
        raise IndexFormatError(f"{path}: payload length mismatch")
    if zlib.crc32(payload) != crc:
        raise IndexFormatError(f"{path}: checksum mismatch, file is corrupted")
    sections = _unpack_sections(payload, 7)
    entities = json.loads(sections[0].decode("utf-8"))
    features = json.loads(sections[1].decode("utf-8"))
    mention_counts = np.frombuffer(sections[2], dtype="<i8")
    indptr = np.frombuffer(sections[3], dtype="<i8")
    indices = np.frombuffer(sections[4], dtype="<u4").astype(np.int64)
    counts = np.frombuffer(sections[5], dtype="<i8")
    weights = np.frombuffer(sections[6], dtype="<f8")
    if len(indptr) != len(entities) + 1 or len(mention_counts) != len(entities):
        raise IndexFormatError(f"{path}: inconsistent table sizes")
    if not (len(indices) == len(counts) == len(weights)):
        raise IndexFormatError(f"{path}: inconsistent edge arrays")
    return BipartiteGraph(entities, features, indptr.copy(), indices,
                          counts.copy(), weights.copy(), mention_counts.copy())
