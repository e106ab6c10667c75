"""Corpus-based entity set expansion from small seed sets."""

__version__ = "0.1.0"

from .corpus import (AnnotatedSentence, ContextFeature, EntityId, Mention,
                     MentionRecord, Skipgram, TypeFeature, extract_skipgrams,
                     feature_key, mention_stream, normalize_mention, parse_corpus,
                     parse_feature)
from .expansion import (Config, ExpansionState, RankedList, accept_entities,
                        ensemble_mrr, expand, rank_candidates, sample_subsets,
                        select_context_features)
from .evaluation import (GroundTruth, Query, average_precision_at_k, map_at_k,
                         mmap_at_k, run_benchmark)
from .graph import (BipartiteGraph, EntityStats, build_graph, load_index,
                    save_index, tfidf_weight)
from .similarity import EntityScore, FeatureSet, context_sim, entity_score

__all__ = [
    "AnnotatedSentence", "BipartiteGraph", "Config", "ContextFeature",
    "EntityId", "EntityScore", "EntityStats", "ExpansionState", "FeatureSet",
    "GroundTruth", "Mention", "MentionRecord", "Query", "RankedList",
    "Skipgram", "TypeFeature", "accept_entities", "average_precision_at_k",
    "build_graph", "context_sim", "ensemble_mrr", "entity_score", "expand",
    "extract_skipgrams", "feature_key", "load_index", "map_at_k",
    "mention_stream", "mmap_at_k", "normalize_mention", "parse_corpus",
    "parse_feature", "rank_candidates", "run_benchmark", "sample_subsets",
    "save_index", "select_context_features", "tfidf_weight",
]
