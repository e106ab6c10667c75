import json

import pytest

from seedexpand.corpus import EntityId, parse_feature
from seedexpand.graph import BipartiteGraph
from seedexpand.similarity import FeatureSet

# Unit-weight toy graph used by the golden similarity/selection examples.
# florida carries all six features; ontario four of them (one type feature and
# three skip-grams, including both of texas's); texas exactly the two contexts
# it shares with florida.
F_TYPE = "type:LOCATION"
F_CITY = "sg:city , __ , USA"
F_STATE = "sg:US state of __ ."
F_PAY = "sg:pay __ sales tax ."
F_GOV = "sg:governor of __ said"
F_VISIT = "sg:visit __ this winter"
TOY_FEATURES = [F_TYPE, F_CITY, F_STATE, F_PAY, F_GOV, F_VISIT]

TOY_EDGES = {
    ("florida", F_TYPE): (1, 1.0),
    ("florida", F_CITY): (1, 1.0),
    ("florida", F_STATE): (1, 1.0),
    ("florida", F_PAY): (1, 1.0),
    ("florida", F_GOV): (1, 1.0),
    ("florida", F_VISIT): (1, 1.0),
    ("ontario", F_TYPE): (1, 1.0),
    ("ontario", F_CITY): (1, 1.0),
    ("ontario", F_STATE): (1, 1.0),
    ("ontario", F_PAY): (1, 1.0),
    ("texas", F_CITY): (1, 1.0),
    ("texas", F_STATE): (1, 1.0),
}


@pytest.fixture
def toy_graph() -> BipartiteGraph:
    return BipartiteGraph.from_weighted_edges(
        TOY_EDGES, {"florida": 6, "ontario": 4, "texas": 2})


@pytest.fixture
def toy_features() -> FeatureSet:
    return FeatureSet(parse_feature(k) for k in TOY_FEATURES)


@pytest.fixture
def florida() -> EntityId:
    return EntityId("florida")


@pytest.fixture
def ontario() -> EntityId:
    return EntityId("ontario")


@pytest.fixture
def texas() -> EntityId:
    return EntityId("texas")


def corpus_line(tokens: list[str], *spans: tuple[int, int, str]) -> str:
    return json.dumps({
        "tokens": tokens,
        "mentions": [{"start": s, "end": e, "type": t} for s, e, t in spans],
    })


# Tiny corpus with hand-tabulated counts (see test_graph for the tabulation).
# Two context patterns and two types; every sentence is "<l> <entity> <r>".
def fixture_corpus_lines() -> list[str]:
    def sent(left, entity, right, coarse):
        return corpus_line([left, entity, right], (1, 2, coarse))

    return [
        sent("likes", "alpha", "apples", "T1"),
        sent("likes", "alpha", "apples", "T1"),
        sent("likes", "alpha", "apples", "T1"),
        sent("likes", "bravo", "apples", "T1"),
        sent("hates", "bravo", "pears", "T1"),
        sent("hates", "casey", "pears", "T2"),
        sent("hates", "casey", "pears", "T2"),
        sent("likes", "delta", "apples", "T2"),
        sent("hates", "echo", "pears", "T1"),
        sent("likes", "echo", "apples", "T1"),
    ]


@pytest.fixture
def fixture_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(fixture_corpus_lines()) + "\n", encoding="utf-8")
    return path
