"""Synthetic corpora with planted semantic classes.

Each class gets a pool of class-specific context templates; a shared pool of
generic templates co-occurs with everyone. Every entity mention is one short
sentence built from a template, so class membership is fully known and can be
used as ground truth. Cross-class contamination (an entity appearing inside
another class's specific context) happens per specific mention with
probability ``noise``; each entity leaks toward one fixed target class and a
couple of its templates, which concentrates the noise the way real ambiguous
entities do.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import normalize_mention


@dataclass(frozen=True)
class SynthParams:
    classes: int = 3
    entities_per_class: int = 30
    noise: float = 0.05              # contamination probability per specific mention
    rng_seed: int = 0
    queries_per_class: int = 5
    seeds_per_query: int = 3
    mentions_low: int = 10           # per-entity mention count range, inclusive
    mentions_high: int = 26
    templates_per_class: int = 8
    templates_per_entity: int = 4    # each entity uses only a subset of its pool
    generic_templates: int = 6
    generic_rate: float = 0.25       # share of mentions drawn from the generic pool
    contamination_targets: int = 1   # foreign templates an entity can leak into
    coarse_type: str = "thing"

    def validate(self) -> None:
        if not (0.0 <= self.noise <= 1.0):
            raise ValueError(f"noise must be within [0, 1], got {self.noise}")
        if self.classes < 1 or self.entities_per_class < 1:
            raise ValueError("need at least one class and one entity per class")
        if self.seeds_per_query > self.entities_per_class:
            raise ValueError("seeds_per_query cannot exceed entities_per_class")
        if self.mentions_low < 1 or self.mentions_high < self.mentions_low:
            raise ValueError("bad mention count range")
        if self.templates_per_entity > self.templates_per_class:
            raise ValueError("templates_per_entity cannot exceed templates_per_class")


def class_name(c: int) -> str:
    return f"class{c:02d}"


def entity_surface(c: int, i: int) -> str:
    return f"{class_name(c)}_{i:03d}"


def _specific_template(c: int, j: int) -> tuple[str, str, str, str]:
    return (f"cls{c}t{j}w1", f"cls{c}t{j}w2", f"cls{c}t{j}w3", f"cls{c}t{j}w4")


def _generic_template(j: int) -> tuple[str, str, str, str]:
    return (f"gen{j}w1", f"gen{j}w2", f"gen{j}w3", f"gen{j}w4")


_SPECIFIC_TOKEN_RE = re.compile(r"^cls(\d+)t\d+w\d$")


def _sentence(template: tuple[str, str, str, str], surface: str, coarse_type: str) -> dict:
    l2, l1, r1, r2 = template
    return {
        "tokens": [l2, l1, surface, r1, r2],
        "mentions": [{"start": 2, "end": 3, "type": coarse_type}],
    }


def generate(params: SynthParams) -> tuple[list[dict], list[dict], list[dict]]:
    """Build (corpus sentences, queries, truths) for the planted classes."""
    params.validate()
    rng = np.random.default_rng(params.rng_seed)
    sentences: list[dict] = []
    for c in range(params.classes):
        for i in range(params.entities_per_class):
            surface = entity_surface(c, i)
            n_mentions = int(rng.integers(params.mentions_low, params.mentions_high + 1))
            own_pool = rng.permutation(params.templates_per_class)[:params.templates_per_entity]
            if params.classes > 1:
                target_class = int(rng.integers(params.classes - 1))
                if target_class >= c:
                    target_class += 1
                target_pool = rng.permutation(
                    params.templates_per_class)[:params.contamination_targets]
            for _ in range(n_mentions):
                if rng.random() < params.generic_rate:
                    template = _generic_template(int(rng.integers(params.generic_templates)))
                elif params.classes > 1 and rng.random() < params.noise:
                    j = int(target_pool[rng.integers(len(target_pool))])
                    template = _specific_template(target_class, j)
                else:
                    j = int(own_pool[rng.integers(len(own_pool))])
                    template = _specific_template(c, j)
                sentences.append(_sentence(template, surface, params.coarse_type))
    order = rng.permutation(len(sentences))
    sentences = [sentences[int(k)] for k in order]

    queries = []
    truths = []
    for c in range(params.classes):
        members = [entity_surface(c, i) for i in range(params.entities_per_class)]
        truths.append({"class": class_name(c), "members": members})
        for _ in range(params.queries_per_class):
            picks = rng.permutation(params.entities_per_class)[:params.seeds_per_query]
            queries.append({"class": class_name(c),
                            "seeds": [members[int(i)] for i in picks]})
    return sentences, queries, truths


def companion_paths(corpus_path: str | Path) -> tuple[Path, Path]:
    """Query and truth file paths derived from the corpus path."""
    corpus_path = Path(corpus_path)
    stem = corpus_path.name[:-len(corpus_path.suffix)] if corpus_path.suffix else corpus_path.name
    return (corpus_path.with_name(f"{stem}.queries.json"),
            corpus_path.with_name(f"{stem}.truth.json"))


def write_synthetic(params: SynthParams, corpus_path: str | Path) -> tuple[Path, Path, Path]:
    """Write corpus, query, and truth files; returns the three paths."""
    corpus_path = Path(corpus_path)
    sentences, queries, truths = generate(params)
    with corpus_path.open("w", encoding="utf-8") as handle:
        for sentence in sentences:
            handle.write(json.dumps(sentence, sort_keys=True) + "\n")
    queries_path, truth_path = companion_paths(corpus_path)
    queries_path.write_text(json.dumps(queries, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    truth_path.write_text(json.dumps(truths, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
    return corpus_path, queries_path, truth_path


def audit(params: SynthParams, corpus_path: str | Path) -> dict:
    """Re-read generated files and verify them against the planted construction."""
    corpus_path = Path(corpus_path)
    queries_path, truth_path = companion_paths(corpus_path)
    expected = {class_name(c): {entity_surface(c, i) for i in range(params.entities_per_class)}
                for c in range(params.classes)}
    surface_class = {s: name for name, members in expected.items() for s in members}

    problems: list[str] = []
    truths = {t["class"]: set(t["members"])
              for t in json.loads(truth_path.read_text(encoding="utf-8"))}
    if truths != expected:
        problems.append("truth file does not match the planted membership lists")
    for q in json.loads(queries_path.read_text(encoding="utf-8")):
        seeds = q["seeds"]
        if len(set(seeds)) != len(seeds) or not set(seeds) <= expected.get(q["class"], set()):
            problems.append(f"query seeds invalid for class {q['class']}: {seeds}")

    cross_class = 0
    specific = 0
    seen: set[str] = set()
    with corpus_path.open("r", encoding="utf-8") as handle:
        for line in handle:
            sentence = json.loads(line)
            mention = sentence["mentions"][0]
            surface = sentence["tokens"][mention["start"]]
            home = surface_class.get(surface)
            if home is None:
                problems.append(f"unplanted entity in corpus: {surface}")
                continue
            seen.add(surface)
            match = _SPECIFIC_TOKEN_RE.match(sentence["tokens"][0])
            if match:
                specific += 1
                if class_name(int(match.group(1))) != home:
                    cross_class += 1
    missing = set(surface_class) - seen
    if missing:
        problems.append(f"{len(missing)} planted entities never appear in the corpus")
    if params.noise == 0.0 and cross_class > 0:
        problems.append(f"noise is 0 but {cross_class} cross-class mentions exist")

    return {
        "ok": not problems,
        "problems": problems,
        "specific_mentions": specific,
        "cross_class_mentions": cross_class,
        "contamination_rate": (cross_class / specific) if specific else 0.0,
    }


def foreign_fraction(extracted: Sequence[str], home_members: Iterable[str],
                     limit: int) -> float:
    """Share of out-of-class entities among the first ``limit`` extractions."""
    home = {normalize_mention(m).canonical for m in home_members}
    head = list(extracted)[:limit]
    if not head:
        return 0.0
    return sum(1 for e in head if e not in home) / len(head)
