"""Parse entity-annotated corpora into mention records with context features.

The corpus format is one JSON object per line:

    {"tokens": ["We", "pay", "Iowa", "tax"],
     "mentions": [{"start": 2, "end": 3, "type": "LOCATION"}]}

Each mention produces up to six skip-gram features (the words around the
mention with the mention replaced by a placeholder) plus one coarse-type
feature.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Union

PLACEHOLDER = "__"
LEFT_BOUNDARY = "⟨S⟩"
RIGHT_BOUNDARY = "⟨/S⟩"

# (left length, right length) shapes extracted per mention. Six shapes, so a
# mention never yields more than six skip-grams.
SKIPGRAM_SHAPES = ((1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1))

_WS_RE = re.compile(r"\s+")


class CorpusFormatError(ValueError):
    """A corpus line that cannot be turned into an annotated sentence."""


@dataclass(frozen=True)
class EntityId:
    """Canonical identity of an entity: lowercased, whitespace-collapsed."""

    canonical: str


@dataclass(frozen=True)
class Mention:
    start: int
    end: int  # exclusive token index
    surface: str
    coarse_type: str


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[str, ...]
    mentions: tuple[Mention, ...]


@dataclass(frozen=True)
class Skipgram:
    """Context words around a mention, the mention itself replaced by a slot."""

    left: tuple[str, ...]
    right: tuple[str, ...]

    def __post_init__(self):
        if not self.left and not self.right:
            raise ValueError("skip-gram needs at least one context token")


@dataclass(frozen=True)
class TypeFeature:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("type feature needs a non-empty name")


ContextFeature = Union[Skipgram, TypeFeature]


@dataclass(frozen=True)
class MentionRecord:
    entity: EntityId
    features: tuple[ContextFeature, ...]


def normalize_mention(surface: str) -> EntityId:
    """Map a surface form to its canonical entity key (idempotent)."""
    canonical = _WS_RE.sub(" ", surface).strip().lower()
    if not canonical:
        raise ValueError(f"cannot normalize empty surface form: {surface!r}")
    return EntityId(canonical)


def _escape_token(token: str) -> str:
    # Escapes make the space-joined key injective: no raw space or underscore
    # survives, so the "__" slot marker and token boundaries are unambiguous.
    return token.replace("\\", "\\\\").replace(" ", "\\s").replace("_", "\\_")


def _unescape_token(token: str) -> str:
    out = []
    i = 0
    while i < len(token):
        ch = token[i]
        if ch == "\\" and i + 1 < len(token):
            nxt = token[i + 1]
            if nxt == "\\":
                out.append("\\")
            elif nxt == "s":
                out.append(" ")
            elif nxt == "_":
                out.append("_")
            else:
                raise ValueError(f"bad escape in feature key: {token!r}")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def feature_key(feature: ContextFeature) -> str:
    """Serialize a feature to its canonical string key (injective)."""
    if isinstance(feature, TypeFeature):
        return "type:" + feature.name
    parts = [_escape_token(t) for t in feature.left]
    parts.append(PLACEHOLDER)
    parts.extend(_escape_token(t) for t in feature.right)
    return "sg:" + " ".join(parts)


def parse_feature(key: str) -> ContextFeature:
    """Inverse of feature_key."""
    if key.startswith("type:"):
        return TypeFeature(key[len("type:"):])
    if not key.startswith("sg:"):
        raise ValueError(f"unknown feature key kind: {key!r}")
    parts = key[len("sg:"):].split(" ")
    try:
        slot = parts.index(PLACEHOLDER)
    except ValueError:
        raise ValueError(f"skip-gram key without slot marker: {key!r}") from None
    left = tuple(_unescape_token(t) for t in parts[:slot])
    right = tuple(_unescape_token(t) for t in parts[slot + 1:])
    return Skipgram(left, right)


def extract_skipgrams(sentence: AnnotatedSentence, mention_index: int) -> list[Skipgram]:
    """Skip-grams for one mention, one per shape, boundary-padded, deduplicated."""
    mention = sentence.mentions[mention_index]
    tokens = sentence.tokens
    seen = set()
    grams = []
    for n_left, n_right in SKIPGRAM_SHAPES:
        left = tokens[max(0, mention.start - n_left):mention.start]
        pad = n_left - len(left)
        if pad > 0:
            left = (LEFT_BOUNDARY,) * pad + tuple(left)
        right = tokens[mention.end:mention.end + n_right]
        pad = n_right - len(right)
        if pad > 0:
            right = tuple(right) + (RIGHT_BOUNDARY,) * pad
        gram = Skipgram(tuple(left), tuple(right))
        if gram not in seen:
            seen.add(gram)
            grams.append(gram)
    return grams


def _sentence_from_json(obj: object) -> AnnotatedSentence:
    if not isinstance(obj, dict):
        raise CorpusFormatError("record is not a JSON object")
    tokens = obj.get("tokens")
    if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
        raise CorpusFormatError("tokens must be a list of strings")
    raw_mentions = obj.get("mentions", [])
    if not isinstance(raw_mentions, list):
        raise CorpusFormatError("mentions must be a list")
    mentions = []
    for m in raw_mentions:
        if not isinstance(m, dict):
            raise CorpusFormatError("mention is not a JSON object")
        try:
            start, end = int(m["start"]), int(m["end"])
            coarse_type = m["type"]
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"mention missing start/end/type: {exc}") from None
        if not isinstance(coarse_type, str) or not coarse_type:
            raise CorpusFormatError("mention type must be a non-empty string")
        if not (0 <= start < end <= len(tokens)):
            raise CorpusFormatError(
                f"mention span [{start}, {end}) outside token range 0..{len(tokens)}")
        surface = " ".join(tokens[start:end])
        if not surface.strip():
            raise CorpusFormatError(f"mention span [{start}, {end}) has empty surface")
        mentions.append(Mention(start, end, surface, coarse_type))
    mentions.sort(key=lambda m: (m.start, m.end))
    for prev, cur in zip(mentions, mentions[1:]):
        if cur.start < prev.end:
            raise CorpusFormatError("mention spans overlap")
    return AnnotatedSentence(tuple(tokens), tuple(mentions))


def parse_corpus(
    lines: Iterable[str],
    on_error: Callable[[int, str], None] | None = None,
) -> Iterator[AnnotatedSentence]:
    """Yield sentences from a line-oriented corpus stream.

    Malformed lines are skipped; each is reported to ``on_error`` with its
    1-based line number. I/O errors from the underlying stream propagate.
    """
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if on_error is not None:
                on_error(line_no, f"invalid JSON: {exc.msg}")
            continue
        try:
            yield _sentence_from_json(obj)
        except CorpusFormatError as exc:
            if on_error is not None:
                on_error(line_no, str(exc))


def mention_stream(sentences: Iterable[AnnotatedSentence]) -> Iterator[MentionRecord]:
    """One record per mention: its skip-grams plus exactly one type feature."""
    for sentence in sentences:
        for i, mention in enumerate(sentence.mentions):
            features: list[ContextFeature] = list(extract_skipgrams(sentence, i))
            features.append(TypeFeature(mention.coarse_type))
            yield MentionRecord(normalize_mention(mention.surface), tuple(features))
