"""Discourse-connective extraction rules and window matching.

Two rule shapes exist. A *multiline* pattern fires when a sentence opens
with a connective like 因此 and a preceding sentence exists; the pair of
sentences becomes the two segments. A *singleline* pattern fires inside
one sentence shaped like ``S1 c1 S2，S3 c2 S4。``: the head connective c1
must sit at (or within 10 characters of) the start of the first comma
fragment and the tail connective c2 must be the exact prefix of a later
fragment. Matched connectives are deleted from the emitted segments and
their positions recorded, so the original sentences are reconstructible.

Role assignment follows the semantic convention that the consequence
clause of a causal pair is the topic and the reason clause the claim,
while for adversative pairs the concessive clause is the topic; each
pattern carries a ``first_is`` role map making the opposite convention a
config-file change.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

from .corpus import Sentence, trim_terminators

SUPPORT = "Support"
AGAINST = "Against"
NEUTRAL = "Neutral"
LABELS = (SUPPORT, AGAINST, NEUTRAL)

MULTILINE = "multiline"
SINGLELINE = "singleline"

ROLE_TOPIC = "topic"
ROLE_CLAIM = "claim"

# Characters stripped from segment edges after connective deletion.
_EDGE_PUNCT = "。！？；，"

# Singleline head connectives may be preceded by a short subject.
HEAD_SEARCH_LIMIT = 10


@dataclass(frozen=True)
class ConnectivePattern:
    """One extraction rule: connective strings, relation, and role map."""

    pattern_id: str
    relation: str
    arity: str
    head: str
    tail: Optional[str] = None
    first_is: str = ROLE_CLAIM

    def __post_init__(self):
        if self.relation not in (SUPPORT, AGAINST):
            raise ValueError(f"relation must be Support or Against: {self.relation!r}")
        if self.arity not in (MULTILINE, SINGLELINE):
            raise ValueError(f"unknown arity: {self.arity!r}")
        if not self.head:
            raise ValueError("head connective must be non-empty")
        if self.arity == SINGLELINE and not self.tail:
            raise ValueError(f"singleline pattern {self.pattern_id} needs a tail connective")
        if self.arity == MULTILINE and self.tail:
            raise ValueError(f"multiline pattern {self.pattern_id} must not have a tail")
        if self.first_is not in (ROLE_TOPIC, ROLE_CLAIM):
            raise ValueError(f"first_is must be topic or claim: {self.first_is!r}")

    def connectives(self) -> Tuple[str, ...]:
        return (self.head,) if self.tail is None else (self.head, self.tail)


@dataclass(frozen=True)
class PatternMatch:
    """A fired rule with connective-free segments and deletion provenance.

    ``removals`` holds (sentence_index, char_offset, connective) triples
    with offsets into the original sentence text, so reinserting the
    deleted strings reconstructs the sentences exactly.
    """

    pattern_id: str
    relation: str
    doc_id: str
    sentence_indices: Tuple[int, ...]
    first_segment: str
    second_segment: str
    removals: Tuple[Tuple[int, int, str], ...]


@dataclass(frozen=True)
class CandidatePair:
    """A (topic, claim, relation) triple with extraction provenance."""

    topic: str
    claim: str
    relation: str
    doc_id: str
    pattern_id: str
    sentence_indices: Tuple[int, ...]
    topic_sentence_index: int


def default_patterns() -> list[ConnectivePattern]:
    """The shipped connective inventory, in match-precedence order.

    Causal singleline pairs put the reason first except 之所以…是因为…,
    where the consequence leads, hence its flipped role map.
    """
    return [
        ConnectivePattern("support_ml_因此", SUPPORT, MULTILINE, "因此", first_is=ROLE_CLAIM),
        ConnectivePattern("support_ml_因而", SUPPORT, MULTILINE, "因而", first_is=ROLE_CLAIM),
        ConnectivePattern("support_ml_所以", SUPPORT, MULTILINE, "所以", first_is=ROLE_CLAIM),
        ConnectivePattern("against_ml_但是", AGAINST, MULTILINE, "但是", first_is=ROLE_TOPIC),
        ConnectivePattern("against_ml_然而", AGAINST, MULTILINE, "然而", first_is=ROLE_TOPIC),
        ConnectivePattern("against_ml_可是", AGAINST, MULTILINE, "可是", first_is=ROLE_TOPIC),
        ConnectivePattern("support_sl_因为所以", SUPPORT, SINGLELINE, "因为", "所以", first_is=ROLE_CLAIM),
        ConnectivePattern("support_sl_只要就", SUPPORT, SINGLELINE, "只要", "就", first_is=ROLE_CLAIM),
        ConnectivePattern("support_sl_要是就", SUPPORT, SINGLELINE, "要是", "就", first_is=ROLE_CLAIM),
        ConnectivePattern("support_sl_之所以是因为", SUPPORT, SINGLELINE, "之所以", "是因为", first_is=ROLE_TOPIC),
        ConnectivePattern("against_sl_虽然但是", AGAINST, SINGLELINE, "虽然", "但是", first_is=ROLE_TOPIC),
        ConnectivePattern("against_sl_虽然可是", AGAINST, SINGLELINE, "虽然", "可是", first_is=ROLE_TOPIC),
        ConnectivePattern("against_sl_尽管但是", AGAINST, SINGLELINE, "尽管", "但是", first_is=ROLE_TOPIC),
    ]


def load_patterns(path: str | Path) -> list[ConnectivePattern]:
    """Load a pattern inventory from a JSON config file.

    The file is a JSON list of objects with keys pattern_id, relation,
    arity, head, tail (null for multiline), first_is.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError(f"pattern file {path} must contain a JSON list")
    patterns = []
    seen = set()
    for i, obj in enumerate(raw):
        try:
            pattern = ConnectivePattern(
                pattern_id=obj["pattern_id"],
                relation=obj["relation"],
                arity=obj["arity"],
                head=obj["head"],
                tail=obj.get("tail"),
                first_is=obj.get("first_is", ROLE_CLAIM),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"pattern entry {i} in {path} is malformed: {exc}") from exc
        if pattern.pattern_id in seen:
            raise ValueError(f"duplicate pattern_id {pattern.pattern_id!r} in {path}")
        seen.add(pattern.pattern_id)
        patterns.append(pattern)
    return patterns


def save_patterns(patterns: Sequence[ConnectivePattern], path: str | Path) -> None:
    entries = [
        {
            "pattern_id": p.pattern_id,
            "relation": p.relation,
            "arity": p.arity,
            "head": p.head,
            "tail": p.tail,
            "first_is": p.first_is,
        }
        for p in patterns
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(entries, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _clean_segment(text: str) -> str:
    return text.strip(_EDGE_PUNCT)


def _segments_valid(pattern: ConnectivePattern, first: str, second: str) -> bool:
    if not first or not second or first == second:
        return False
    # Residual occurrences of the matched connectives invalidate the match.
    for conn in pattern.connectives():
        if conn in first or conn in second:
            return False
    return True


def _try_multiline(
    pattern: ConnectivePattern, prev: Sentence, cur: Sentence
) -> Optional[PatternMatch]:
    if not cur.text.startswith(pattern.head):
        return None
    first = _clean_segment(prev.text)
    second = _clean_segment(cur.text[len(pattern.head):])
    if not _segments_valid(pattern, first, second):
        return None
    return PatternMatch(
        pattern_id=pattern.pattern_id,
        relation=pattern.relation,
        doc_id=cur.doc_id,
        sentence_indices=(prev.index, cur.index),
        first_segment=first,
        second_segment=second,
        removals=((cur.index, 0, pattern.head),),
    )


def _try_singleline(pattern: ConnectivePattern, cur: Sentence) -> Optional[PatternMatch]:
    frags = cur.fragment_texts()
    if len(frags) < 2:
        return None
    head_pos = frags[0].find(pattern.head, 0, HEAD_SEARCH_LIMIT + len(pattern.head))
    if head_pos < 0:
        return None
    tail_frag = -1
    for j in range(1, len(frags)):
        if frags[j].startswith(pattern.tail):
            tail_frag = j
            break
    if tail_frag < 0:
        return None
    head_clause = "，".join(frags[:tail_frag])
    first = _clean_segment(head_clause[:head_pos] + head_clause[head_pos + len(pattern.head):])
    tail_clause = "，".join(frags[tail_frag:])
    second = _clean_segment(tail_clause[len(pattern.tail):])
    if not _segments_valid(pattern, first, second):
        return None
    spans = cur.fragment_spans
    return PatternMatch(
        pattern_id=pattern.pattern_id,
        relation=pattern.relation,
        doc_id=cur.doc_id,
        sentence_indices=(cur.index,),
        first_segment=first,
        second_segment=second,
        removals=(
            (cur.index, spans[0][0] + head_pos, pattern.head),
            (cur.index, spans[tail_frag][0], pattern.tail),
        ),
    )


def match_pair(
    window: Tuple[Optional[Sentence], Sentence],
    patterns: Sequence[ConnectivePattern],
) -> Optional[PatternMatch]:
    """Match a (previous, current) sentence window against the inventory.

    Multiline patterns are checked before singleline ones; within an
    arity, inventory order decides. Returns the first valid match, or
    None. Matches whose segments would be empty, equal, or still contain
    a connective of the matched pattern are not emitted.
    """
    prev, cur = window
    if prev is not None:
        if prev.doc_id != cur.doc_id or prev.index + 1 != cur.index:
            raise ValueError("window sentences must be adjacent in one document")
        for pattern in patterns:
            if pattern.arity != MULTILINE:
                continue
            match = _try_multiline(pattern, prev, cur)
            if match is not None:
                return match
    for pattern in patterns:
        if pattern.arity != SINGLELINE:
            continue
        match = _try_singleline(pattern, cur)
        if match is not None:
            return match
    return None


def to_candidate(
    match: PatternMatch, patterns: Sequence[ConnectivePattern] | dict
) -> CandidatePair:
    """Apply the matched pattern's role map to produce a (topic, claim) pair."""
    if isinstance(patterns, dict):
        pattern = patterns[match.pattern_id]
    else:
        pattern = next(p for p in patterns if p.pattern_id == match.pattern_id)
    if pattern.first_is == ROLE_TOPIC:
        topic, claim = match.first_segment, match.second_segment
        topic_pos = 0
    else:
        topic, claim = match.second_segment, match.first_segment
        topic_pos = -1
    return CandidatePair(
        topic=topic,
        claim=claim,
        relation=match.relation,
        doc_id=match.doc_id,
        pattern_id=match.pattern_id,
        sentence_indices=match.sentence_indices,
        topic_sentence_index=match.sentence_indices[topic_pos],
    )


def reinsert_connectives(sentence_text_after_deletion: str, removals: Iterable[Tuple[int, str]]) -> str:
    """Rebuild original sentence text from its connective-deleted form.

    ``removals`` holds (offset, connective) pairs with offsets in the
    original text, applied in ascending order.
    """
    text = sentence_text_after_deletion
    for offset, conn in sorted(removals):
        text = text[:offset] + conn + text[offset:]
    return text


def delete_connectives(sentence_text: str, removals: Iterable[Tuple[int, str]]) -> str:
    """Remove connectives at recorded original-text offsets."""
    text = sentence_text
    for offset, conn in sorted(removals, reverse=True):
        if text[offset:offset + len(conn)] != conn:
            raise ValueError("removal record does not match sentence text")
        text = text[:offset] + text[offset + len(conn):]
    return text
