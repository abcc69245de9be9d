"""Streaming corpus ingestion and Chinese sentence/fragment segmentation.

Documents come from plain-text (one document per line) or JSONL files and
are normalized before anything else sees them: all ASCII whitespace and
full-width spaces are removed, so downstream offsets always refer to the
normalized text. Sentences split after runs of the terminators 。！？；
and each sentence carries its comma-fragment decomposition (only the
full-width comma ， opens a new fragment; 、 and ； do not).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Tuple

SENTENCE_TERMINATORS = "。！？；"
FRAGMENT_COMMA = "，"

# ASCII whitespace plus the full-width space; removed outright so that the
# "non-Chinese character" filter never trips on invisible characters.
_WHITESPACE_RE = re.compile(r"[ \t\r\n\v\f　]+")

# A sentence is any run of non-terminator text plus the maximal run of
# terminators that follows it; a terminator-less tail is also a sentence.
_SENTENCE_RE = re.compile(
    "[^%(t)s]*[%(t)s]+|[^%(t)s]+" % {"t": SENTENCE_TERMINATORS}
)


def normalize_text(text: str) -> str:
    """Remove ASCII whitespace and full-width spaces."""
    return _WHITESPACE_RE.sub("", text)


def trim_terminators(text: str) -> str:
    """Strip trailing sentence terminators (。！？；)."""
    return text.rstrip(SENTENCE_TERMINATORS)


@dataclass(frozen=True)
class Document:
    """One raw-text document, already whitespace-normalized."""

    doc_id: str
    text: str
    source_tag: str = ""


@dataclass(frozen=True)
class Sentence:
    """A sentence with its char span in the document and comma fragments.

    ``char_span`` indexes into the normalized document text. Fragment
    spans are relative to the sentence text; each span includes its
    trailing ， so the spans exactly partition the sentence. Use
    ``fragment_texts()`` for the comma-stripped fragment strings.
    """

    doc_id: str
    index: int
    text: str
    char_span: Tuple[int, int]
    fragment_spans: Tuple[Tuple[int, int], ...] = field(default=())

    def fragment_texts(self) -> Tuple[str, ...]:
        return tuple(
            self.text[a:b].rstrip(FRAGMENT_COMMA) for a, b in self.fragment_spans
        )

    def trimmed(self) -> str:
        """Sentence text without trailing terminators."""
        return trim_terminators(self.text)


@dataclass
class IngestStats:
    """Counters accumulated while streaming a corpus file."""

    docs_read: int = 0
    malformed_lines: int = 0
    empty_docs: int = 0
    bytes_read: int = 0


def _fragment_spans(text: str) -> Tuple[Tuple[int, int], ...]:
    spans = []
    start = 0
    while True:
        cut = text.find(FRAGMENT_COMMA, start)
        if cut < 0:
            spans.append((start, len(text)))
            break
        spans.append((start, cut + 1))
        start = cut + 1
    return tuple(spans)


def segment(doc: Document) -> list[Sentence]:
    """Split a document into sentences with fragment decompositions.

    Pure function; the concatenation of sentence texts in index order is
    exactly ``doc.text``.
    """
    sentences = []
    for i, m in enumerate(_SENTENCE_RE.finditer(doc.text)):
        text = m.group(0)
        sentences.append(
            Sentence(
                doc_id=doc.doc_id,
                index=i,
                text=text,
                char_span=(m.start(), m.end()),
                fragment_spans=_fragment_spans(text),
            )
        )
    return sentences


def ingest(
    path: str | Path,
    fmt: str = "plain",
    stats: Optional[IngestStats] = None,
    source_tag: str = "",
) -> Iterator[Document]:
    """Stream documents from a corpus file.

    plain: each non-empty line is one document with id ``<filename>:<lineno>``
    (1-based). jsonl: each line is an object with string fields ``id`` and
    ``text``; malformed lines are skipped and counted. Memory use is
    independent of file size.
    """
    path = Path(path)
    if fmt not in ("plain", "jsonl"):
        raise ValueError(f"unknown corpus format: {fmt!r}")
    if stats is None:
        stats = IngestStats()
    tag = source_tag or path.name
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stats.bytes_read += len(line.encode("utf-8"))
            if fmt == "plain":
                text = normalize_text(line)
                if not text:
                    continue
                stats.docs_read += 1
                yield Document(doc_id=f"{path.name}:{lineno}", text=text, source_tag=tag)
            else:
                stripped = line.strip()
                if not stripped:
                    continue
                try:
                    obj = json.loads(stripped)
                except json.JSONDecodeError:
                    stats.malformed_lines += 1
                    continue
                if (
                    not isinstance(obj, dict)
                    or not isinstance(obj.get("id"), str)
                    or not isinstance(obj.get("text"), str)
                ):
                    stats.malformed_lines += 1
                    continue
                text = normalize_text(obj["text"])
                if not text:
                    stats.empty_docs += 1
                    continue
                stats.docs_read += 1
                yield Document(doc_id=obj["id"], text=text, source_tag=tag)


def ingest_many(
    paths: Iterable[Tuple[str | Path, str]],
    stats: Optional[IngestStats] = None,
) -> Iterator[Document]:
    """Chain several (path, format) corpus inputs into one stream."""
    for path, fmt in paths:
        yield from ingest(path, fmt, stats=stats)
