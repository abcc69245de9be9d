"""Assembly of the high-noise silver dataset from a raw corpus.

The pipeline per document: segment, slide a (previous, current) window,
match connective patterns, apply surface filters to both topic and claim,
then draw Neutral partners from nearby sentences. Extraction is
embarrassingly parallel per document; Neutral sampling, dedup, and
ordering happen in a single deterministic pass afterwards, so output is
byte-identical for any worker count.

Dedup collapses identical (label, topic, claim) triples across documents,
keeping the first occurrence in canonical (doc_id, sentence indices,
pattern_id) order. Dataset files are JSONL sorted by example id with a
sidecar manifest carrying counts, seed, and config digest.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .corpus import Document, Sentence, segment, trim_terminators
from .filters import DEFAULT_FILTERS, FilterConfig, passes_filters, reject_reason
from .patterns import (
    AGAINST,
    LABELS,
    NEUTRAL,
    SUPPORT,
    CandidatePair,
    ConnectivePattern,
    match_pair,
    to_candidate,
)

TAG_D1 = "D1"
TAG_D2 = "D2"
TAG_GOLD = "gold"
TAG_BACKTRANS = "backtrans"
TAG_DX = "Dx"

NEUTRAL_PATTERN_ID = "neutral"


@dataclass(frozen=True)
class NeutralConfig:
    """Neutral-pair sampling: neighborhood radius and draws per pair."""

    window: int = 3
    per_pair: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.per_pair < 0:
            raise ValueError("per_pair must be >= 0")


@dataclass(frozen=True)
class SilverExample:
    """One (topic, claim, label) triple with full provenance."""

    example_id: str
    topic: str
    claim: str
    label: str
    dataset_tag: str
    doc_id: str
    pattern_id: str
    sentence_indices: Tuple[int, ...] = ()

    def to_record(self) -> dict:
        return {
            "id": self.example_id,
            "topic": self.topic,
            "claim": self.claim,
            "label": self.label,
            "tag": self.dataset_tag,
            "doc_id": self.doc_id,
            "pattern_id": self.pattern_id,
        }

    def retagged(self, tag: str) -> "SilverExample":
        return SilverExample(
            example_id=self.example_id,
            topic=self.topic,
            claim=self.claim,
            label=self.label,
            dataset_tag=tag,
            doc_id=self.doc_id,
            pattern_id=self.pattern_id,
            sentence_indices=self.sentence_indices,
        )


def example_id_for(
    doc_id: str, pattern_id: str, sentence_indices: Tuple[int, ...], topic: str, claim: str
) -> str:
    """Stable content hash identifying an example (sha1 over provenance + texts)."""
    payload = "\x1f".join(
        [doc_id, pattern_id, ",".join(str(i) for i in sentence_indices), topic, claim]
    )
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SilverDataset:
    """Ordered, manifest-described collection of silver examples."""

    examples: Tuple[SilverExample, ...]
    counts: Dict[str, int]
    build_config_digest: str
    seed: int

    @classmethod
    def from_examples(
        cls, examples: Iterable[SilverExample], config_digest: str = "", seed: int = 0
    ) -> "SilverDataset":
        ordered = tuple(sorted(examples, key=lambda e: e.example_id))
        ids = set()
        for ex in ordered:
            if ex.example_id in ids:
                raise ValueError(f"example_id collision: {ex.example_id}")
            ids.add(ex.example_id)
        counts = {label: 0 for label in LABELS}
        for ex in ordered:
            counts[ex.label] += 1
        return cls(examples=ordered, counts=counts, build_config_digest=config_digest, seed=seed)

    def __len__(self) -> int:
        return len(self.examples)

    def content_digest(self) -> str:
        """sha256 over the sorted example ids; identifies dataset content."""
        h = hashlib.sha256()
        for ex in self.examples:
            h.update(ex.example_id.encode("ascii"))
            h.update(b"\n")
        return h.hexdigest()

    def by_label(self) -> Dict[str, List[SilverExample]]:
        groups: Dict[str, List[SilverExample]] = {label: [] for label in LABELS}
        for ex in self.examples:
            groups[ex.label].append(ex)
        return groups


# ---------------------------------------------------------------------------
# Neutral sampling


def eligible_neutral_neighbors(
    sentences: Sequence[Sentence],
    topic_index: int,
    window: int,
    exclude: Tuple[int, ...] = (),
    cfg: FilterConfig = DEFAULT_FILTERS,
) -> Tuple[str, List[Tuple[int, str]]]:
    """Return (topic text, eligible neighbor list) for Neutral drawing.

    Neighbors are sentences within ``window`` of the topic sentence,
    excluding the topic itself and the excluded (claim) sentences; both
    sides must pass the surface filters after terminator trimming. An
    empty list is returned when the topic text itself fails the filters.
    """
    topic_text = trim_terminators(sentences[topic_index].text)
    if not passes_filters(topic_text, cfg):
        return topic_text, []
    eligible: List[Tuple[int, str]] = []
    lo = max(0, topic_index - window)
    hi = min(len(sentences) - 1, topic_index + window)
    for idx in range(lo, hi + 1):
        if idx == topic_index or idx in exclude:
            continue
        text = trim_terminators(sentences[idx].text)
        if not text or text == topic_text:
            continue
        if not passes_filters(text, cfg):
            continue
        eligible.append((idx, text))
    return topic_text, eligible


def sample_neutral(
    sentences: Sequence[Sentence],
    topic_index: int,
    window: int,
    rng: random.Random,
    exclude: Tuple[int, ...] = (),
    cfg: FilterConfig = DEFAULT_FILTERS,
) -> Optional[CandidatePair]:
    """Draw one Neutral partner uniformly from the eligible neighborhood."""
    topic_text, eligible = eligible_neutral_neighbors(
        sentences, topic_index, window, exclude, cfg
    )
    if not eligible:
        return None
    idx, text = eligible[rng.randrange(len(eligible))]
    return CandidatePair(
        topic=topic_text,
        claim=text,
        relation=NEUTRAL,
        doc_id=sentences[topic_index].doc_id,
        pattern_id=NEUTRAL_PATTERN_ID,
        sentence_indices=(topic_index, idx),
        topic_sentence_index=topic_index,
    )


# ---------------------------------------------------------------------------
# Per-document extraction (parallelizable, pure)


@dataclass(frozen=True)
class ExtractedPair:
    """A filtered Support/Against pair plus its Neutral eligibility list.

    ``neutral_topic`` is the trimmed text of the topic sentence, the
    first element of any Neutral pair drawn for this extraction.
    """

    candidate: CandidatePair
    neutral_topic: str
    eligible: Tuple[Tuple[int, str], ...]


def _new_counters() -> Dict[str, int]:
    return {
        "docs_read": 0,
        "malformed_lines": 0,
        "empty_docs": 0,
        "sentences": 0,
        "pattern_matches": 0,
        "pairs_kept": 0,
        "rejected_non_chinese": 0,
        "rejected_too_long": 0,
        "rejected_pronoun": 0,
        "rejected_degenerate": 0,
        "neutral_drawn": 0,
        "duplicates_removed": 0,
        "zero_pairs": 0,
    }


def extract_document(
    doc: Document,
    patterns: Sequence[ConnectivePattern],
    filter_cfg: FilterConfig,
    neutral_cfg: NeutralConfig,
    counters: Optional[Dict[str, int]] = None,
) -> List[ExtractedPair]:
    """Run segmentation, matching, and filtering over one document."""
    if counters is None:
        counters = _new_counters()
    pattern_index = {p.pattern_id: p for p in patterns}
    sentences = segment(doc)
    counters["sentences"] += len(sentences)
    kept: List[ExtractedPair] = []
    for i, cur in enumerate(sentences):
        prev = sentences[i - 1] if i > 0 else None
        match = match_pair((prev, cur), patterns)
        if match is None:
            continue
        counters["pattern_matches"] += 1
        candidate = to_candidate(match, pattern_index)
        rejected = False
        for text in (candidate.topic, candidate.claim):
            reason = reject_reason(text, filter_cfg)
            if reason is not None:
                counters[f"rejected_{reason}"] += 1
                rejected = True
                break
        if rejected:
            continue
        if candidate.topic == candidate.claim:
            counters["rejected_degenerate"] += 1
            continue
        counters["pairs_kept"] += 1
        neutral_topic, eligible = eligible_neutral_neighbors(
            sentences,
            candidate.topic_sentence_index,
            neutral_cfg.window,
            exclude=candidate.sentence_indices,
            cfg=filter_cfg,
        )
        kept.append(
            ExtractedPair(
                candidate=candidate,
                neutral_topic=neutral_topic,
                eligible=tuple(eligible),
            )
        )
    return kept


_WORKER_CTX: dict = {}


def _init_worker(patterns, filter_cfg, neutral_cfg):
    _WORKER_CTX["patterns"] = patterns
    _WORKER_CTX["filter_cfg"] = filter_cfg
    _WORKER_CTX["neutral_cfg"] = neutral_cfg


def _work_chunk(docs: List[Document]) -> Tuple[List[ExtractedPair], Dict[str, int]]:
    counters = _new_counters()
    pairs: List[ExtractedPair] = []
    for doc in docs:
        pairs.extend(
            extract_document(
                doc,
                _WORKER_CTX["patterns"],
                _WORKER_CTX["filter_cfg"],
                _WORKER_CTX["neutral_cfg"],
                counters,
            )
        )
    return pairs, counters


def _chunked(stream: Iterable[Document], size: int) -> Iterator[List[Document]]:
    chunk: List[Document] = []
    for doc in stream:
        chunk.append(doc)
        if len(chunk) >= size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def _pair_sort_key(pair: ExtractedPair):
    c = pair.candidate
    return (c.doc_id, c.sentence_indices, c.pattern_id)


def build_d1(
    corpus: Iterable[Document],
    patterns: Sequence[ConnectivePattern],
    filter_cfg: FilterConfig,
    neutral_cfg: NeutralConfig,
    seed: int,
    threads: int = 1,
    config_digest: str = "",
    counters: Optional[Dict[str, int]] = None,
    chunk_size: int = 200,
) -> SilverDataset:
    """Build the extracted silver dataset from a document stream.

    Extraction may run on a process pool; the Neutral draws, dedup, and
    final ordering are a sequential pass over the canonically sorted pair
    stream, so the result depends only on (corpus, config, seed).
    """
    if counters is None:
        counters = _new_counters()

    all_pairs: List[ExtractedPair] = []
    if threads <= 1:
        for doc in corpus:
            all_pairs.extend(
                extract_document(doc, patterns, filter_cfg, neutral_cfg, counters)
            )
    else:
        with Pool(
            processes=threads,
            initializer=_init_worker,
            initargs=(list(patterns), filter_cfg, neutral_cfg),
        ) as pool:
            for pairs, chunk_counters in pool.imap(
                _work_chunk, _chunked(corpus, chunk_size)
            ):
                all_pairs.extend(pairs)
                for key, value in chunk_counters.items():
                    counters[key] = counters.get(key, 0) + value

    all_pairs.sort(key=_pair_sort_key)

    rng = random.Random(seed)
    stream: List[CandidatePair] = []
    for pair in all_pairs:
        stream.append(pair.candidate)
        eligible = list(pair.eligible)
        for _ in range(neutral_cfg.per_pair):
            if not eligible:
                break
            idx, text = eligible.pop(rng.randrange(len(eligible)))
            counters["neutral_drawn"] += 1
            stream.append(
                CandidatePair(
                    topic=pair.neutral_topic,
                    claim=text,
                    relation=NEUTRAL,
                    doc_id=pair.candidate.doc_id,
                    pattern_id=NEUTRAL_PATTERN_ID,
                    sentence_indices=(pair.candidate.topic_sentence_index, idx),
                    topic_sentence_index=pair.candidate.topic_sentence_index,
                )
            )

    seen = set()
    examples: List[SilverExample] = []
    for cand in stream:
        key = (cand.relation, cand.topic, cand.claim)
        if key in seen:
            counters["duplicates_removed"] += 1
            continue
        seen.add(key)
        examples.append(
            SilverExample(
                example_id=example_id_for(
                    cand.doc_id, cand.pattern_id, cand.sentence_indices, cand.topic, cand.claim
                ),
                topic=cand.topic,
                claim=cand.claim,
                label=cand.relation,
                dataset_tag=TAG_D1,
                doc_id=cand.doc_id,
                pattern_id=cand.pattern_id,
                sentence_indices=cand.sentence_indices,
            )
        )

    if not examples:
        counters["zero_pairs"] = 1
    return SilverDataset.from_examples(examples, config_digest=config_digest, seed=seed)


# ---------------------------------------------------------------------------
# Wait — build_d1's Neutral topic differs from sample_neutral's. See note below.


def balance(
    ds: SilverDataset, seed: int, target_per_class: Optional[int] = None
) -> SilverDataset:
    """Truncate classes to a common size by seeded sampling without replacement.

    The effective target is ``target_per_class`` when given, else the
    smallest class count; each class keeps min(target, class size)
    examples with relative order preserved. Classes already at or below
    the target pass through untouched, which makes the operation
    idempotent.
    """
    if not ds.examples:
        raise ValueError("cannot balance an empty dataset")
    groups = ds.by_label()
    if target_per_class is not None:
        if all(target_per_class > len(g) for g in groups.values()):
            raise ValueError(
                f"target_per_class={target_per_class} exceeds every class count "
                f"{ {k: len(v) for k, v in groups.items()} }"
            )
        target = target_per_class
    else:
        target = min(len(g) for g in groups.values())
    rng = random.Random(seed)
    kept: List[SilverExample] = []
    for label in LABELS:
        group = groups[label]
        keep_n = min(target, len(group))
        if keep_n == len(group):
            kept.extend(group)
        else:
            for i in sorted(rng.sample(range(len(group)), keep_n)):
                kept.append(group[i])
    return SilverDataset.from_examples(
        kept, config_digest=ds.build_config_digest, seed=seed
    )


# ---------------------------------------------------------------------------
# File formats

_RECORD_FIELDS = ("id", "topic", "claim", "label", "tag", "doc_id", "pattern_id")


def write_dataset_jsonl(ds: SilverDataset, path: str | Path) -> None:
    """Write examples as UTF-8 JSONL sorted by example id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for ex in ds.examples:
            fh.write(json.dumps(ex.to_record(), ensure_ascii=False))
            fh.write("\n")


def write_dataset_manifest(
    ds: SilverDataset,
    path: str | Path,
    counters: Optional[Dict[str, int]] = None,
    extra: Optional[dict] = None,
) -> None:
    manifest = {
        "examples": len(ds.examples),
        "counts": {label: ds.counts.get(label, 0) for label in LABELS},
        "seed": ds.seed,
        "config_digest": ds.build_config_digest,
        "content_digest": ds.content_digest(),
    }
    if counters:
        manifest["counters"] = dict(sorted(counters.items()))
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def manifest_path_for(dataset_path: str | Path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".manifest.json")


def load_examples(path: str | Path) -> List[SilverExample]:
    """Read a dataset JSONL file; raises on malformed rows."""
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            missing = [k for k in _RECORD_FIELDS if k not in rec]
            if missing:
                raise ValueError(f"{path}:{lineno}: missing fields {missing}")
            if rec["label"] not in LABELS:
                raise ValueError(f"{path}:{lineno}: unknown label {rec['label']!r}")
            examples.append(
                SilverExample(
                    example_id=rec["id"],
                    topic=rec["topic"],
                    claim=rec["claim"],
                    label=rec["label"],
                    dataset_tag=rec["tag"],
                    doc_id=rec["doc_id"],
                    pattern_id=rec["pattern_id"],
                )
            )
    return examples


def load_dataset(path: str | Path, config_digest: str = "", seed: int = 0) -> SilverDataset:
    """Load a dataset file, picking up seed/digest from its manifest if present."""
    examples = load_examples(path)
    manifest_path = manifest_path_for(path)
    if manifest_path.exists():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        config_digest = manifest.get("config_digest", config_digest)
        seed = manifest.get("seed", seed)
    return SilverDataset.from_examples(examples, config_digest=config_digest, seed=seed)
