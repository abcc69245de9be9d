"""Surface filters for candidate texts and topic-indicator detection.

A candidate topic or claim is rejected when it contains characters outside
the allowed Chinese set, is too long, or contains a pronoun; rejection
reasons are reported in that fixed priority order. Topic candidates are
sentences containing at least one high-frequency indicator word such as
应 (should) or 最 (most).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

REJECT_NON_CHINESE = "non_chinese"
REJECT_TOO_LONG = "too_long"
REJECT_PRONOUN = "pronoun"

# Standard Mandarin personal + demonstrative pronouns; the published list
# is unavailable, so this default is config-overridable.
DEFAULT_PRONOUNS: Tuple[str, ...] = (
    "我", "你", "他", "她", "它",
    "我们", "你们", "他们", "她们", "它们",
    "这", "那", "这些", "那些", "此", "其",
)

# 应/最 are attested indicators; the rest extend them and are an assumption.
DEFAULT_TOPIC_INDICATORS: Tuple[str, ...] = ("应", "最", "应该", "必须", "不应", "更")

# Chinese punctuation admitted by the charset filter. Candidate texts keep
# interior commas until connective deletion, so rejecting ，here would
# reject every single-line extraction.
DEFAULT_ALLOWED_PUNCT = "。，！？；：、“”‘’（）《》…—·"

_DISALLOWED_CACHE: dict = {}


@dataclass(frozen=True)
class FilterConfig:
    """Charset/length/pronoun filter settings plus topic indicators."""

    max_chars: int = 100
    pronouns: Tuple[str, ...] = DEFAULT_PRONOUNS
    allowed_punct: str = DEFAULT_ALLOWED_PUNCT
    topic_indicators: Tuple[str, ...] = DEFAULT_TOPIC_INDICATORS

    def __post_init__(self):
        if self.max_chars <= 0:
            raise ValueError("max_chars must be positive")
        if not self.pronouns or not self.topic_indicators:
            raise ValueError("pronoun and indicator lists must be non-empty")

    def disallowed_re(self) -> re.Pattern:
        """Compiled pattern matching any character outside the allowed set.

        Allowed = CJK unified ideographs (U+4E00..U+9FFF) plus
        ``allowed_punct``. Digits and Latin letters are rejected.
        """
        key = (self.allowed_punct,)
        cached = _DISALLOWED_CACHE.get(key)
        if cached is None:
            cached = re.compile("[^一-鿿%s]" % re.escape(self.allowed_punct))
            _DISALLOWED_CACHE[key] = cached
        return cached


DEFAULT_FILTERS = FilterConfig()


def reject_reason(text: str, cfg: FilterConfig = DEFAULT_FILTERS) -> Optional[str]:
    """Return the first failing reason, or None when the text passes.

    Priority: non_chinese, then too_long, then pronoun. Length is the
    Unicode scalar count; pronouns match as substrings because the text
    is unsegmented.
    """
    if not text or cfg.disallowed_re().search(text):
        return REJECT_NON_CHINESE
    if len(text) > cfg.max_chars:
        return REJECT_TOO_LONG
    for pronoun in cfg.pronouns:
        if pronoun in text:
            return REJECT_PRONOUN
    return None


def passes_filters(text: str, cfg: FilterConfig = DEFAULT_FILTERS) -> bool:
    return reject_reason(text, cfg) is None


def is_topic_candidate(text: str, cfg: FilterConfig = DEFAULT_FILTERS) -> bool:
    """True iff the text contains at least one topic-indicator substring."""
    return any(ind in text for ind in cfg.topic_indicators)
