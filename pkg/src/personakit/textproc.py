"""Tokenization and stop-word filtering for post text.

Two segmentation modes are provided: whitespace splitting for spaced
scripts, and a dictionary-driven forward-maximum-matching scan for
unspaced (e.g. Chinese) text. Both feed the same downstream token
pipeline. An external segmenter can be plugged in via the Segmenter
protocol.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Protocol

from .errors import ConfigurationError


class TokenizerMode(str, Enum):
    WHITESPACE = "whitespace"
    FORWARD_MAX_MATCH = "forward_max_match"


def normalize_text(text: str) -> str:
    """Canonical form used for keyword matching: NFC, lower case, collapsed whitespace."""
    text = unicodedata.normalize("NFC", text)
    return " ".join(text.lower().split())


def normalize_token(token: str) -> str:
    return unicodedata.normalize("NFC", token).lower()


def read_lexicon(path: str | Path) -> list[str]:
    """Read a one-entry-per-line UTF-8 lexicon file; '#'-prefixed lines are comments."""
    entries: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entries.append(line)
    return entries


@dataclass(frozen=True)
class TokenSequence:
    """An ordered token list; duplicates are kept (frequency matters downstream).

    `filtered_empty` is set by filter_stopwords when filtering empties the
    sequence, so the classifier can route the post to its degenerate-input
    path.
    """

    tokens: tuple[str, ...]
    filtered_empty: bool = False

    def __post_init__(self) -> None:
        if any(t == "" for t in self.tokens):
            raise ValueError("TokenSequence may not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def is_empty(self) -> bool:
        return not self.tokens


@dataclass(frozen=True)
class StopwordSet:
    """Stop words held in normalized form; membership tests normalize the candidate."""

    words: frozenset[str] = frozenset()

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "StopwordSet":
        return cls(frozenset(normalize_token(w) for w in words if w))

    @classmethod
    def from_file(cls, path: str | Path) -> "StopwordSet":
        return cls.from_words(read_lexicon(path))

    def __contains__(self, token: str) -> bool:
        return normalize_token(token) in self.words


@dataclass(frozen=True)
class SegmenterDictionary:
    entries: frozenset[str]
    max_entry_length: int = field(default=0)

    def __post_init__(self) -> None:
        if "" in self.entries:
            raise ValueError("segmenter dictionary may not contain the empty string")
        longest = max((len(e) for e in self.entries), default=0)
        object.__setattr__(self, "max_entry_length", longest)

    @classmethod
    def from_entries(cls, entries: Iterable[str]) -> "SegmenterDictionary":
        return cls(frozenset(e for e in entries if e))

    @classmethod
    def from_file(cls, path: str | Path) -> "SegmenterDictionary":
        return cls.from_entries(read_lexicon(path))


class Segmenter(Protocol):
    def segment(self, text: str) -> list[str]:  # pragma: no cover - protocol
        ...


class FmmSegmenter:
    """Forward maximum matching: greedily emit the longest dictionary entry at
    each position, falling back to a single character when nothing matches.
    The emitted tokens concatenate back to the input string exactly."""

    def __init__(self, dictionary: SegmenterDictionary):
        if not dictionary.entries:
            raise ConfigurationError("forward-max-match requires a non-empty dictionary")
        self.dictionary = dictionary

    def segment(self, text: str) -> list[str]:
        entries = self.dictionary.entries
        max_len = self.dictionary.max_entry_length
        tokens: list[str] = []
        i = 0
        n = len(text)
        while i < n:
            emitted = False
            for size in range(min(max_len, n - i), 1, -1):
                piece = text[i : i + size]
                if piece in entries:
                    tokens.append(piece)
                    i += size
                    emitted = True
                    break
            if not emitted:
                tokens.append(text[i])
                i += 1
        return tokens


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(
    text: str,
    mode: TokenizerMode = TokenizerMode.WHITESPACE,
    dictionary: SegmenterDictionary | None = None,
    unique: bool = False,
) -> TokenSequence:
    """Segment `text` into a TokenSequence.

    Whitespace mode splits on Unicode whitespace and strips edge punctuation.
    Forward-max-match mode requires a dictionary and preserves the input
    verbatim across the emitted tokens (including spaces and punctuation as
    single-character fallbacks). With unique=True duplicate tokens are
    dropped, keeping first occurrences.
    """
    if mode is TokenizerMode.FORWARD_MAX_MATCH:
        if dictionary is None:
            raise ConfigurationError("tokenize(mode=FORWARD_MAX_MATCH) requires a dictionary")
        tokens = FmmSegmenter(dictionary).segment(text)
    elif mode is TokenizerMode.WHITESPACE:
        tokens = [t for t in (_strip_punct(part) for part in text.split()) if t]
    else:
        raise ConfigurationError(f"unknown tokenizer mode: {mode!r}")
    if unique:
        seen: set[str] = set()
        deduped: list[str] = []
        for tok in tokens:
            if tok not in seen:
                seen.add(tok)
                deduped.append(tok)
        tokens = deduped
    return TokenSequence(tuple(tokens))


def filter_stopwords(sequence: TokenSequence, stopwords: StopwordSet) -> TokenSequence:
    """Remove stop words, preserving order; flags the result when filtering
    emptied a non-empty sequence (the flag survives further filtering)."""
    kept = tuple(t for t in sequence.tokens if t not in stopwords)
    emptied = sequence.filtered_empty or (bool(sequence.tokens) and not kept)
    return TokenSequence(kept, filtered_empty=emptied)
