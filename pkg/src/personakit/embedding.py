"""Word-vector store: word2vec text format IO, exact lookup, cosine similarity.

The text format is the interchange truth: first line "<count> <dimension>",
then one "<token> <c1> ... <cdim>" row per entry. Vectors are stored exactly
as declared in the file; normalization happens inside the similarity
function, never at load time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass
class EmbeddingStore:
    """Immutable-after-load token -> vector map; safe for concurrent readers."""

    dimension: int
    entries: dict[str, np.ndarray]
    load_warnings: list[str] = field(default_factory=list)

    def lookup(self, token: str):
        """Exact-match lookup; returns None for out-of-vocabulary tokens."""
        return self.entries.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_dict(cls, vectors: dict[str, "np.ndarray | list[float]"]) -> "EmbeddingStore":
        if not vectors:
            raise ValueError("empty vector table")
        entries = {tok: np.asarray(vec, dtype=np.float64) for tok, vec in vectors.items()}
        dims = {v.shape for v in entries.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ValueError("all vectors must be 1-D and share one dimension")
        dim = next(iter(dims))[0]
        for tok, vec in entries.items():
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"non-finite component in vector for {tok!r}")
        return cls(dimension=int(dim), entries=entries)


def load_store(path: str | Path) -> EmbeddingStore:
    """Load a word2vec-format text file.

    Duplicate tokens keep the last occurrence and record a warning on the
    store. Any dimension mismatch or non-numeric/non-finite component is a
    load error naming the offending line.
    """
    path = Path(path)
    warnings: list[str] = []
    entries: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError("header must be '<count> <dimension>'", line_no=1)
        try:
            declared_count, dimension = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError("header must contain two integers", line_no=1) from None
        if dimension <= 0:
            raise EmbeddingFormatError("dimension must be positive", line_no=1)

        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split()
            token, comps = fields[0], fields[1:]
            if len(comps) != dimension:
                raise EmbeddingFormatError(
                    f"token {token!r} has {len(comps)} components, expected {dimension}",
                    line_no=line_no,
                )
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(
                    f"non-numeric component for token {token!r}", line_no=line_no
                ) from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(
                    f"non-finite component for token {token!r}", line_no=line_no
                )
            if token in entries:
                warnings.append(f"duplicate token {token!r} at line {line_no}; last occurrence wins")
            entries[token] = vec

    if len(entries) != declared_count:
        warnings.append(f"header declared {declared_count} entries, file yielded {len(entries)}")
    for msg in warnings:
        logger.warning("%s: %s", path, msg)
    return EmbeddingStore(dimension=dimension, entries=entries, load_warnings=warnings)


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write the store back to the text format; floats use shortest round-trip repr."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store.entries)} {store.dimension}\n")
        for token, vec in store.entries.items():
            comps = " ".join(repr(float(c)) for c in vec)
            fh.write(f"{token} {comps}\n")


def cosine(u, v) -> float:
    """Cosine similarity (u.v)/(|u||v|), clamped to [-1, 1] to absorb rounding.

    Raises ValueError on dimension mismatch or a zero-norm input, where the
    similarity is undefined.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero-norm vectors")
    value = float(np.dot(u, v)) / (nu * nv)
    return max(-1.0, min(1.0, value))
