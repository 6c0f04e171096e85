"""Weighted cosine scoring of token sequences against persona categories.

Per post, each category feature gets a similarity (max over post tokens, or
cosine against the mean post vector, selectable), the category score is the
weight-normalized mean of feature similarities, and the post is assigned to
the argmax category when that score clears the threshold. Posts below the
threshold are queued for taxonomy refinement instead of being forced into a
category.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from .corpus import Post, PostCollection
from .embedding import EmbeddingStore
from .textproc import TokenSequence

UNCLASSIFIED = "unclassified"


class Strategy(str, Enum):
    MAX_TOKEN = "max_token"
    MEAN_POST_VECTOR = "mean_post_vector"


class DegeneratePost(Exception):
    """The post has no usable in-vocabulary tokens, so no similarity exists."""


class CategoryConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureWeight:
    token: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.token:
            raise ValueError("feature token must be non-empty")
        if not math.isfinite(self.weight) or self.weight <= 0:
            raise ValueError(f"feature weight must be finite and > 0, got {self.weight}")


@dataclass(frozen=True)
class PersonaCategory:
    category_id: str
    name: str
    features: tuple[FeatureWeight, ...]
    description: str = ""
    demographic_note: str = ""
    expected_share: float | None = None

    def __post_init__(self) -> None:
        if not self.category_id:
            raise ValueError("category_id must be non-empty")
        if not self.features:
            raise ValueError(f"category {self.category_id!r} needs at least one feature")
        tokens = [f.token for f in self.features]
        if len(set(tokens)) != len(tokens):
            raise ValueError(f"duplicate feature tokens in category {self.category_id!r}")
        if self.expected_share is not None and not 0.0 <= self.expected_share <= 1.0:
            raise ValueError("expected_share must be in [0, 1]")

    def to_dict(self) -> dict:
        record: dict = {
            "id": self.category_id,
            "name": self.name,
            "description": self.description,
            "demographic_note": self.demographic_note,
            "features": {f.token: f.weight for f in self.features},
        }
        if self.expected_share is not None:
            record["expected_share"] = self.expected_share
        return record

    @classmethod
    def from_dict(cls, data: dict) -> "PersonaCategory":
        features = data.get("features")
        if isinstance(features, dict):
            parsed = tuple(
                FeatureWeight(token=str(tok), weight=1.0 if w is None else float(w))
                for tok, w in features.items()
            )
        else:
            raise ValueError("'features' must be a token -> weight mapping")
        return cls(
            category_id=str(data.get("id") or data.get("category_id") or ""),
            name=str(data.get("name", "")),
            description=str(data.get("description", "")),
            demographic_note=str(data.get("demographic_note", "")),
            expected_share=(
                float(data["expected_share"]) if data.get("expected_share") is not None else None
            ),
            features=parsed,
        )


@dataclass(frozen=True)
class ThresholdPolicy:
    threshold: float = 0.35
    max_recycle_rounds: int = 3
    strategy: Strategy = Strategy.MAX_TOKEN

    def __post_init__(self) -> None:
        if not math.isfinite(self.threshold) or self.threshold < 0.0:
            raise ValueError("threshold must be finite and >= 0")
        if self.max_recycle_rounds < 1:
            raise ValueError("max_recycle_rounds must be >= 1")


@dataclass(frozen=True)
class ClassificationResult:
    post_id: str
    scores: dict[str, float]
    assigned: str  # category_id or UNCLASSIFIED
    oov_rate: float
    threshold_used: float

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "scores": dict(self.scores),
            "assigned": self.assigned,
            "oov_rate": self.oov_rate,
            "threshold_used": self.threshold_used,
        }


@dataclass(frozen=True)
class RecycleQueue:
    """Unclassified posts waiting for a taxonomy refinement round."""

    post_ids: tuple[str, ...]
    results: tuple[ClassificationResult, ...]
    round: int
    max_rounds: int

    @property
    def exhausted(self) -> bool:
        return self.round >= self.max_rounds

    def to_dict(self) -> dict:
        return {
            "post_ids": list(self.post_ids),
            "round": self.round,
            "max_rounds": self.max_rounds,
            "exhausted": self.exhausted,
        }


def _usable_vectors(tokens: Sequence[str], store: EmbeddingStore) -> tuple[np.ndarray, float]:
    """Stack in-vocabulary token vectors; zero-norm vectors are as unusable
    as OOV tokens and count against the rate. Raises DegeneratePost when no
    token survives."""
    vectors = []
    for token in tokens:
        vec = store.lookup(token)
        if vec is not None and np.linalg.norm(vec) > 0.0:
            vectors.append(vec)
    if not tokens or not vectors:
        raise DegeneratePost("no in-vocabulary tokens")
    rate = 1.0 - len(vectors) / len(tokens)
    return np.stack(vectors), rate


def post_feature_similarity(
    tokens: TokenSequence,
    feature: FeatureWeight,
    store: EmbeddingStore,
    strategy: Strategy = Strategy.MAX_TOKEN,
) -> float:
    """Similarity of one post to one feature token under the given strategy."""
    fvec = store.lookup(feature.token)
    if fvec is None:
        raise CategoryConfigError(f"feature token {feature.token!r} is out of vocabulary")
    matrix, _ = _usable_vectors(tokens.tokens, store)
    if strategy is Strategy.MAX_TOKEN:
        sims = _cosine_rows(matrix, fvec)
        return float(sims.max())
    mean_vec = matrix.mean(axis=0)
    if np.linalg.norm(mean_vec) == 0.0:
        raise DegeneratePost("mean post vector has zero norm")
    return float(_cosine_rows(mean_vec[np.newaxis, :], fvec)[0])


def _cosine_rows(matrix: np.ndarray, vec: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(vec)
    sims = (matrix @ vec) / norms
    return np.clip(sims, -1.0, 1.0)


def score_category(
    tokens: TokenSequence,
    category: PersonaCategory,
    store: EmbeddingStore,
    strategy: Strategy = Strategy.MAX_TOKEN,
) -> float:
    """Weight-normalized mean of per-feature similarities."""
    sims = np.array(
        [post_feature_similarity(tokens, f, store, strategy) for f in category.features]
    )
    weights = np.array([f.weight for f in category.features])
    return float(np.dot(sims, weights) / weights.sum())


class _CategoryVectors:
    """Per-category feature matrix cached for corpus-scale scoring."""

    def __init__(self, category: PersonaCategory, store: EmbeddingStore):
        missing = [f.token for f in category.features if store.lookup(f.token) is None]
        if missing:
            raise CategoryConfigError(
                f"category {category.category_id!r} has out-of-vocabulary features: {missing}"
            )
        matrix = np.stack([store.lookup(f.token) for f in category.features])
        norms = np.linalg.norm(matrix, axis=1)
        if (norms == 0.0).any():
            zeroed = [f.token for f, n in zip(category.features, norms) if n == 0.0]
            raise CategoryConfigError(
                f"category {category.category_id!r} has zero-norm feature vectors: {zeroed}"
            )
        self.category = category
        self.matrix = matrix
        self.norms = norms
        self.weights = np.array([f.weight for f in category.features])

    def score(self, token_matrix: np.ndarray, strategy: Strategy) -> float:
        if strategy is Strategy.MAX_TOKEN:
            token_norms = np.linalg.norm(token_matrix, axis=1)
            sims = (token_matrix @ self.matrix.T) / np.outer(token_norms, self.norms)
            per_feature = np.clip(sims, -1.0, 1.0).max(axis=0)
        else:
            mean_vec = token_matrix.mean(axis=0)
            mean_norm = np.linalg.norm(mean_vec)
            if mean_norm == 0.0:
                raise DegeneratePost("mean post vector has zero norm")
            per_feature = np.clip((self.matrix @ mean_vec) / (self.norms * mean_norm), -1.0, 1.0)
        return float(np.dot(per_feature, self.weights) / self.weights.sum())


def validate_categories(
    categories: Sequence[PersonaCategory], store: EmbeddingStore | None = None
) -> tuple[PersonaCategory, ...]:
    if not categories:
        raise CategoryConfigError("at least one category is required")
    ids = [c.category_id for c in categories]
    if len(set(ids)) != len(ids):
        raise CategoryConfigError("category ids must be unique")
    if store is not None:
        for category in categories:
            _CategoryVectors(category, store)  # raises on OOV / zero-norm features
    return tuple(categories)


def load_categories(path: str | Path, store: EmbeddingStore | None = None) -> tuple[PersonaCategory, ...]:
    """Load persona categories from a YAML config; when a store is supplied,
    features not present in it are rejected outright."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or not isinstance(data.get("categories"), list):
        raise CategoryConfigError(f"{path}: expected a mapping with a 'categories' list")
    categories = tuple(PersonaCategory.from_dict(entry) for entry in data["categories"])
    return validate_categories(categories, store)


def classify(
    tokens: TokenSequence,
    categories: Sequence[PersonaCategory],
    policy: ThresholdPolicy,
    store: EmbeddingStore,
    post_id: str = "",
    _caches: dict[str, _CategoryVectors] | None = None,
) -> ClassificationResult:
    """Score all categories and assign the argmax when it clears the
    threshold; ties break toward the earliest declared category. Degenerate
    posts come back unclassified with oov_rate 1.0."""
    if not categories:
        raise CategoryConfigError("at least one category is required")
    caches = _caches if _caches is not None else {}
    for category in categories:
        if category.category_id not in caches:
            caches[category.category_id] = _CategoryVectors(category, store)

    try:
        token_matrix, oov_rate = _usable_vectors(tokens.tokens, store)
        scores = {
            c.category_id: caches[c.category_id].score(token_matrix, policy.strategy)
            for c in categories
        }
    except DegeneratePost:
        return ClassificationResult(
            post_id=post_id,
            scores={},
            assigned=UNCLASSIFIED,
            oov_rate=1.0,
            threshold_used=policy.threshold,
        )

    best_id = None
    best_score = -math.inf
    for category in categories:  # declaration order is the tie-break
        score = scores[category.category_id]
        if score > best_score:
            best_id = category.category_id
            best_score = score
    assigned = best_id if best_score >= policy.threshold else UNCLASSIFIED
    return ClassificationResult(
        post_id=post_id,
        scores=scores,
        assigned=assigned,
        oov_rate=oov_rate,
        threshold_used=policy.threshold,
    )


def classify_corpus(
    d21: PostCollection,
    categories: Sequence[PersonaCategory],
    policy: ThresholdPolicy,
    store: EmbeddingStore,
    prepare: Callable[[Post], TokenSequence],
    round: int = 0,
) -> tuple[list[ClassificationResult], RecycleQueue]:
    """Classify every post; unclassified posts land in the recycle queue for
    the refinement loop. Results are ordered by post_id, so any sharding of
    the input merges to the same output."""
    caches: dict[str, _CategoryVectors] = {}
    assigned: list[ClassificationResult] = []
    recycled: list[ClassificationResult] = []
    for post in sorted(d21.posts, key=lambda p: p.post_id):
        result = classify(
            prepare(post), categories, policy, store, post_id=post.post_id, _caches=caches
        )
        if result.assigned == UNCLASSIFIED:
            recycled.append(result)
        else:
            assigned.append(result)
    queue = RecycleQueue(
        post_ids=tuple(r.post_id for r in recycled),
        results=tuple(recycled),
        round=round,
        max_rounds=policy.max_recycle_rounds,
    )
    return assigned, queue
