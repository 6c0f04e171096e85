"""Seeded synthetic corpora and embeddings for benchmarks and pipeline drills.

Builds a world of persona categories with disjoint vocabularies, posts that
draw mostly from their own category's vocabulary, random unit-vector
embeddings, and the gold labels implied by construction. Everything is
deterministic in the seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classifier import FeatureWeight, PersonaCategory
from .corpus import KeywordFramework, MatchMode, Post, PostCollection
from .embedding import EmbeddingStore

FILTER_SITUATION_KEYWORD = "lampnook"
FILTER_BEHAVIOR_KEYWORD = "dimglow"
EMOTION_TERM = "cozy"


@dataclass(frozen=True)
class SyntheticWorld:
    posts: PostCollection
    categories: tuple[PersonaCategory, ...]
    store: EmbeddingStore
    gold: dict[str, str]  # post_id -> category_id
    framework: KeywordFramework
    emotion_lexicon: tuple[str, ...]

    def gold_jsonl(self) -> str:
        lines = [
            json.dumps({"post_id": pid, "label": label}, ensure_ascii=False)
            for pid, label in sorted(self.gold.items())
        ]
        return "\n".join(lines) + "\n"

    def taxonomy_response(self) -> str:
        """A canned LLM response describing this world's categories."""
        payload = {
            "categories": [c.to_dict() for c in self.categories],
            "rationale": "categories recovered from recurring vocabulary clusters in the sample",
        }
        return json.dumps(payload, indent=2, ensure_ascii=False)


def unit_vector_store(tokens: list[str], dim: int = 64, seed: int = 0) -> EmbeddingStore:
    rng = np.random.default_rng(seed)
    entries = {}
    for token in tokens:
        vec = rng.standard_normal(dim)
        entries[token] = vec / np.linalg.norm(vec)
    return EmbeddingStore(dimension=dim, entries=entries)


def make_world(
    n_categories: int = 5,
    vocab_size: int = 20,
    n_posts: int = 1000,
    tokens_per_post: int = 15,
    own_token_ratio: float = 0.8,
    dim: int = 64,
    seed: int = 7,
    n_users: int | None = None,
    with_filter_keywords: bool = False,
) -> SyntheticWorld:
    rng = np.random.default_rng(seed)
    vocab = {
        c: [f"cat{c}_word{w:02d}" for w in range(vocab_size)] for c in range(n_categories)
    }
    all_tokens = [tok for words in vocab.values() for tok in words]
    store = unit_vector_store(all_tokens, dim=dim, seed=seed + 1)

    categories = tuple(
        PersonaCategory(
            category_id=f"cat{c}",
            name=f"Synthetic Persona {c}",
            description=f"users whose posts cluster around vocabulary group {c}",
            features=tuple(FeatureWeight(token=tok, weight=1.0) for tok in vocab[c]),
        )
        for c in range(n_categories)
    )

    user_count = n_users if n_users is not None else max(1, n_posts // 20)
    posts = []
    gold = {}
    for i in range(n_posts):
        own = int(rng.integers(0, n_categories))
        tokens = []
        for _ in range(tokens_per_post):
            if rng.random() < own_token_ratio:
                source = own
            else:
                others = [c for c in range(n_categories) if c != own]
                source = others[int(rng.integers(0, len(others)))]
            tokens.append(vocab[source][int(rng.integers(0, vocab_size))])
        text = " ".join(tokens)
        if with_filter_keywords:
            text = f"{text} {FILTER_SITUATION_KEYWORD} {FILTER_BEHAVIOR_KEYWORD}"
            if rng.random() < 0.4:
                text = f"{text} {EMOTION_TERM}"
        post_id = f"post{i:06d}"
        posts.append(
            Post(
                post_id=post_id,
                user_id=f"user{i % user_count:05d}",
                text=text,
                timestamp=1_600_000_000 + i * 3600,
                likes=int(rng.integers(0, 50)),
                comments=int(rng.integers(0, 10)),
            )
        )
        gold[post_id] = f"cat{own}"

    framework = KeywordFramework(
        situation_keywords=(FILTER_SITUATION_KEYWORD,),
        behavior_keywords=(FILTER_BEHAVIOR_KEYWORD,),
        match_mode=MatchMode.UNION,
    )
    return SyntheticWorld(
        posts=PostCollection.from_posts(posts),
        categories=categories,
        store=store,
        gold=gold,
        framework=framework,
        emotion_lexicon=(EMOTION_TERM,),
    )
