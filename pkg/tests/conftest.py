from __future__ import annotations

import numpy as np
import pytest

from personakit.corpus import Post, PostCollection
from personakit.embedding import EmbeddingStore


def make_post(post_id: str, user_id: str = "u1", text: str = "hello world",
              timestamp: int = 1_600_000_000, **kwargs) -> Post:
    return Post(post_id=post_id, user_id=user_id, text=text, timestamp=timestamp, **kwargs)


@pytest.fixture
def tiny_store() -> EmbeddingStore:
    return EmbeddingStore.from_dict(
        {
            "lamp": [1.0, 0.0, 0.0],
            "light": [0.9, 0.1, 0.0],
            "book": [0.0, 1.0, 0.0],
            "novel": [0.1, 0.9, 0.0],
            "coffee": [0.0, 0.0, 1.0],
        }
    )


@pytest.fixture
def collection_factory():
    def make(specs) -> PostCollection:
        return PostCollection.from_posts(make_post(**spec) for spec in specs)

    return make


def unit(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    return arr / np.linalg.norm(arr)
