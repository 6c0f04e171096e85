"""Independent brute-force evaluator of the scoring and assignment rules.

Deliberately written in plain Python (no numpy, no imports from the package
under test) so it can serve as a reference for equivalence checks. Vectors
are plain lists of floats keyed by token.
"""
from __future__ import annotations

import math

MAX_TOKEN = "max_token"
MEAN_POST_VECTOR = "mean_post_vector"
UNCLASSIFIED = "unclassified"


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def norm(u):
    return math.sqrt(sum(a * a for a in u))


def cosine(u, v):
    value = dot(u, v) / (norm(u) * norm(v))
    return max(-1.0, min(1.0, value))


def usable_tokens(tokens, vectors):
    out = []
    for token in tokens:
        vec = vectors.get(token)
        if vec is not None and norm(vec) > 0.0:
            out.append(vec)
    return out


def feature_similarity(token_vecs, feature_vec, strategy, sim_cache=None):
    if strategy == MAX_TOKEN:
        best = None
        for vec in token_vecs:
            key = (id(vec), id(feature_vec))
            if sim_cache is not None and key in sim_cache:
                sim = sim_cache[key]
            else:
                sim = cosine(vec, feature_vec)
                if sim_cache is not None:
                    sim_cache[key] = sim
            if best is None or sim > best:
                best = sim
        return best
    mean = [sum(col) / len(token_vecs) for col in zip(*token_vecs)]
    if norm(mean) == 0.0:
        return None
    return cosine(mean, feature_vec)


def score_category(token_vecs, features, vectors, strategy, sim_cache=None):
    """features: list of (token, weight). Returns None for degenerate posts."""
    total = 0.0
    weight_sum = 0.0
    for token, weight in features:
        sim = feature_similarity(token_vecs, vectors[token], strategy, sim_cache)
        if sim is None:
            return None
        total += sim * weight
        weight_sum += weight
    return total / weight_sum


def classify_post(tokens, categories, vectors, threshold, strategy, sim_cache=None):
    """categories: list of (category_id, [(token, weight), ...]) in
    declaration order. Returns (scores dict, assigned)."""
    token_vecs = usable_tokens(tokens, vectors)
    if not token_vecs:
        return {}, UNCLASSIFIED
    scores = {}
    best_id = None
    best_score = None
    for category_id, features in categories:
        score = score_category(token_vecs, features, vectors, strategy, sim_cache)
        if score is None:
            return {}, UNCLASSIFIED
        scores[category_id] = score
        if best_score is None or score > best_score:
            best_id = category_id
            best_score = score
    assigned = best_id if best_score >= threshold else UNCLASSIFIED
    return scores, assigned
