"""Post ingestion, two-tier collection, cleaning, and corpus-quality statistics.

The collection pipeline is: load raw exports, keep keyword-relevant posts
(D1), deduplicate authors (D1-1), pull each author's recent posts back out
of the store (raw D2), then clean into the lifestyle corpus (D2-1). All
operations are pure over immutable collections.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import yaml

from .textproc import normalize_text, read_lexicon

SECONDS_PER_DAY = 86_400.0


class DatasetLabel(str, Enum):
    D1 = "D1"
    D1_1 = "D1_1"
    D2_1 = "D2_1"


class MatchMode(str, Enum):
    UNION = "union"
    PAIRWISE = "pairwise"


@dataclass(frozen=True)
class Post:
    post_id: str
    user_id: str
    text: str
    timestamp: int
    likes: int | None = None
    comments: int | None = None
    profile_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.post_id:
            raise ValueError("post_id must be non-empty")
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        for name in ("likes", "comments"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0 when present")

    def to_dict(self) -> dict:
        record: dict = {
            "post_id": self.post_id,
            "user_id": self.user_id,
            "text": self.text,
            "timestamp": self.timestamp,
        }
        if self.likes is not None:
            record["likes"] = self.likes
        if self.comments is not None:
            record["comments"] = self.comments
        if self.profile_tags:
            record["profile_tags"] = list(self.profile_tags)
        return record


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    post_count: int = 0
    is_commercial: bool = False


@dataclass(frozen=True)
class PostCollection:
    posts: tuple[Post, ...]
    label: DatasetLabel | None = None

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self) -> Iterator[Post]:
        return iter(self.posts)

    def post_ids(self) -> list[str]:
        return [p.post_id for p in self.posts]

    def by_user(self) -> dict[str, list[Post]]:
        groups: dict[str, list[Post]] = {}
        for post in self.posts:
            groups.setdefault(post.user_id, []).append(post)
        return groups

    @classmethod
    def from_posts(cls, posts: Iterable[Post], label: DatasetLabel | None = None) -> "PostCollection":
        return cls(tuple(posts), label=label)


@dataclass(frozen=True)
class KeywordFramework:
    """Situation and behavior keyword lists driving relevance filtering.

    Union mode keeps a post containing any keyword from either list;
    pairwise mode demands at least one hit from each list.
    """

    situation_keywords: tuple[str, ...]
    behavior_keywords: tuple[str, ...]
    match_mode: MatchMode = MatchMode.UNION

    def __post_init__(self) -> None:
        for name, words in (
            ("situation_keywords", self.situation_keywords),
            ("behavior_keywords", self.behavior_keywords),
        ):
            if not words:
                raise ValueError(f"{name} must be non-empty")
            normalized = [normalize_text(w) for w in words]
            if len(set(normalized)) != len(normalized):
                raise ValueError(f"duplicate keywords in {name}")

    @classmethod
    def from_file(cls, path: str | Path) -> "KeywordFramework":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"keyword framework file {path} must be a mapping")
        return cls(
            situation_keywords=tuple(data.get("situation_keywords", ())),
            behavior_keywords=tuple(data.get("behavior_keywords", ())),
            match_mode=MatchMode(data.get("match_mode", "union")),
        )


@dataclass(frozen=True)
class CorpusStats:
    avg_post_length: float
    emotional_descriptor_ratio: float
    behavioral_consistency: float
    post_count: int
    user_count: int

    def to_dict(self) -> dict:
        return {
            "avg_post_length": self.avg_post_length,
            "emotional_descriptor_ratio": self.emotional_descriptor_ratio,
            "behavioral_consistency": self.behavioral_consistency,
            "post_count": self.post_count,
            "user_count": self.user_count,
        }


@dataclass(frozen=True)
class CleaningConfig:
    """Knobs for the D2-1 cleaning pass.

    A user is flagged commercial when their posting rate over the observed
    window exceeds max_posts_per_day AND the promotional-term density of
    their text exceeds promo_density_threshold. Density is promotional
    term occurrences divided by whitespace token count.
    """

    promo_lexicon: frozenset[str] = frozenset()
    max_posts_per_day: float = 10.0
    promo_density_threshold: float = 0.15

    @classmethod
    def with_lexicon_file(cls, path: str | Path, **kwargs) -> "CleaningConfig":
        return cls(promo_lexicon=frozenset(read_lexicon(path)), **kwargs)


@dataclass
class ParseError:
    line_no: int
    reason: str

    def to_dict(self) -> dict:
        return {"line_no": self.line_no, "reason": self.reason}


@dataclass
class LoadReport:
    collection: PostCollection
    errors: list[ParseError] = field(default_factory=list)

    @property
    def parsed_count(self) -> int:
        return len(self.collection)

    def to_dict(self) -> dict:
        return {
            "parsed_count": self.parsed_count,
            "error_count": len(self.errors),
            "errors": [e.to_dict() for e in self.errors],
        }


@dataclass
class ExpansionReport:
    missing_users: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"missing_users": list(self.missing_users)}


CLEANING_RULES = ("duplicate_post_id", "duplicate_text", "empty_or_missing", "commercial_user")


@dataclass
class CleaningReport:
    input_count: int
    output_count: int
    removed: dict[str, int]
    imputed_likes: int
    imputed_comments: int
    flagged_users: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "output_count": self.output_count,
            "removed": dict(self.removed),
            "imputed_likes": self.imputed_likes,
            "imputed_comments": self.imputed_comments,
            "flagged_users": list(self.flagged_users),
        }


def _parse_record(record: dict) -> Post:
    def _require_str(key: str) -> str:
        value = record.get(key)
        if not isinstance(value, str) or value == "":
            raise ValueError(f"missing or empty field {key!r}")
        return value

    post_id = _require_str("post_id")
    user_id = _require_str("user_id")
    text = record.get("text")
    if not isinstance(text, str):
        raise ValueError("missing field 'text'")
    timestamp = record.get("timestamp")
    if not isinstance(timestamp, int) or isinstance(timestamp, bool):
        raise ValueError("missing or non-integer field 'timestamp'")

    def _optional_int(key: str) -> int | None:
        value = record.get(key)
        if value is None:
            return None
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"field {key!r} must be an integer")
        return value

    tags = record.get("profile_tags", [])
    if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
        raise ValueError("field 'profile_tags' must be a string array")
    return Post(
        post_id=post_id,
        user_id=user_id,
        text=text,
        timestamp=timestamp,
        likes=_optional_int("likes"),
        comments=_optional_int("comments"),
        profile_tags=tuple(tags),
    )


def load_posts(path: str | Path, fmt: str = "jsonl") -> LoadReport:
    """Parse a UTF-8 line-delimited post export.

    Every well-formed line becomes one Post; malformed lines are counted in
    the report rather than silently dropped.
    """
    if fmt != "jsonl":
        raise ValueError(f"unsupported corpus format: {fmt!r}")
    posts: list[Post] = []
    errors: list[ParseError] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record must be a JSON object")
                posts.append(_parse_record(record))
            except (ValueError, TypeError) as exc:
                errors.append(ParseError(line_no=line_no, reason=str(exc)))
    return LoadReport(collection=PostCollection.from_posts(posts), errors=errors)


def write_posts(collection: PostCollection, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post in collection:
            fh.write(json.dumps(post.to_dict(), ensure_ascii=False) + "\n")


def _contains_any(normalized_text: str, normalized_terms: tuple[str, ...]) -> bool:
    return any(term in normalized_text for term in normalized_terms)


def filter_relevant(posts: PostCollection, framework: KeywordFramework) -> PostCollection:
    """Keep posts matching the keyword framework (case-insensitive substring
    matching on normalized text); the result carries the D1 label."""
    situation = tuple(normalize_text(k) for k in framework.situation_keywords)
    behavior = tuple(normalize_text(k) for k in framework.behavior_keywords)
    kept = []
    for post in posts:
        text = normalize_text(post.text)
        s_hit = _contains_any(text, situation)
        b_hit = _contains_any(text, behavior)
        if framework.match_mode is MatchMode.UNION:
            if s_hit or b_hit:
                kept.append(post)
        else:
            if s_hit and b_hit:
                kept.append(post)
    return PostCollection.from_posts(kept, label=DatasetLabel.D1)


def dedup_users(d1: PostCollection) -> frozenset[UserProfile]:
    """One profile per distinct user id (the D1-1 set); order-independent."""
    counts: dict[str, int] = {}
    for post in d1:
        counts[post.user_id] = counts.get(post.user_id, 0) + 1
    return frozenset(UserProfile(user_id=uid, post_count=n) for uid, n in counts.items())


def apply_commercial_flags(
    users: Iterable[UserProfile], flagged: Iterable[str]
) -> frozenset[UserProfile]:
    """Mark the profiles named in a cleaning report's flagged-user list."""
    flagged_set = set(flagged)
    return frozenset(
        replace(u, is_commercial=u.user_id in flagged_set) for u in users
    )


def expand_user_posts(
    store: PostCollection,
    users: Iterable[UserProfile],
    k: int = 20,
) -> tuple[PostCollection, ExpansionReport]:
    """For each user, take their min(k, available) most recent posts from the
    store (timestamp descending, ties broken by ascending post_id)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    by_user = store.by_user()
    selected: list[Post] = []
    missing: list[str] = []
    for profile in sorted(users, key=lambda u: u.user_id):
        user_posts = by_user.get(profile.user_id)
        if not user_posts:
            missing.append(profile.user_id)
            continue
        ranked = sorted(user_posts, key=lambda p: (-p.timestamp, p.post_id))
        selected.extend(ranked[:k])
    return PostCollection.from_posts(selected), ExpansionReport(missing_users=tuple(missing))


def _text_fingerprint(text: str) -> str:
    return hashlib.sha1(normalize_text(text).encode("utf-8")).hexdigest()


def _promo_density(posts: list[Post], promo_terms: tuple[str, ...]) -> float:
    token_count = 0
    hits = 0
    for post in posts:
        text = normalize_text(post.text)
        token_count += len(text.split())
        hits += sum(text.count(term) for term in promo_terms)
    return hits / token_count if token_count else 0.0


def _posts_per_day(posts: list[Post]) -> float:
    timestamps = [p.timestamp for p in posts]
    span_days = (max(timestamps) - min(timestamps)) / SECONDS_PER_DAY
    return len(posts) / max(span_days, 1.0)


def flag_commercial_users(posts: PostCollection, rules: CleaningConfig) -> frozenset[str]:
    """User ids whose posting rate and promotional-term density both exceed
    the configured thresholds."""
    promo_terms = tuple(normalize_text(t) for t in rules.promo_lexicon)
    flagged = set()
    for user_id, user_posts in posts.by_user().items():
        if _posts_per_day(user_posts) <= rules.max_posts_per_day:
            continue
        if not promo_terms:
            continue
        if _promo_density(user_posts, promo_terms) > rules.promo_density_threshold:
            flagged.add(user_id)
    return frozenset(flagged)


def clean(raw: PostCollection, rules: CleaningConfig) -> tuple[PostCollection, CleaningReport]:
    """Apply the D2-1 cleaning rules in order: post_id dedup, exact
    normalized-text dedup, empty/missing-field drop, engagement imputation,
    commercial-account removal. Idempotent; every removal is attributed to
    exactly one rule so counts conserve the input size."""
    removed = {rule: 0 for rule in CLEANING_RULES}

    survivors: list[Post] = []
    seen_ids: set[str] = set()
    for post in raw:
        if post.post_id in seen_ids:
            removed["duplicate_post_id"] += 1
            continue
        seen_ids.add(post.post_id)
        survivors.append(post)

    stage2: list[Post] = []
    seen_texts: set[str] = set()
    for post in survivors:
        fp = _text_fingerprint(post.text)
        if fp in seen_texts:
            removed["duplicate_text"] += 1
            continue
        seen_texts.add(fp)
        stage2.append(post)

    stage3: list[Post] = []
    for post in stage2:
        if normalize_text(post.text) == "":
            removed["empty_or_missing"] += 1
            continue
        stage3.append(post)

    imputed_likes = 0
    imputed_comments = 0
    stage4: list[Post] = []
    for post in stage3:
        updates: dict = {}
        if post.likes is None:
            updates["likes"] = 0
            imputed_likes += 1
        if post.comments is None:
            updates["comments"] = 0
            imputed_comments += 1
        stage4.append(replace(post, **updates) if updates else post)

    flagged = flag_commercial_users(PostCollection.from_posts(stage4), rules)
    final: list[Post] = []
    for post in stage4:
        if post.user_id in flagged:
            removed["commercial_user"] += 1
            continue
        final.append(post)

    report = CleaningReport(
        input_count=len(raw),
        output_count=len(final),
        removed=removed,
        imputed_likes=imputed_likes,
        imputed_comments=imputed_comments,
        flagged_users=tuple(sorted(flagged)),
    )
    return PostCollection.from_posts(final, label=DatasetLabel.D2_1), report


def _framework_hits(posts: list[Post], keywords: tuple[str, ...]) -> set[str]:
    hits: set[str] = set()
    for post in posts:
        text = normalize_text(post.text)
        for kw in keywords:
            if kw in text:
                hits.add(kw)
    return hits


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def corpus_stats(
    collection: PostCollection,
    emotion_lexicon: Iterable[str],
    framework: KeywordFramework,
    consistency_threshold: float = 0.5,
) -> CorpusStats:
    """Corpus quality statistics.

    avg_post_length is the mean raw character count. The emotional ratio is
    the fraction of posts containing at least one lexicon term. Behavioral
    consistency is the fraction of users whose framework-keyword sets,
    compared between the first and second halves of their chronologically
    ordered posts, reach a Jaccard overlap of at least the threshold.
    """
    if len(collection) == 0:
        raise ValueError("corpus statistics are undefined for an empty collection")
    emo_terms = tuple(normalize_text(t) for t in emotion_lexicon)
    if not emo_terms:
        raise ValueError("emotion lexicon must be non-empty")
    keywords = tuple(
        normalize_text(k)
        for k in (*framework.situation_keywords, *framework.behavior_keywords)
    )

    total_chars = sum(len(p.text) for p in collection)
    emotional = sum(1 for p in collection if _contains_any(normalize_text(p.text), emo_terms))

    groups = collection.by_user()
    consistent = 0
    for user_posts in groups.values():
        ordered = sorted(user_posts, key=lambda p: (p.timestamp, p.post_id))
        split = math.ceil(len(ordered) / 2)
        first = _framework_hits(ordered[:split], keywords)
        second = _framework_hits(ordered[split:], keywords)
        if _jaccard(first, second) >= consistency_threshold:
            consistent += 1

    n = len(collection)
    return CorpusStats(
        avg_post_length=total_chars / n,
        emotional_descriptor_ratio=emotional / n,
        behavioral_consistency=consistent / len(groups),
        post_count=n,
        user_count=len(groups),
    )


def length_delta(baseline_avg: float, expanded_avg: float) -> float:
    """Relative growth of mean post length between two corpora (0.5 = +50%)."""
    if baseline_avg <= 0:
        raise ValueError("baseline average length must be positive")
    return expanded_avg / baseline_avg - 1.0
