"""LLM-assisted persona feature extraction over a post sample.

A six-section CO-STAR prompt (Context, Objective, Style, Tone, Audience,
Response) carries a delimited post payload to a chat-completion endpoint or
a deterministic mock. Responses must parse against a strict JSON taxonomy
schema; anything else is a SchemaError that preserves the raw text for
audit. Drafts are immutable: refinement rounds create new drafts linked to
their parent.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import yaml

from .classifier import PersonaCategory, validate_categories
from .corpus import PostCollection
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

COSTAR_SECTIONS = ("context", "objective", "style", "tone", "audience", "response_format")
SECTION_HEADINGS = ("Context", "Objective", "Style", "Tone", "Audience", "Response")

_POST_MARKER = "-----POST {i}-----"
_POST_END_MARKER = "-----END POST {i}-----"
_MARKER_RE = re.compile(r"^-----POST (\d+)-----$")


class SchemaError(Exception):
    """The client returned text that does not satisfy the taxonomy schema."""

    def __init__(self, reason: str, raw: str):
        super().__init__(reason)
        self.reason = reason
        self.raw = raw


class LlmTransportError(Exception):
    """The client could not complete the request (network, timeout, HTTP error)."""


class Provenance(str, Enum):
    LLM_GENERATED = "llm_generated"
    EXPERT_REVISED = "expert_revised"


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = "PERSONAKIT_LLM_API_KEY"
    timeout: float = 30.0
    mock_mode: bool = False
    retries: int = 2
    batch_size: int | None = None
    mock_fixtures_dir: str | None = None
    mock_default_path: str | None = None


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str:  # pragma: no cover - protocol
        ...


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class MockLlmClient:
    """Deterministic offline client.

    Responses come from fixture files named <prompt-digest>.txt in
    fixtures_dir, falling back to a canned default response. No network,
    no randomness.
    """

    def __init__(self, fixtures_dir: str | Path | None = None, default_response: str | None = None):
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.default_response = default_response

    def complete(self, prompt: str) -> str:
        digest = prompt_digest(prompt)
        if self.fixtures_dir is not None:
            fixture = self.fixtures_dir / f"{digest}.txt"
            if fixture.exists():
                return fixture.read_text(encoding="utf-8")
        if self.default_response is not None:
            return self.default_response
        raise LlmTransportError(f"no mock fixture for prompt digest {digest}")


class HttpLlmClient:
    """Generic chat-completion HTTP client (endpoint + model + bearer key)."""

    def __init__(self, config: LlmClientConfig):
        if not config.endpoint:
            raise ConfigurationError("LLM endpoint is required outside mock mode")
        self.config = config

    def complete(self, prompt: str) -> str:
        import httpx

        headers = {}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = httpx.post(
                self.config.endpoint, json=payload, headers=headers, timeout=self.config.timeout
            )
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise LlmTransportError(str(exc)) from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise LlmTransportError(f"malformed completion envelope: {exc}") from exc


def make_client(config: LlmClientConfig) -> LlmClient:
    if config.mock_mode:
        default = None
        if config.mock_default_path:
            default = Path(config.mock_default_path).read_text(encoding="utf-8")
        return MockLlmClient(fixtures_dir=config.mock_fixtures_dir, default_response=default)
    return HttpLlmClient(config)


@dataclass(frozen=True)
class CostarTemplate:
    context: str
    objective: str
    style: str
    tone: str
    audience: str
    response_format: str

    def __post_init__(self) -> None:
        for name in COSTAR_SECTIONS:
            if not getattr(self, name).strip():
                raise ConfigurationError(f"CO-STAR template section {name!r} is missing or empty")

    @classmethod
    def from_file(cls, path: str | Path) -> "CostarTemplate":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ConfigurationError(f"CO-STAR template {path} must be a mapping")
        missing = [name for name in COSTAR_SECTIONS if not str(data.get(name, "")).strip()]
        if missing:
            raise ConfigurationError(f"CO-STAR template {path} missing sections: {missing}")
        return cls(**{name: str(data[name]) for name in COSTAR_SECTIONS})


@dataclass(frozen=True)
class CostarPrompt:
    template: CostarTemplate
    payload: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.payload:
            raise ValueError("prompt payload must be non-empty")

    def render(self) -> str:
        return render_prompt(self.template, self.payload)


def render_prompt(template: CostarTemplate, payload: Sequence[str]) -> str:
    """Render the six labeled sections in order, then the delimited posts.

    Each post is emitted as a single JSON-encoded line between full-line
    markers, so payload text containing the marker string round-trips
    losslessly.
    """
    parts = []
    for heading, name in zip(SECTION_HEADINGS, COSTAR_SECTIONS):
        parts.append(f"# {heading}\n{getattr(template, name).strip()}\n")
    parts.append(f"# Posts ({len(payload)})")
    for i, text in enumerate(payload, start=1):
        parts.append(_POST_MARKER.format(i=i))
        parts.append(json.dumps(text, ensure_ascii=False))
        parts.append(_POST_END_MARKER.format(i=i))
    return "\n".join(parts) + "\n"


def parse_prompt_payload(prompt_text: str) -> list[str]:
    """Recover the post payload from a rendered prompt (inverse of render_prompt)."""
    lines = prompt_text.splitlines()
    posts: list[str] = []
    i = 0
    while i < len(lines):
        match = _MARKER_RE.match(lines[i])
        if match:
            index = match.group(1)
            if i + 2 >= len(lines) or lines[i + 2] != _POST_END_MARKER.format(i=index):
                raise ValueError(f"malformed payload block for post {index}")
            posts.append(json.loads(lines[i + 1]))
            i += 3
        else:
            i += 1
    return posts


def sample_posts(d21: PostCollection, n: int = 300, seed: int = 0) -> PostCollection:
    """Uniform sample without replacement, deterministic for a fixed seed and
    independent of input order. Refuses to silently truncate."""
    if n > len(d21):
        raise ValueError(f"sample size {n} exceeds collection size {len(d21)}")
    ordered = sorted(d21.posts, key=lambda p: p.post_id)
    rng = random.Random(seed)
    chosen = rng.sample(range(len(ordered)), n)
    return PostCollection.from_posts(ordered[i] for i in sorted(chosen))


def build_prompt(sample: PostCollection, template: CostarTemplate) -> CostarPrompt:
    if len(sample) == 0:
        raise ValueError("cannot build a prompt from an empty sample")
    return CostarPrompt(template=template, payload=tuple(p.text for p in sample))


@dataclass(frozen=True)
class TaxonomyDraft:
    draft_id: str
    round: int
    categories: tuple[PersonaCategory, ...]
    rationale: str
    provenance: Provenance
    parent_draft_id: str | None = None
    merge_conflicts: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "draft_id": self.draft_id,
            "round": self.round,
            "categories": [c.to_dict() for c in self.categories],
            "rationale": self.rationale,
            "provenance": self.provenance.value,
            "parent_draft_id": self.parent_draft_id,
            "merge_conflicts": list(self.merge_conflicts),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "TaxonomyDraft":
        return cls(
            draft_id=data["draft_id"],
            round=int(data["round"]),
            categories=tuple(PersonaCategory.from_dict(c) for c in data["categories"]),
            rationale=data.get("rationale", ""),
            provenance=Provenance(data["provenance"]),
            parent_draft_id=data.get("parent_draft_id"),
            merge_conflicts=tuple(data.get("merge_conflicts", ())),
        )


def _draft_id(content: dict) -> str:
    canonical = json.dumps(content, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _make_draft(
    categories: Sequence[PersonaCategory],
    rationale: str,
    round: int,
    parent_draft_id: str | None,
    provenance: Provenance = Provenance.LLM_GENERATED,
    merge_conflicts: Sequence[str] = (),
) -> TaxonomyDraft:
    content = {
        "categories": [c.to_dict() for c in categories],
        "rationale": rationale,
        "round": round,
        "parent_draft_id": parent_draft_id,
        "provenance": provenance.value,
        "merge_conflicts": list(merge_conflicts),
    }
    return TaxonomyDraft(
        draft_id=_draft_id(content),
        round=round,
        categories=tuple(categories),
        rationale=rationale,
        provenance=provenance,
        parent_draft_id=parent_draft_id,
        merge_conflicts=tuple(merge_conflicts),
    )


_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\n(.*)\n```$", re.DOTALL)


def parse_taxonomy_response(text: str) -> tuple[tuple[PersonaCategory, ...], str]:
    """Strictly parse a taxonomy document: a JSON object with a 'categories'
    list (name, description, features as token -> weight-or-null) and a
    'rationale'. Every category must satisfy the persona invariants and the
    taxonomy needs at least two uniquely named categories."""
    stripped = text.strip()
    fence = _FENCE_RE.match(stripped)
    if fence:
        stripped = fence.group(1).strip()
    try:
        data = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"response is not valid JSON: {exc}", raw=text) from None
    if not isinstance(data, dict) or not isinstance(data.get("categories"), list):
        raise SchemaError("response must be an object with a 'categories' list", raw=text)
    try:
        categories = tuple(PersonaCategory.from_dict(entry) for entry in data["categories"])
        validate_categories(categories)
    except (ValueError, TypeError, AttributeError) as exc:
        raise SchemaError(f"invalid category entry: {exc}", raw=text) from None
    if len(categories) < 2:
        raise SchemaError("taxonomy must contain at least two categories", raw=text)
    names = [c.name for c in categories]
    if len(set(names)) != len(names):
        raise SchemaError("category names must be unique", raw=text)
    rationale = data.get("rationale", "")
    if not isinstance(rationale, str):
        raise SchemaError("'rationale' must be a string", raw=text)
    return categories, rationale


def _complete_with_retries(client: LlmClient, prompt_text: str, retries: int) -> str:
    attempts = max(0, retries) + 1
    last_error: LlmTransportError | None = None
    for attempt in range(attempts):
        try:
            return client.complete(prompt_text)
        except LlmTransportError as exc:
            last_error = exc
            logger.warning("LLM transport failure (attempt %d/%d): %s", attempt + 1, attempts, exc)
    raise last_error  # type: ignore[misc]


def _merge_taxonomies(
    parts: Sequence[tuple[tuple[PersonaCategory, ...], str]],
) -> tuple[tuple[PersonaCategory, ...], str, tuple[str, ...]]:
    """Merge per-batch taxonomies by category name; conflicting feature
    weights keep the first value and are reported."""
    merged: dict[str, PersonaCategory] = {}
    conflicts: list[str] = []
    rationales: list[str] = []
    from .classifier import FeatureWeight

    for categories, rationale in parts:
        if rationale:
            rationales.append(rationale)
        for category in categories:
            if category.name not in merged:
                merged[category.name] = category
                continue
            base = merged[category.name]
            features = {f.token: f.weight for f in base.features}
            for f in category.features:
                if f.token in features and features[f.token] != f.weight:
                    conflicts.append(
                        f"{category.name}: feature {f.token!r} weight "
                        f"{features[f.token]} vs {f.weight}; kept first"
                    )
                features.setdefault(f.token, f.weight)
            merged[category.name] = PersonaCategory(
                category_id=base.category_id,
                name=base.name,
                description=base.description or category.description,
                demographic_note=base.demographic_note or category.demographic_note,
                expected_share=base.expected_share,
                features=tuple(FeatureWeight(t, w) for t, w in features.items()),
            )
    return tuple(merged.values()), "\n".join(rationales), tuple(conflicts)


def extract_features(
    client: LlmClient, prompt: CostarPrompt, config: LlmClientConfig | None = None
) -> TaxonomyDraft:
    """Run the extraction prompt (batched when configured) and parse the
    response(s) into a round-0 draft."""
    config = config or LlmClientConfig(mock_mode=True)
    batch_size = config.batch_size
    if batch_size and len(prompt.payload) > batch_size:
        batches = [
            prompt.payload[i : i + batch_size]
            for i in range(0, len(prompt.payload), batch_size)
        ]
    else:
        batches = [prompt.payload]

    parts = []
    for batch in batches:
        text = render_prompt(prompt.template, batch)
        response = _complete_with_retries(client, text, config.retries)
        parts.append(parse_taxonomy_response(response))
    categories, rationale, conflicts = _merge_taxonomies(parts)
    if len(categories) < 2:
        raise SchemaError("merged taxonomy has fewer than two categories", raw=rationale)
    return _make_draft(categories, rationale, round=0, parent_draft_id=None, merge_conflicts=conflicts)


REFINE_INSTRUCTION = (
    "Revise the persona taxonomy below in response to the reviewer challenge. "
    "Reply with the full revised taxonomy in the same JSON schema."
)


def refine(
    client: LlmClient,
    draft: TaxonomyDraft,
    challenge: str,
    config: LlmClientConfig | None = None,
) -> TaxonomyDraft:
    """Produce the next-round draft for an expert challenge; the parent draft
    is never mutated."""
    if not challenge.strip():
        raise ValueError("refinement requires a non-empty challenge")
    config = config or LlmClientConfig(mock_mode=True)
    taxonomy_json = json.dumps(
        {"categories": [c.to_dict() for c in draft.categories], "rationale": draft.rationale},
        indent=2,
        sort_keys=True,
        ensure_ascii=False,
    )
    prompt_text = f"{REFINE_INSTRUCTION}\n\n# Challenge\n{challenge.strip()}\n\n# Taxonomy\n{taxonomy_json}\n"
    response = _complete_with_retries(client, prompt_text, config.retries)
    categories, rationale = parse_taxonomy_response(response)
    return _make_draft(categories, rationale, round=draft.round + 1, parent_draft_id=draft.draft_id)
