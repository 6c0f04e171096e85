"""Pipeline configuration: one YAML file, CLI-flag overrides, env fallbacks.

A full snapshot of the effective config is embedded in every run so results
stay auditable. Paths left unset fall back to the data files shipped with
the package (stop words, CO-STAR template, example categories, lexicons).
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .classifier import Strategy, ThresholdPolicy
from .corpus import CleaningConfig, MatchMode
from .errors import ConfigurationError
from .extraction import LlmClientConfig
from .textproc import TokenizerMode

ENV_STORE_ROOT = "PERSONAKIT_STORE_ROOT"
ENV_PORT = "PERSONAKIT_PORT"
ENV_LLM_ENDPOINT = "PERSONAKIT_LLM_ENDPOINT"
ENV_LLM_KEY_VAR = "PERSONAKIT_LLM_API_KEY_ENV"


def default_data_path(name: str) -> str:
    return str(resources.files("personakit").joinpath("data", name))


@dataclass
class CorpusSection:
    input_path: str = ""
    format: str = "jsonl"
    keywords_path: str = field(default_factory=lambda: default_data_path("example_keywords.yaml"))
    expand_k: int = 20
    max_posts_per_day: float = 10.0
    promo_density_threshold: float = 0.15
    promo_lexicon_path: str = field(default_factory=lambda: default_data_path("promo_lexicon.txt"))
    emotion_lexicon_path: str = field(default_factory=lambda: default_data_path("emotion_lexicon.txt"))
    consistency_threshold: float = 0.5


@dataclass
class TextprocSection:
    mode: str = TokenizerMode.WHITESPACE.value
    dictionary_path: str = ""
    stopwords_path: str = field(default_factory=lambda: default_data_path("stopwords_en.txt"))
    unique_tokens: bool = False


@dataclass
class ClassifierSection:
    embedding_path: str = ""
    categories_path: str = ""  # optional: overrides the approved taxonomy
    threshold: float = 0.35
    max_recycle_rounds: int = 3
    strategy: str = Strategy.MAX_TOKEN.value


@dataclass
class ExtractionSection:
    template_path: str = field(default_factory=lambda: default_data_path("costar_template.yaml"))
    sample_n: int = 300
    seed: int = 0
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = "PERSONAKIT_LLM_API_KEY"
    timeout: float = 30.0
    mock_mode: bool = True
    retries: int = 2
    batch_size: int | None = None
    mock_fixtures_dir: str = ""
    mock_default_path: str = field(default_factory=lambda: default_data_path("mock_taxonomy.json"))


@dataclass
class EvaluateSection:
    gold_path: str = ""


@dataclass
class ServiceSection:
    host: str = "127.0.0.1"
    port: int = 8040
    frontend_dist: str = ""


@dataclass
class PipelineConfig:
    store_root: str = "personakit-store"
    quorum: int = 1
    corpus: CorpusSection = field(default_factory=CorpusSection)
    textproc: TextprocSection = field(default_factory=TextprocSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    extraction: ExtractionSection = field(default_factory=ExtractionSection)
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)
    service: ServiceSection = field(default_factory=ServiceSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def cleaning_config(self) -> CleaningConfig:
        lexicon: frozenset[str] = frozenset()
        if self.corpus.promo_lexicon_path:
            from .textproc import read_lexicon

            lexicon = frozenset(read_lexicon(self.corpus.promo_lexicon_path))
        return CleaningConfig(
            promo_lexicon=lexicon,
            max_posts_per_day=self.corpus.max_posts_per_day,
            promo_density_threshold=self.corpus.promo_density_threshold,
        )

    def threshold_policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(
            threshold=self.classifier.threshold,
            max_recycle_rounds=self.classifier.max_recycle_rounds,
            strategy=Strategy(self.classifier.strategy),
        )

    def llm_client_config(self) -> LlmClientConfig:
        ex = self.extraction
        return LlmClientConfig(
            endpoint=ex.endpoint,
            model_name=ex.model_name,
            api_key_env=ex.api_key_env,
            timeout=ex.timeout,
            mock_mode=ex.mock_mode,
            retries=ex.retries,
            batch_size=ex.batch_size,
            mock_fixtures_dir=ex.mock_fixtures_dir or None,
            mock_default_path=ex.mock_default_path or None,
        )

    def match_mode(self) -> MatchMode:
        from .corpus import KeywordFramework

        return KeywordFramework.from_file(self.corpus.keywords_path).match_mode


def _apply_section(section, data: dict) -> None:
    known = {f.name for f in fields(section)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        setattr(section, key, value)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build the effective config: YAML file, then env vars, then explicit
    overrides ({'section.key': value} or {'store_root': value})."""
    config = PipelineConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"config file {path} must be a mapping")
        for key, value in data.items():
            if key in ("store_root", "quorum"):
                setattr(config, key, value)
            elif hasattr(config, key) and isinstance(value, dict):
                _apply_section(getattr(config, key), value)
            else:
                raise ConfigurationError(f"unknown config section: {key!r}")

    if os.environ.get(ENV_STORE_ROOT):
        config.store_root = os.environ[ENV_STORE_ROOT]
    if os.environ.get(ENV_PORT):
        config.service.port = int(os.environ[ENV_PORT])
    if os.environ.get(ENV_LLM_ENDPOINT):
        config.extraction.endpoint = os.environ[ENV_LLM_ENDPOINT]
    if os.environ.get(ENV_LLM_KEY_VAR):
        config.extraction.api_key_env = os.environ[ENV_LLM_KEY_VAR]

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section_name, key = dotted.split(".", 1)
            section = getattr(config, section_name, None)
            if section is None or not hasattr(section, key):
                raise ConfigurationError(f"unknown config override: {dotted!r}")
            setattr(section, key, value)
        else:
            if not hasattr(config, dotted):
                raise ConfigurationError(f"unknown config override: {dotted!r}")
            setattr(config, dotted, value)
    return config
