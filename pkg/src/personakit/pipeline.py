"""Phase orchestration: ingest -> collect -> extract -> validate -> classify
-> evaluate, with artifacts registered on a persisted run record.

Classification is gated on an approved taxonomy; a run can re-execute a
completed phase (producing a new artifact version) but never skips ahead.
"""
from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum

from . import corpus as corpus_ops
from . import extraction, metrics
from .classifier import classify_corpus, load_categories, validate_categories
from .config import PipelineConfig
from .embedding import load_store
from .errors import ConfigurationError, GateError
from .store import PipelineStore
from .textproc import (
    SegmenterDictionary,
    StopwordSet,
    TokenizerMode,
    filter_stopwords,
    tokenize,
)
from .validation import ReviewWorkflow, Stage, ensure_domain_review

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    INGEST = "ingest"
    COLLECT = "collect"
    EXTRACT = "extract"
    VALIDATE = "validate"
    CLASSIFY = "classify"
    EVALUATE = "evaluate"
    DONE = "done"


PHASE_ORDER: tuple[Phase, ...] = (
    Phase.INGEST,
    Phase.COLLECT,
    Phase.EXTRACT,
    Phase.VALIDATE,
    Phase.CLASSIFY,
    Phase.EVALUATE,
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class PipelineRun:
    run_id: str
    phase: str  # next phase to execute, or "done"
    completed: tuple[str, ...]
    config_snapshot: dict
    dataset_refs: dict[str, str]
    created_at: str
    updated_at: str

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "phase": self.phase,
            "completed": list(self.completed),
            "config_snapshot": self.config_snapshot,
            "dataset_refs": dict(self.dataset_refs),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineRun":
        return cls(
            run_id=data["run_id"],
            phase=data["phase"],
            completed=tuple(data.get("completed", ())),
            config_snapshot=data.get("config_snapshot", {}),
            dataset_refs=dict(data.get("dataset_refs", {})),
            created_at=data["created_at"],
            updated_at=data["updated_at"],
        )


class Pipeline:
    def __init__(self, config: PipelineConfig, store: PipelineStore | None = None):
        self.config = config
        self.store = store or PipelineStore(config.store_root)
        self.workflow = ReviewWorkflow(self.store.reviews_dir, quorum=config.quorum)

    # -- run bookkeeping ----------------------------------------------------

    def create_run(self, run_id: str | None = None) -> PipelineRun:
        now = _utc_now()
        run = PipelineRun(
            run_id=run_id or uuid.uuid4().hex[:12],
            phase=Phase.INGEST.value,
            completed=(),
            config_snapshot=self.config.to_dict(),
            dataset_refs={},
            created_at=now,
            updated_at=now,
        )
        with self.store.lock():
            self.store.write_run(run.to_dict())
        return run

    def get_run(self, run_id: str) -> PipelineRun:
        return PipelineRun.from_dict(self.store.read_run(run_id))

    def _store_run(self, run: PipelineRun) -> PipelineRun:
        run = replace(run, updated_at=_utc_now())
        self.store.write_run(run.to_dict())
        return run

    def _mark_complete(self, run: PipelineRun, phase: Phase, refs: dict[str, str]) -> PipelineRun:
        completed = run.completed if phase.value in run.completed else run.completed + (phase.value,)
        dataset_refs = {**run.dataset_refs, **refs}
        next_phase = Phase.DONE.value
        for candidate in PHASE_ORDER:
            if candidate.value not in completed:
                next_phase = candidate.value
                break
        run = replace(run, completed=completed, dataset_refs=dataset_refs, phase=next_phase)
        return self._store_run(run)

    # -- phase execution ------------------------------------------------------

    def run_phase(self, run_id: str, phase: Phase | str) -> PipelineRun:
        phase = Phase(phase)
        if phase is Phase.DONE:
            raise GateError("'done' is a terminal marker, not an executable phase")
        run = self.get_run(run_id)
        if phase.value not in run.completed and run.phase != phase.value:
            raise GateError(
                f"phase {phase.value!r} is not ready for run {run_id}; next phase is {run.phase!r}"
            )
        if phase is Phase.CLASSIFY:
            self._check_taxonomy_gate(run)
        handler = {
            Phase.INGEST: self._ingest,
            Phase.COLLECT: self._collect,
            Phase.EXTRACT: self._extract,
            Phase.VALIDATE: self._validate,
            Phase.CLASSIFY: self._classify,
            Phase.EVALUATE: self._evaluate,
        }[phase]
        with self.store.lock():
            refs = handler(run)
            run = self.get_run(run_id)  # re-read: handler may have touched refs
            return self._mark_complete(run, phase, refs)

    def run_all(self, run_id: str) -> PipelineRun:
        run = self.get_run(run_id)
        while run.phase != Phase.DONE.value:
            run = self.run_phase(run_id, run.phase)
        return run

    # -- gates ---------------------------------------------------------------

    def _check_taxonomy_gate(self, run: PipelineRun) -> None:
        if self.config.classifier.categories_path:
            return  # an explicit category file bypasses the draft workflow
        draft_id = run.dataset_refs.get("taxonomy_draft")
        if not draft_id:
            raise GateError("classify requires an extracted taxonomy draft")
        if not self.workflow.approval_gate(draft_id):
            record_state = "absent"
            try:
                record_state = self.workflow.get_record(draft_id).state.value
            except KeyError:
                pass
            raise GateError(
                f"classify requires an approved taxonomy; draft {draft_id} is {record_state}"
            )

    # -- phase bodies -----------------------------------------------------------

    def _ingest(self, run: PipelineRun) -> dict[str, str]:
        cfg = self.config.corpus
        if not cfg.input_path:
            raise ConfigurationError("corpus.input_path is required for ingest")
        report = corpus_ops.load_posts(cfg.input_path, fmt=cfg.format)
        raw_path = self.store.write_corpus(run.run_id, "raw", report.collection)
        report_path = self.store.write_json_artifact(
            "reports", run.run_id, "ingest", report.to_dict()
        )
        logger.info(
            "ingested %d posts (%d parse errors)", report.parsed_count, len(report.errors)
        )
        return {"raw": str(raw_path), "ingest_report": str(report_path)}

    def _collect(self, run: PipelineRun) -> dict[str, str]:
        cfg = self.config.corpus
        raw = self.store.read_corpus(run.dataset_refs["raw"])
        framework = corpus_ops.KeywordFramework.from_file(cfg.keywords_path)

        d1 = corpus_ops.filter_relevant(raw, framework)
        users = corpus_ops.dedup_users(d1)
        expanded, expansion_report = corpus_ops.expand_user_posts(raw, users, k=cfg.expand_k)
        d21, cleaning_report = corpus_ops.clean(expanded, self.config.cleaning_config())

        from .textproc import read_lexicon

        stats = corpus_ops.corpus_stats(
            d21,
            read_lexicon(cfg.emotion_lexicon_path),
            framework,
            consistency_threshold=cfg.consistency_threshold,
        )

        refs = {
            "d1": str(self.store.write_corpus(run.run_id, "d1", d1)),
            "d1_1": str(
                self.store.write_json_artifact(
                    "corpora",
                    run.run_id,
                    "d1_1-users",
                    sorted(
                        ({"user_id": u.user_id, "post_count": u.post_count} for u in users),
                        key=lambda r: r["user_id"],
                    ),
                )
            ),
            "d2_1": str(self.store.write_corpus(run.run_id, "d2_1", d21)),
            "cleaning_report": str(
                self.store.write_json_artifact(
                    "reports",
                    run.run_id,
                    "cleaning",
                    {**cleaning_report.to_dict(), "expansion": expansion_report.to_dict()},
                )
            ),
            "corpus_stats": str(
                self.store.write_json_artifact("reports", run.run_id, "stats", stats.to_dict())
            ),
        }
        return refs

    def _extract(self, run: PipelineRun) -> dict[str, str]:
        cfg = self.config.extraction
        d21 = self.store.read_corpus(run.dataset_refs["d2_1"])
        n = len(d21) if cfg.sample_n <= 0 else cfg.sample_n
        sample = extraction.sample_posts(d21, n=n, seed=cfg.seed)
        template = extraction.CostarTemplate.from_file(cfg.template_path)
        prompt = extraction.build_prompt(sample, template)
        client_config = self.config.llm_client_config()
        client = extraction.make_client(client_config)
        draft = extraction.extract_features(client, prompt, client_config)
        draft_path = self.store.write_taxonomy(draft)
        sample_path = self.store.write_json_artifact(
            "corpora", run.run_id, "sample-audit", {"seed": cfg.seed, "post_ids": sample.post_ids()}
        )
        return {
            "taxonomy_draft": draft.draft_id,
            "taxonomy_path": str(draft_path),
            "sample_audit": str(sample_path),
        }

    def _validate(self, run: PipelineRun) -> dict[str, str]:
        draft_id = run.dataset_refs.get("taxonomy_draft")
        if not draft_id:
            raise GateError("validate requires an extracted taxonomy draft")
        draft = self.store.read_taxonomy(draft_id)
        try:
            record = self.workflow.get_record(draft_id)
        except KeyError:
            record = None
        if record is None:
            self.workflow.enqueue_review(draft, Stage.STRUCTURAL)
        return {"review_record": draft_id}

    def apply_refinements(self, run_id: str) -> PipelineRun:
        """Consume scheduled expert challenges: each produces a refined draft
        that replaces the run's taxonomy and re-enters structural review."""
        run = self.get_run(run_id)
        draft_id = run.dataset_refs.get("taxonomy_draft")
        if not draft_id:
            raise GateError("no taxonomy draft on this run")
        requests = self.workflow.pop_refinements(draft_id)
        if not requests:
            return run
        client_config = self.config.llm_client_config()
        client = extraction.make_client(client_config)
        draft = self.store.read_taxonomy(draft_id)
        for request in requests:
            draft = extraction.refine(client, draft, request.challenge, client_config)
        with self.store.lock():
            self.store.write_taxonomy(draft)
            self.workflow.enqueue_review(draft, Stage.STRUCTURAL)
            run = replace(
                run,
                dataset_refs={**run.dataset_refs, "taxonomy_draft": draft.draft_id},
            )
            return self._store_run(run)

    def ensure_review_progress(self, run_id: str) -> None:
        """Enqueue the domain stage when structural review has fully passed."""
        run = self.get_run(run_id)
        draft_id = run.dataset_refs.get("taxonomy_draft")
        if draft_id:
            ensure_domain_review(self.workflow, self.store.read_taxonomy(draft_id))

    def _active_categories(self, run: PipelineRun, store_vectors) -> tuple:
        if self.config.classifier.categories_path:
            return load_categories(self.config.classifier.categories_path, store_vectors)
        draft = self.store.read_taxonomy(run.dataset_refs["taxonomy_draft"])
        return validate_categories(draft.categories, store_vectors)

    def _token_preparer(self):
        cfg = self.config.textproc
        mode = TokenizerMode(cfg.mode)
        dictionary = (
            SegmenterDictionary.from_file(cfg.dictionary_path) if cfg.dictionary_path else None
        )
        stopwords = (
            StopwordSet.from_file(cfg.stopwords_path) if cfg.stopwords_path else StopwordSet()
        )

        def prepare(post):
            tokens = tokenize(post.text, mode=mode, dictionary=dictionary, unique=cfg.unique_tokens)
            return filter_stopwords(tokens, stopwords)

        return prepare

    def _classify(self, run: PipelineRun) -> dict[str, str]:
        if not self.config.classifier.embedding_path:
            raise ConfigurationError("classifier.embedding_path is required for classify")
        vectors = load_store(self.config.classifier.embedding_path)
        categories = self._active_categories(run, vectors)
        policy = self.config.threshold_policy()
        d21 = self.store.read_corpus(run.dataset_refs["d2_1"])
        results, queue = classify_corpus(
            d21, categories, policy, vectors, self._token_preparer()
        )
        results_path = self.store.write_json_artifact(
            "reports",
            run.run_id,
            "classification",
            [r.to_dict() for r in results],
        )
        queue_path = self.store.write_json_artifact(
            "reports", run.run_id, "recycle-queue", queue.to_dict()
        )
        summary = {
            "input_posts": len(d21),
            "assigned": len(results),
            "recycled": len(queue.post_ids),
            "threshold": policy.threshold,
            "strategy": policy.strategy.value,
        }
        summary_path = self.store.write_json_artifact(
            "reports", run.run_id, "partition-summary", summary
        )
        return {
            "classification": str(results_path),
            "recycle_queue": str(queue_path),
            "partition_summary": str(summary_path),
        }

    def _evaluate(self, run: PipelineRun) -> dict[str, str]:
        gold_path = self.config.evaluate.gold_path
        if not gold_path:
            raise ConfigurationError("evaluate.gold_path is required for evaluate")
        gold = read_gold_labels(gold_path)
        results = self.store.read_json_artifact(run.dataset_refs["classification"])
        predictions = {r["post_id"]: r["assigned"] for r in results}

        if self.config.classifier.categories_path:
            categories = load_categories(self.config.classifier.categories_path)
        else:
            categories = self.store.read_taxonomy(run.dataset_refs["taxonomy_draft"]).categories
        labels = [c.category_id for c in categories]

        pairs = [
            (gold[pid], predictions[pid])
            for pid in sorted(predictions)
            if pid in gold and predictions[pid] in labels and gold[pid] in labels
        ]
        if not pairs:
            raise GateError("no overlapping gold/predicted labels to evaluate")
        gold_seq = [g for g, _ in pairs]
        pred_seq = [p for _, p in pairs]
        report = metrics.agreement_report(gold_seq, pred_seq, labels)
        matrix = metrics.confusion(gold_seq, pred_seq, labels)
        report_path = self.store.write_json_artifact(
            "reports",
            run.run_id,
            "agreement",
            {
                **report.to_dict(),
                "confusion": matrix.to_dict(),
                "text_table": report.to_text_table(),
            },
        )
        return {"report": str(report_path)}


def read_gold_labels(path: str) -> dict[str, str]:
    import json as _json

    gold: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = _json.loads(line)
            gold[record["post_id"]] = record["label"]
    return gold
