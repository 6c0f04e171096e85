"""Command-line interface over the pipeline store.

Subcommands: ingest | filter | expand | clean | stats | extract | review
(import/export decisions) | classify | evaluate | serve. Every command reads
and writes the same store as the HTTP service. Errors print one
machine-parsable line ("error: <code>: <message>") and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_ops
from . import metrics
from .config import load_config
from .errors import ConfigurationError, GateError
from .pipeline import Phase, Pipeline, read_gold_labels
from .store import StoreLockedError
from .textproc import read_lexicon
from .validation import ConflictError, DecisionError, TransitionError

KNOWN_ERRORS = (
    ConfigurationError,
    GateError,
    TransitionError,
    ConflictError,
    DecisionError,
    StoreLockedError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def _fail(code: str, message: str) -> int:
    print(f"error: {code}: {message}", file=sys.stderr)
    return 1


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))


def _pipeline(args) -> Pipeline:
    overrides = {}
    if getattr(args, "store", None):
        overrides["store_root"] = args.store
    config = load_config(args.config, overrides=overrides)
    return Pipeline(config)


def _require_run(pipe: Pipeline, args) -> str:
    if getattr(args, "run", None):
        return args.run
    run = pipe.create_run()
    print(f"run: {run.run_id}")
    return run.run_id


def cmd_ingest(args) -> int:
    pipe = _pipeline(args)
    if args.input:
        pipe.config.corpus.input_path = args.input
    run_id = _require_run(pipe, args)
    run = pipe.run_phase(run_id, Phase.INGEST)
    report = pipe.store.read_json_artifact(run.dataset_refs["ingest_report"])
    _emit({"run_id": run.run_id, "phase": run.phase, "ingest": report})
    return 0


def _collect_like(args, command: str) -> int:
    """filter / expand / clean / stats all execute the collect phase; the
    named artifact of interest is printed for the requested step."""
    pipe = _pipeline(args)
    run_id = args.run
    if not run_id:
        raise ConfigurationError(f"{command} requires --run (or --input for stats)")
    run = pipe.get_run(run_id)
    if Phase.COLLECT.value not in run.completed:
        run = pipe.run_phase(run_id, Phase.COLLECT)
    key = {
        "filter": "d1",
        "expand": "d2_1",
        "clean": "cleaning_report",
        "stats": "corpus_stats",
    }[command]
    ref = run.dataset_refs[key]
    if key in ("cleaning_report", "corpus_stats"):
        _emit({"run_id": run_id, "artifact": ref, command: pipe.store.read_json_artifact(ref)})
    else:
        _emit({"run_id": run_id, "artifact": ref, "posts": len(pipe.store.read_corpus(ref))})
    return 0


def cmd_extract(args) -> int:
    pipe = _pipeline(args)
    if args.mock:
        pipe.config.extraction.mock_mode = True
    if args.sample_n is not None:
        pipe.config.extraction.sample_n = args.sample_n
    if args.seed is not None:
        pipe.config.extraction.seed = args.seed
    run_id = args.run
    run = pipe.run_phase(run_id, Phase.EXTRACT)
    draft = pipe.store.read_taxonomy(run.dataset_refs["taxonomy_draft"])
    _emit(
        {
            "run_id": run_id,
            "draft_id": draft.draft_id,
            "round": draft.round,
            "categories": [c.name for c in draft.categories],
            "path": run.dataset_refs["taxonomy_path"],
        }
    )
    return 0


def cmd_review(args) -> int:
    pipe = _pipeline(args)
    run = pipe.get_run(args.run)
    draft_id = run.dataset_refs.get("taxonomy_draft")
    if not draft_id:
        raise GateError("run has no taxonomy draft; run extract first")
    if Phase.VALIDATE.value not in run.completed and run.phase == Phase.VALIDATE.value:
        pipe.run_phase(args.run, Phase.VALIDATE)

    if args.review_command == "export":
        items = pipe.workflow.pending_items(draft_id=draft_id)
        lines = [json.dumps(i.to_dict(), ensure_ascii=False) for i in items]
        out = "\n".join(lines) + ("\n" if lines else "")
        if args.out:
            Path(args.out).write_text(out, encoding="utf-8")
            print(f"exported {len(items)} pending items to {args.out}")
        else:
            sys.stdout.write(out)
        return 0

    if args.review_command == "import":
        applied = 0
        with open(args.decisions, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                pipe.workflow.record_decision(
                    record["item_id"],
                    record["decision"],
                    reviewer_id=record.get("reviewer_id", "cli"),
                    comment=record.get("comment", ""),
                    challenge=record.get("challenge"),
                )
                applied += 1
                pipe.ensure_review_progress(args.run)
        state = pipe.workflow.get_record(draft_id).state.value
        _emit({"run_id": args.run, "applied": applied, "state": state})
        return 0

    if args.review_command == "status":
        record = pipe.workflow.get_record(draft_id)
        _emit({"run_id": args.run, "record": record.to_dict()})
        return 0

    raise ConfigurationError(f"unknown review subcommand: {args.review_command!r}")


def cmd_classify(args) -> int:
    pipe = _pipeline(args)
    if args.threshold is not None:
        pipe.config.classifier.threshold = args.threshold
    if args.strategy:
        pipe.config.classifier.strategy = args.strategy
    run = pipe.run_phase(args.run, Phase.CLASSIFY)
    summary = pipe.store.read_json_artifact(run.dataset_refs["partition_summary"])
    _emit(
        {
            "run_id": args.run,
            "results": run.dataset_refs["classification"],
            "summary": summary,
        }
    )
    return 0


def cmd_evaluate(args) -> int:
    pipe = _pipeline(args)
    if args.gold and args.pred:
        gold_map = read_gold_labels(args.gold)
        with open(args.pred, encoding="utf-8") as fh:
            results = json.load(fh)
        predictions = {r["post_id"]: r["assigned"] for r in results}
        labels = args.labels.split(",") if args.labels else sorted(
            {*gold_map.values()} | {p for p in predictions.values() if p != "unclassified"}
        )
        pairs = [
            (gold_map[pid], predictions[pid])
            for pid in sorted(predictions)
            if pid in gold_map and predictions[pid] in labels and gold_map[pid] in labels
        ]
        if not pairs:
            raise ValueError("no overlapping gold/predicted labels to evaluate")
        report = metrics.agreement_report([g for g, _ in pairs], [p for _, p in pairs], labels)
        print(report.to_text_table())
        _emit(report.to_dict())
        return 0
    if not args.run:
        raise ConfigurationError("evaluate needs --run, or both --gold and --pred")
    if args.gold:
        pipe.config.evaluate.gold_path = args.gold
    run = pipe.run_phase(args.run, Phase.EVALUATE)
    report = pipe.store.read_json_artifact(run.dataset_refs["report"])
    print(report["text_table"])
    _emit({"run_id": args.run, "report": run.dataset_refs["report"], "n": report["n"]})
    return 0


def cmd_stats_file(args) -> int:
    """stats --input mode: compute corpus stats directly from a JSONL file."""
    pipe = _pipeline(args)
    load = corpus_ops.load_posts(args.input)
    framework = corpus_ops.KeywordFramework.from_file(pipe.config.corpus.keywords_path)
    stats = corpus_ops.corpus_stats(
        load.collection,
        read_lexicon(pipe.config.corpus.emotion_lexicon_path),
        framework,
        consistency_threshold=pipe.config.corpus.consistency_threshold,
    )
    _emit(stats.to_dict())
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    pipe = _pipeline(args)
    if args.port is not None:
        pipe.config.service.port = args.port
    serve(pipe.config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="personakit",
        description="Persona pipeline: corpus collection, taxonomy extraction, "
        "review, classification, evaluation.",
    )
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--store", default=None, help="store root (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a post export into a run")
    p.add_argument("--run", default=None, help="existing run id (default: create one)")
    p.add_argument("--input", default=None, help="post export (JSONL)")
    p.set_defaults(func=cmd_ingest)

    for name, help_text in (
        ("filter", "keyword-filter the raw corpus into D1"),
        ("expand", "expand matched users' recent posts into the raw lifestyle set"),
        ("clean", "clean the expanded posts into D2-1"),
        ("stats", "corpus quality statistics"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--run", required=name != "stats", default=None)
        if name == "stats":
            p.add_argument("--input", default=None, help="compute directly from a JSONL file")
        p.set_defaults(func=lambda a, _n=name: _collect_like(a, _n))

    p = sub.add_parser("extract", help="LLM taxonomy extraction over a sample")
    p.add_argument("--run", required=True)
    p.add_argument("--mock", action="store_true", help="use the offline mock client")
    p.add_argument("--sample-n", type=int, default=None, dest="sample_n")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("review", help="export/import review decisions")
    p.add_argument("review_command", choices=("export", "import", "status"))
    p.add_argument("--run", required=True)
    p.add_argument("--out", default=None, help="export: output file (default stdout)")
    p.add_argument("--decisions", default=None, help="import: decisions JSONL")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("classify", help="classify D2-1 against the approved taxonomy")
    p.add_argument("--run", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--strategy", choices=("max_token", "mean_post_vector"), default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="agreement metrics against gold labels")
    p.add_argument("--run", default=None)
    p.add_argument("--gold", default=None, help="gold labels JSONL (post_id, label)")
    p.add_argument("--pred", default=None, help="standalone mode: classification results JSON")
    p.add_argument("--labels", default=None, help="comma-separated fixed label order")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "stats" and getattr(args, "input", None):
        args.func = cmd_stats_file
    if args.command == "review" and args.review_command == "import" and not args.decisions:
        return _fail("usage", "review import requires --decisions")
    try:
        return args.func(args)
    except KNOWN_ERRORS as exc:
        code = type(exc).__name__.replace("Error", "").lower() or "error"
        return _fail(code, str(exc))


if __name__ == "__main__":
    sys.exit(main())
