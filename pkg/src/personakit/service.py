"""HTTP API over the pipeline store: runs, phases, taxonomies, review queue,
decisions, and evaluation reports. The review UI and the CLI both speak this
surface; all list endpoints paginate.
"""
from __future__ import annotations

import logging
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .config import PipelineConfig
from .errors import ConfigurationError, GateError
from .pipeline import Phase, Pipeline
from .validation import ConflictError, DecisionError, Stage, TransitionError

logger = logging.getLogger(__name__)


class DecisionRequest(BaseModel):
    decision: str
    reviewer_id: str
    comment: str = ""
    challenge: str | None = None


class PhaseRequest(BaseModel):
    phase: str
    background: bool = False


class RunCreateRequest(BaseModel):
    run_id: str | None = None
    overrides: dict = Field(default_factory=dict)


def create_app(config: PipelineConfig | None = None, pipeline: Pipeline | None = None) -> FastAPI:
    config = config or PipelineConfig()
    pipe = pipeline or Pipeline(config)
    app = FastAPI(title="personakit", version=__version__)
    phase_status: dict[str, dict] = {}
    status_lock = threading.Lock()

    def _http(exc: Exception) -> HTTPException:
        if isinstance(exc, KeyError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, (GateError, TransitionError, ConflictError)):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (DecisionError, ConfigurationError, ValueError)):
            return HTTPException(status_code=422, detail=str(exc))
        raise exc

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/v1/runs", status_code=201)
    def create_run(request: RunCreateRequest) -> dict:
        try:
            run = pipe.create_run(run_id=request.run_id)
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP
            raise _http(exc)
        return run.to_dict()

    @app.get("/v1/runs")
    def list_runs(page: int = Query(1, ge=1), limit: int = Query(50, ge=1, le=500)) -> dict:
        runs = pipe.store.list_runs()
        start = (page - 1) * limit
        return {
            "runs": runs[start : start + limit],
            "page": page,
            "limit": limit,
            "total": len(runs),
        }

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        try:
            run = pipe.get_run(run_id).to_dict()
        except KeyError as exc:
            raise _http(exc)
        with status_lock:
            run["phase_status"] = phase_status.get(run_id, {"state": "idle"})
        return run

    def _execute_phase(run_id: str, phase: str) -> None:
        try:
            pipe.run_phase(run_id, phase)
            with status_lock:
                phase_status[run_id] = {"state": "idle", "last_phase": phase}
        except Exception as exc:  # noqa: BLE001 - recorded for polling
            logger.exception("background phase %s failed for run %s", phase, run_id)
            with status_lock:
                phase_status[run_id] = {"state": "failed", "last_phase": phase, "error": str(exc)}

    @app.post("/v1/runs/{run_id}/phase")
    def run_phase(run_id: str, request: PhaseRequest) -> dict:
        try:
            Phase(request.phase)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown phase: {request.phase!r}") from exc
        if request.background:
            try:
                pipe.get_run(run_id)
            except KeyError as exc:
                raise _http(exc)
            with status_lock:
                phase_status[run_id] = {"state": "running", "last_phase": request.phase}
            thread = threading.Thread(
                target=_execute_phase, args=(run_id, request.phase), daemon=True
            )
            thread.start()
            return {"run_id": run_id, "phase": request.phase, "state": "running"}
        try:
            run = pipe.run_phase(run_id, request.phase)
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP
            raise _http(exc)
        if request.phase == Phase.VALIDATE.value:
            pipe.ensure_review_progress(run_id)
        return run.to_dict()

    @app.get("/v1/taxonomies/{draft_id}")
    def get_taxonomy(draft_id: str) -> dict:
        try:
            draft = pipe.store.read_taxonomy(draft_id)
        except KeyError as exc:
            raise _http(exc)
        record = None
        try:
            record = pipe.workflow.get_record(draft_id).to_dict()
        except KeyError:
            pass
        return {"taxonomy": draft.to_dict(), "validation": record}

    @app.get("/v1/review/queue")
    def review_queue(
        stage: str | None = None,
        draft_id: str | None = None,
        page: int = Query(1, ge=1),
        limit: int = Query(50, ge=1, le=500),
    ) -> dict:
        stage_filter = None
        if stage is not None:
            try:
                stage_filter = Stage(stage)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=f"unknown stage: {stage!r}") from exc
        items = pipe.workflow.pending_items(stage=stage_filter, draft_id=draft_id)
        start = (page - 1) * limit
        return {
            "items": [i.to_dict() for i in items[start : start + limit]],
            "page": page,
            "limit": limit,
            "total": len(items),
        }

    @app.post("/v1/review/items/{item_id}/decision")
    def post_decision(item_id: str, request: DecisionRequest) -> dict:
        try:
            record = pipe.workflow.record_decision(
                item_id,
                request.decision,
                reviewer_id=request.reviewer_id,
                comment=request.comment,
                challenge=request.challenge,
            )
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP
            raise _http(exc)
        # Structural pass hands off to the domain stage without a separate call.
        for run in pipe.store.list_runs():
            if run.get("dataset_refs", {}).get("taxonomy_draft") == record.draft_id:
                pipe.ensure_review_progress(run["run_id"])
                break
        return {
            "item": pipe.workflow.get_item(item_id).to_dict(),
            "record": pipe.workflow.get_record(record.draft_id).to_dict(),
        }

    @app.get("/v1/review/records/{draft_id}")
    def get_record(draft_id: str) -> dict:
        try:
            return pipe.workflow.get_record(draft_id).to_dict()
        except KeyError as exc:
            raise _http(exc)

    @app.get("/v1/reports/{run_id}")
    def get_report(run_id: str) -> dict:
        try:
            run = pipe.get_run(run_id)
        except KeyError as exc:
            raise _http(exc)
        ref = run.dataset_refs.get("report")
        if not ref or not Path(ref).exists():
            raise HTTPException(status_code=404, detail=f"run {run_id} has no evaluation report")
        return pipe.store.read_json_artifact(ref)

    @app.get("/v1/metrics/{run_id}/confusion")
    def get_confusion(run_id: str) -> dict:
        try:
            run = pipe.get_run(run_id)
        except KeyError as exc:
            raise _http(exc)
        ref = run.dataset_refs.get("report")
        if not ref or not Path(ref).exists():
            raise HTTPException(status_code=404, detail=f"run {run_id} has no evaluation report")
        report = pipe.store.read_json_artifact(ref)
        matrix = report.get("confusion")
        if not matrix:
            raise HTTPException(status_code=404, detail=f"run {run_id} report has no matrix")
        return {**matrix, "n": report["n"]}

    frontend = config.service.frontend_dist
    if frontend and Path(frontend).is_dir():
        app.mount("/ui", StaticFiles(directory=frontend, html=True), name="ui")

    return app


def serve(config: PipelineConfig) -> None:
    """Run the HTTP API under uvicorn; raises on invalid config or busy port."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.service.host, port=config.service.port, log_level="info")
