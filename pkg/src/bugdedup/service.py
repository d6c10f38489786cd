"""HTTP submission gate: check a draft report for duplicates before it
enters the tracker, and optionally register it in the recent cache."""

from __future__ import annotations

import itertools
import threading

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from . import nominate, rerank
from .config import Config
from .corpus import BugReport, CorpusError


def _report_from_body(body: dict) -> BugReport:
    if not isinstance(body, dict):
        raise CorpusError("report must be a JSON object")
    from .corpus import _report_from_record
    return _report_from_record(body, "report")


def create_app(pipeline=None, config: Config | None = None,
               artifacts_dir=None) -> FastAPI:
    """Build the service app around a trained pipeline.

    Either pass a pipeline directly or an artifacts directory to load at
    startup. Checks are read-only; submits serialize on a cache lock.
    """
    config = config or Config()
    app = FastAPI(title="bugdedup")
    state = {"pipeline": pipeline}
    cache_lock = threading.Lock()
    submit_ids = itertools.count(1)

    if pipeline is None and artifacts_dir is not None:
        from .pipeline import load_artifacts
        state["pipeline"] = load_artifacts(artifacts_dir, config)

    @app.exception_handler(CorpusError)
    async def bad_report(_, exc):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def require_pipeline():
        if state["pipeline"] is None:
            raise HTTPException(status_code=503,
                                detail="trained artifacts not loaded")
        return state["pipeline"]

    def run_check(body: dict):
        trained = require_pipeline()
        k = body.get("k", config.k)
        if not isinstance(k, int) or k < 1:
            raise CorpusError("k must be a positive integer")
        report = _report_from_body(body.get("report"))
        processed, vector = trained.process_and_vectorize(report)
        nominees = nominate.knn_query(trained.index, trained.cache, vector, k)
        degraded = False
        if trained.classifier is not None:
            outcome = rerank.filter_nominees(trained.classifier, processed,
                                             nominees, trained.processed,
                                             trained.space)
            nominees, degraded = outcome.nominations, outcome.degraded
        verdict = ("likely-duplicate"
                   if nominees and nominees[0].similarity >= config.verdict_threshold
                   else "likely-new")
        return verdict, nominees, degraded, processed, vector

    @app.post("/v1/check")
    async def check(body: dict):
        verdict, nominees, degraded, _, _ = run_check(body)
        return {
            "verdict": verdict,
            "degraded": degraded,
            "candidates": [{"id": n.report_id, "distance": n.distance,
                            "similarity": n.similarity} for n in nominees],
        }

    @app.post("/v1/submit")
    async def submit(body: dict):
        trained = require_pipeline()
        verdict, nominees, _, processed, vector = run_check(body)
        if verdict == "likely-duplicate" and not body.get("force", False):
            return {"accepted": False,
                    "candidates": [{"id": n.report_id, "distance": n.distance,
                                    "similarity": n.similarity} for n in nominees]}
        with cache_lock:
            report_id = str(body["report"].get("id") or "")
            while (not report_id or report_id in trained.cache
                   or report_id in trained.index.ids):
                report_id = f"submitted-{next(submit_ids)}"
            nominate.cache_add(trained.cache, report_id, vector, trained.index)
            # the filter looks nominees up by id, cached ones included
            processed.id = report_id
            trained.processed[report_id] = processed
        return {"accepted": True, "id": report_id}

    @app.get("/v1/health")
    async def health():
        trained = state["pipeline"]
        return {
            "status": "ok" if trained is not None else "loading",
            "index_size": len(trained.index) if trained is not None else 0,
            "cache_size": len(trained.cache) if trained is not None else 0,
        }

    return app
