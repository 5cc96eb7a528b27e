"""Web API over the store: stats, paper listing, the four research-question
aggregations, and drilldown. Read-only; the pipeline is the only writer."""

from __future__ import annotations

import logging
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import analytics
from .analytics import AnalyticsError
from .normalize import canonical_disease
from .store import Store

logger = logging.getLogger(__name__)


def _error(code: str, detail: str, status: int = 400) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def create_app(store: Store, cors_origin: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="r0scope", docs_url=None, redoc_url=None)
    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["GET"],
            allow_headers=["*"],
        )

    @app.exception_handler(AnalyticsError)
    async def handle_analytics_error(request: Request, exc: AnalyticsError):
        return _error(exc.code, str(exc))

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/stats")
    def stats():
        snapshot = analytics.stats_snapshot(
            store.count_papers(), store.query_summaries()
        )
        return snapshot.to_dict()

    @app.get("/api/papers")
    def papers(page: str = "1", size: str = "50", q: Optional[str] = None):
        try:
            page_num = int(page)
            page_size = int(size)
        except ValueError:
            return _error("InvalidPage", "page and size must be integers")
        try:
            rows, total = store.list_papers(page_num, page_size, keyword=q)
        except ValueError as exc:
            return _error("InvalidPage", str(exc))
        return {
            "rows": [
                {
                    "pmid": r.pmid,
                    "title": r.title,
                    "abstract": r.abstract,
                    "pub_year": r.pub_year,
                    "pubmed_url": analytics.pubmed_url(r.pmid),
                }
                for r in rows
            ],
            "total": total,
            "page": page_num,
            "size": page_size,
        }

    @app.get("/api/rq1")
    def rq1(r0_min: Optional[str] = None, r0_max: Optional[str] = None):
        try:
            lo = float(r0_min) if r0_min not in (None, "") else None
            hi = float(r0_max) if r0_max not in (None, "") else None
        except ValueError:
            return _error("InvalidRange", "r0_min and r0_max must be numbers")
        rows = analytics.rq1_max_r0(store.query_summaries(), lo, hi)
        return {"rows": [r.to_dict() for r in rows]}

    @app.get("/api/rq2")
    def rq2(disease: Optional[str] = None):
        if not disease or not disease.strip():
            return _error("EmptySelection", "disease parameter is required")
        key = canonical_disease(disease)
        rows = analytics.rq2_studies_by_location(store.query_summaries(), key)
        return {"disease": key, "rows": [r.to_dict() for r in rows]}

    @app.get("/api/rq3")
    def rq3(disease: Optional[str] = None):
        if not disease or not disease.strip():
            return _error("EmptySelection", "disease parameter is required")
        key = canonical_disease(disease)
        rows = analytics.rq3_r0_range_by_location(store.query_summaries(), key)
        return {"disease": key, "rows": [r.to_dict() for r in rows]}

    @app.get("/api/rq4")
    def rq4(diseases: Optional[str] = None):
        keys = [
            canonical_disease(part)
            for part in (diseases or "").split(",")
            if part.strip()
        ]
        points = analytics.rq4_map_points(store.query_summaries(), keys)
        return {
            "diseases": sorted(set(keys)),
            "points": [p.to_dict() for p in points],
        }

    @app.get("/api/drilldown")
    def drilldown(
        disease: Optional[str] = None,
        country: Optional[str] = None,
        rq: Optional[str] = None,
    ):
        if not disease or not disease.strip():
            return _error("EmptySelection", "disease parameter is required")
        key = canonical_disease(disease)
        entries = analytics.drilldown(
            store.query_summaries(), store.papers_by_pmid(), key, country or None
        )
        return {
            "disease": key,
            "country": country,
            "rows": [e.to_dict() for e in entries],
        }

    return app


def serve(
    store_path: str,
    port: int = 8000,
    host: str = "127.0.0.1",
    cors_origin: Optional[str] = None,
) -> None:
    """Run the API server until interrupted."""
    import uvicorn

    app = create_app(Store(store_path), cors_origin=cors_origin)
    uvicorn.run(app, host=host, port=port, log_level="info")
