"""HTTP service backing the curation UI.

Stateless JSON API over an immutable catalog + case index: the client owns
the in-progress filter; every filter leaving the server has passed
validation. Invalid request bodies get 400 with an issue list, never a 200
carrying a malformed filter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .caseindex import CaseIndex, execute, export_text
from .catalog import FieldCatalog
from .filters import (
    Conjunction,
    FilterParseError,
    filter_to_wire,
    parse_filter,
    validate,
)
from .fsm import SchemaFsm, compile_fsm
from .nlparse import (
    EndpointConfig,
    InvalidGenerationError,
    TransportError,
    build_lexicon,
    llm_generate,
    parse_query,
)


class GenerateBody(BaseModel):
    query: str


class FilterBody(BaseModel):
    filter: dict | None = None


@dataclass
class ServiceState:
    catalog: FieldCatalog
    index: CaseIndex
    page_size: int
    llm_config: EndpointConfig | None
    fsm: SchemaFsm | None


def _issue_response(status: int, issues: list[dict]) -> JSONResponse:
    return JSONResponse(status_code=status, content={"valid": False, "issues": issues})


def _parse_body_filter(body: FilterBody, state: ServiceState) -> Conjunction:
    """Parse + validate or raise FilterParseError/ValueError with issues."""
    if body.filter is None:
        raise FilterParseError("missing 'filter' in request body")
    filt = parse_filter(json.dumps(body.filter))
    report = validate(filt, state.catalog)
    if not report.valid:
        raise _InvalidFilter(report.to_dict()["issues"])
    return filt


class _InvalidFilter(Exception):
    def __init__(self, issues: list[dict]):
        super().__init__("filter failed validation")
        self.issues = issues


def create_app(
    catalog: FieldCatalog,
    index: CaseIndex,
    page_size: int = 100,
    llm_config: EndpointConfig | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="cohort curation service")
    lexicon = build_lexicon(catalog)
    state = ServiceState(
        catalog=catalog,
        index=index,
        page_size=page_size,
        llm_config=llm_config,
        fsm=compile_fsm(catalog) if llm_config else None,
    )

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        issues = [
            {"severity": "error", "path": ".".join(str(p) for p in e.get("loc", ())), "message": e.get("msg", "")}
            for e in exc.errors()
        ]
        return _issue_response(400, issues)

    @app.exception_handler(FilterParseError)
    async def _bad_filter(request: Request, exc: FilterParseError):
        return _issue_response(400, [{"severity": "error", "path": exc.path, "message": str(exc)}])

    @app.exception_handler(_InvalidFilter)
    async def _invalid_filter(request: Request, exc: _InvalidFilter):
        return _issue_response(400, exc.issues)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "cases": len(state.index), "fields": len(state.catalog)}

    @app.get("/api/fields")
    async def fields():
        return state.catalog.to_manifest()

    @app.post("/api/generate")
    async def generate(body: GenerateBody):
        if state.llm_config is not None and state.fsm is not None:
            try:
                filt = llm_generate(body.query, state.llm_config, state.catalog, state.fsm)
                return {
                    "filter": filter_to_wire(filt),
                    "diagnostics": {"backend": "llm", "confidence": "exact", "matched": [], "unmatched": []},
                }
            except (InvalidGenerationError, TransportError):
                pass  # fall back to the deterministic parser
        filt, diagnostics = parse_query(body.query, lexicon, state.catalog)
        payload = diagnostics.to_dict(body.query)
        payload["backend"] = "lexicon"
        return {"filter": filter_to_wire(filt), "diagnostics": payload}

    @app.post("/api/validate")
    async def validate_endpoint(body: FilterBody):
        if body.filter is None:
            raise FilterParseError("missing 'filter' in request body")
        try:
            filt = parse_filter(json.dumps(body.filter))
        except FilterParseError as exc:
            return {"valid": False, "issues": [{"severity": "error", "path": exc.path, "message": str(exc)}]}
        return validate(filt, state.catalog).to_dict()

    @app.post("/api/execute")
    async def execute_endpoint(body: FilterBody):
        filt = _parse_body_filter(body, state)
        ids = execute(filt, state.index)
        return {"count": len(ids), "case_ids": sorted(ids)[: state.page_size]}

    @app.post("/api/export")
    async def export_endpoint(body: FilterBody):
        filt = _parse_body_filter(body, state)
        ids = execute(filt, state.index)
        return PlainTextResponse(
            export_text(ids),
            media_type="text/plain; charset=utf-8",
            headers={"Content-Disposition": 'attachment; filename="case_ids.txt"'},
        )

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
