"""Read-only HTTP service over a loaded engine state.

Responses are plain JSON built from pre-sorted structures, so identical
engine state and request always produce byte-identical bodies. Distances are
serialized as 6-decimal strings.
"""

from __future__ import annotations

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .filters import (
    FilterParseError,
    apply_filter,
    combine_highlights,
    parse_filter,
    serialize_highlights,
    unparse,
)
from .pipeline import EngineState
from .similarity import query_similar_rows, query_similar_tables


def _distance(value: float) -> str:
    return f"{value:.6f}"


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": {"message": message, **extra}})


def _not_found(what: str) -> JSONResponse:
    return _error(404, f"unknown {what}")


class SimilarRowIn(BaseModel):
    row: int
    distance: float


class FilterRequest(BaseModel):
    query: str
    similar_rows: list[SimilarRowIn] | None = None


def build_app(state: EngineState) -> FastAPI:
    app = FastAPI(title="tablesage", docs_url=None, redoc_url=None)
    by_id = state.corpus.by_id()
    label_of = None
    if state.model is not None:
        label_of = state.model.label_map.label_of

    def table_or_none(table_id: str):
        return by_id.get(table_id)

    @app.get("/tables")
    def list_tables():
        tables = []
        for table_id in sorted(by_id):
            table = by_id[table_id]
            tables.append(
                {
                    "id": table.table_id,
                    "company": table.company,
                    "table_type": table.table_type.value,
                    "label_id": label_of(table) if label_of is not None else None,
                }
            )
        return {"tables": tables}

    @app.get("/tables/{table_id}")
    def get_table(table_id: str):
        table = table_or_none(table_id)
        if table is None:
            return _not_found("table id")
        headers = state.headers[table_id]
        rows = []
        for row in table.rows:
            cells = [
                {
                    "column": c.column,
                    "text": c.raw_text,
                    "kind": c.kind.value,
                    "value": c.value,
                    "span": c.span,
                }
                for c in row.unique_cells()
            ]
            rows.append({"ordinal": row.ordinal, "cells": cells})
        return {
            "id": table.table_id,
            "company": table.company,
            "table_type": table.table_type.value,
            "style_ref": table.style_ref,
            "header": {
                "year_columns": [
                    {"column": c, "year": y} for c, y in sorted(headers.year_columns.items())
                ],
                "header_row_count": headers.header_row_count,
            },
            "rows": rows,
        }

    @app.get("/tables/{table_id}/style")
    def get_style(table_id: str):
        table = table_or_none(table_id)
        if table is None:
            return _not_found("table id")
        return {"style_ref": table.style_ref, "css": state.corpus.styles.get(table.style_ref, "")}

    @app.get("/tables/{table_id}/similar")
    def similar_tables(table_id: str, k: int = Query(default=0, ge=0)):
        if state.index is None:
            return _error(503, "table index not loaded; run build-index")
        if table_or_none(table_id) is None or table_id not in state.index:
            return _not_found("table id")
        hits = query_similar_tables(state.index, table_id, k or state.default_k)
        return {
            "query": table_id,
            "hits": [{"table_id": h.id, "distance": _distance(h.distance)} for h in hits],
        }

    @app.get("/tables/{table_id}/rows/{ordinal}/similar")
    def similar_rows(table_id: str, ordinal: int, n: int = Query(default=0, ge=0)):
        if state.index is None or state.row_index is None:
            return _error(503, "similarity index not loaded; run build-index")
        table = table_or_none(table_id)
        if table is None:
            return _not_found("table id")
        if not (0 <= ordinal < len(table.rows)):
            return _not_found("row ordinal")
        vector = state.row_index.vector(table_id, ordinal)
        if vector is None:
            return _error(422, "row has no in-vocabulary tokens", row=ordinal)
        neighbors = query_similar_tables(state.index, table_id, state.default_k)
        candidates = [h.id for h in neighbors if h.id in state.row_index.tables()]
        hits = query_similar_rows(state.row_index, vector, n or state.default_n, candidates)
        return {
            "query": {"table_id": table_id, "row": ordinal},
            "candidate_tables": candidates,
            "hits": [
                {"table_id": h.table_id, "row": h.row_ordinal, "distance": _distance(h.distance)}
                for h in hits
            ],
        }

    @app.post("/tables/{table_id}/filter")
    def filter_table(table_id: str, request: FilterRequest):
        table = table_or_none(table_id)
        if table is None:
            return _not_found("table id")
        try:
            expr = parse_filter(request.query)
        except FilterParseError as exc:
            return _error(422, exc.reason, position=exc.position)
        result = apply_filter(expr, table, state.headers[table_id])
        similar = [(s.row, s.distance) for s in request.similar_rows or []]
        highlights = combine_highlights(table, result, expr, similar)
        return {
            "table_id": table_id,
            "expr": unparse(expr),
            "matched_rows": list(result.matched_rows),
            "year_columns": list(result.year_columns),
            "year_missing": result.year_missing,
            "highlights": serialize_highlights(highlights),
        }

    @app.get("/projection")
    def projection():
        if not state.projection_rows:
            return _error(503, "projection not built; run project")
        points = []
        for line in state.projection_rows:
            table_id, x, y, label_id = line.split(",")
            points.append(
                {"table_id": table_id, "x": float(x), "y": float(y), "label_id": int(label_id)}
            )
        return {"points": points}

    return app
