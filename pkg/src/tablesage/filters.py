"""The numeric/year filter language and highlight-class combination.

Grammar (case-insensitive, whitespace-separated):

    expr    := term ("and" term)*
    term    := ("gt" | "lt") decimal | "year" digit{4}
    decimal := optional sign, digits, optional "." fraction

At most one term of each kind; when both bounds are present gt must be below
lt. Error positions are 1-based character offsets into the input text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum

from .tables import CellKind, ColumnHeaderInfo, ExtractedTable


class FilterParseError(Exception):
    """Invalid filter text; position is a 1-based character offset."""

    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position
        self.reason = message


@dataclass(frozen=True)
class FilterExpr:
    """Conjunction of at most one gt bound, one lt bound, and one year term."""

    greater_than: float | None = None
    less_than: float | None = None
    year: int | None = None

    def __post_init__(self):
        if self.greater_than is None and self.less_than is None and self.year is None:
            raise ValueError("empty filter expression")
        if (
            self.greater_than is not None
            and self.less_than is not None
            and not (self.greater_than < self.less_than)
        ):
            raise ValueError("gt bound must be below lt bound")

    @property
    def has_range(self) -> bool:
        return self.greater_than is not None or self.less_than is not None

    def matches_value(self, value: float) -> bool:
        """Strict-inequality range test for one numeric value."""
        if self.greater_than is not None and not (value > self.greater_than):
            return False
        if self.less_than is not None and not (value < self.less_than):
            return False
        return True


class HighlightClass(Enum):
    SIMILAR_PRIMARY = "similar_primary"
    SIMILAR_SECONDARY = "similar_secondary"
    FILTER_ONLY = "filter_only"
    INTERSECTION = "intersection"
    YEAR_COLUMN = "year_column"


@dataclass(frozen=True)
class FilterResult:
    """Rows matched by the range bounds and columns selected by the year term.

    ``year_missing`` flags a year term that named a year absent from the
    detected headers.
    """

    matched_rows: tuple[int, ...]
    year_columns: tuple[int, ...]
    year_missing: bool = False


_NUMBER_RE = re.compile(r"[+-]?[0-9]+(\.[0-9]+)?$")
_YEAR_RE = re.compile(r"[0-9]{4}$")


def _words_with_positions(text: str) -> list[tuple[str, int]]:
    """(word, 1-based start position) pairs for whitespace-separated words."""
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", text)]


def parse_filter(text: str) -> FilterExpr:
    words = _words_with_positions(text)
    if not words:
        raise FilterParseError(1, "empty filter expression")

    gt: tuple[float, int] | None = None
    lt: tuple[float, int] | None = None
    year: tuple[int, int] | None = None

    i = 0
    expect_term = True
    while i < len(words):
        word, pos = words[i]
        keyword = word.lower()
        if not expect_term:
            if keyword == "and":
                expect_term = True
                i += 1
                continue
            raise FilterParseError(pos, f"expected 'and' before {word!r}")
        if keyword not in ("gt", "lt", "year"):
            raise FilterParseError(pos, f"unknown keyword {word!r}")
        if i + 1 >= len(words):
            raise FilterParseError(pos + len(word), f"missing value after {keyword!r}")
        value_word, value_pos = words[i + 1]
        if keyword == "year":
            if not _YEAR_RE.fullmatch(value_word):
                raise FilterParseError(value_pos, f"expected a 4-digit year, got {value_word!r}")
            if year is not None:
                raise FilterParseError(pos, "duplicate year term")
            year = (int(value_word), pos)
        else:
            if not _NUMBER_RE.fullmatch(value_word):
                raise FilterParseError(value_pos, f"expected a number, got {value_word!r}")
            if keyword == "gt":
                if gt is not None:
                    raise FilterParseError(pos, "duplicate gt term")
                gt = (float(value_word), pos)
            else:
                if lt is not None:
                    raise FilterParseError(pos, "duplicate lt term")
                lt = (float(value_word), pos)
        expect_term = False
        i += 2
    if expect_term:
        # a trailing "and" with nothing after it
        last_word, last_pos = words[-1]
        raise FilterParseError(last_pos + len(last_word), "expected a term after 'and'")

    if gt is not None and lt is not None and not (gt[0] < lt[0]):
        later = max(gt, lt, key=lambda t: t[1])
        raise FilterParseError(later[1], f"gt bound {gt[0]:g} must be below lt bound {lt[0]:g}")
    return FilterExpr(
        greater_than=None if gt is None else gt[0],
        less_than=None if lt is None else lt[0],
        year=None if year is None else year[0],
    )


def _format_number(value: float) -> str:
    # the grammar has no exponent form, so expand repr's shortest spelling
    # into plain decimal digits
    if value == int(value):
        return str(int(value))
    return format(Decimal(repr(value)), "f")


def unparse(expr: FilterExpr) -> str:
    """Canonical text for an expression; parse_filter(unparse(e)) == e."""
    terms = []
    if expr.greater_than is not None:
        terms.append(f"gt {_format_number(expr.greater_than)}")
    if expr.less_than is not None:
        terms.append(f"lt {_format_number(expr.less_than)}")
    if expr.year is not None:
        terms.append(f"year {expr.year}")
    return " and ".join(terms)


def apply_filter(
    expr: FilterExpr, table: ExtractedTable, headers: ColumnHeaderInfo
) -> FilterResult:
    """Evaluate a filter over a parsed table.

    A row matches when at least one Number cell satisfies every range bound;
    Year cells never participate in range matching. The year term selects
    columns only, it does not restrict row matching.
    """
    matched: list[int] = []
    if expr.has_range:
        for row in table.rows:
            hit = any(
                cell.kind is CellKind.NUMBER and expr.matches_value(cell.value)
                for cell in row.unique_cells()
            )
            if hit:
                matched.append(row.ordinal)
    year_cols: list[int] = []
    year_missing = False
    if expr.year is not None:
        year_cols = sorted(c for c, y in headers.year_columns.items() if y == expr.year)
        year_missing = not year_cols
    return FilterResult(
        matched_rows=tuple(matched),
        year_columns=tuple(year_cols),
        year_missing=year_missing,
    )


@dataclass(frozen=True)
class CellHighlight:
    row: int
    column: int
    css_class: HighlightClass


def combine_highlights(
    table: ExtractedTable,
    filter_result: FilterResult,
    expr: FilterExpr | None,
    similar_rows: list[tuple[int, float]] | None = None,
) -> list[CellHighlight]:
    """Merge filter matches and row-similarity hits into per-cell classes.

    Rows in both sets become Intersection; filter-only rows FilterOnly; the
    similarity hit with the smallest distance SimilarPrimary and the rest
    SimilarSecondary. Year columns overlay YearColumn on cells not already
    classed; with range terms present the year overlay is confined to
    matched rows.
    """
    similar_rows = similar_rows or []
    filter_set = set(filter_result.matched_rows)
    sim_by_row: dict[int, float] = {}
    for ordinal, distance in similar_rows:
        if ordinal not in sim_by_row or distance < sim_by_row[ordinal]:
            sim_by_row[ordinal] = distance
    # primary is the nearest hit among rows not absorbed into Intersection
    similarity_only = [r for r in sim_by_row if r not in filter_set]
    primary_row: int | None = None
    if similarity_only:
        primary_row = min(similarity_only, key=lambda r: (sim_by_row[r], r))

    row_class: dict[int, HighlightClass] = {}
    for ordinal in filter_set | set(sim_by_row):
        if ordinal in filter_set and ordinal in sim_by_row:
            row_class[ordinal] = HighlightClass.INTERSECTION
        elif ordinal in filter_set:
            row_class[ordinal] = HighlightClass.FILTER_ONLY
        elif ordinal == primary_row:
            row_class[ordinal] = HighlightClass.SIMILAR_PRIMARY
        else:
            row_class[ordinal] = HighlightClass.SIMILAR_SECONDARY

    range_present = expr is not None and expr.has_range
    highlights: list[CellHighlight] = []
    for row in table.rows:
        cls = row_class.get(row.ordinal)
        if cls is not None:
            for position in range(len(row.cells)):
                highlights.append(CellHighlight(row.ordinal, position, cls))
        # year overlay covers the whole column for a year-only query, but is
        # confined to range-matched rows once bounds are present
        if (not range_present) or row.ordinal in filter_set:
            for position in filter_result.year_columns:
                if position < len(row.cells):
                    highlights.append(
                        CellHighlight(row.ordinal, position, HighlightClass.YEAR_COLUMN)
                    )
    return highlights


def serialize_highlights(highlights: list[CellHighlight]) -> list[str]:
    """`row,column,class` triples in row-major order."""
    ordered = sorted(highlights, key=lambda h: (h.row, h.column, h.css_class.value))
    return [f"{h.row},{h.column},{h.css_class.value}" for h in ordered]
