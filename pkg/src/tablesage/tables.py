"""HTML table extraction and parsing for report corpora.

Report documents arrive as HTML (converted upstream from PDF). This module
pulls ``<table>`` fragments out of a document, parses a fragment into a typed
row/cell model with numeric and year detection, finds year header columns,
and loads a labeled corpus from a manifest file.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path


class TableType(Enum):
    """The four standard financial statement types."""

    PROFIT_OR_LOSS = "ProfitOrLoss"
    FINANCIAL_POSITION = "FinancialPosition"
    CHANGES_IN_EQUITY = "ChangesInEquity"
    CASH_FLOWS = "CashFlows"

    @classmethod
    def from_name(cls, name: str) -> "TableType":
        for member in cls:
            if member.value == name:
                return member
        legal = "|".join(m.value for m in cls)
        raise ManifestError(f"unknown table_type {name!r}; expected one of {legal}")


class CellKind(Enum):
    TEXT = "Text"
    NUMBER = "Number"
    YEAR = "Year"
    EMPTY = "Empty"


class IngestError(Exception):
    """Raised when a document cannot be parsed, carrying doc id and byte offset."""

    def __init__(self, doc_id: str, offset: int, message: str):
        super().__init__(f"{doc_id} @ byte {offset}: {message}")
        self.doc_id = doc_id
        self.offset = offset


class ManifestError(Exception):
    """Raised for malformed or inconsistent corpus manifests."""


@dataclass(frozen=True)
class SourceDocument:
    """One HTML document to ingest."""

    doc_id: str
    company: str
    origin_path: str
    html_payload: str


@dataclass(frozen=True)
class Cell:
    """A single table cell.

    ``column`` is the first grid column the cell covers; a cell with
    ``span > 1`` is referenced at each covered position of ``Row.cells``.
    ``value`` is set only for Number and Year kinds.
    """

    column: int
    raw_text: str
    kind: CellKind
    value: float | None = None
    span: int = 1


@dataclass(frozen=True)
class Row:
    ordinal: int
    cells: tuple[Cell, ...]

    def unique_cells(self) -> list[Cell]:
        """Cells in order, collapsing span replicas back to one reference each."""
        out: list[Cell] = []
        for cell in self.cells:
            if not out or out[-1] is not cell:
                out.append(cell)
        return out

    @property
    def header_text(self) -> str:
        """Text-kind cell contents joined with single spaces."""
        return " ".join(
            c.raw_text for c in self.unique_cells() if c.kind is CellKind.TEXT
        )


@dataclass(frozen=True)
class ExtractedTable:
    table_id: str
    doc_id: str
    company: str
    table_type: TableType
    rows: tuple[Row, ...]
    raw_fragment: str
    style_ref: str


@dataclass(frozen=True)
class ColumnHeaderInfo:
    """Year columns discovered in the leading rows of a table."""

    year_columns: dict[int, int]
    header_row_count: int


@dataclass(frozen=True)
class ManifestEntry:
    table_file: str
    table_type: TableType
    company: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]


@dataclass
class Corpus:
    """An immutable loaded corpus: parsed tables plus their style rules."""

    tables: list[ExtractedTable]
    styles: dict[str, str] = field(default_factory=dict)

    def by_id(self) -> dict[str, ExtractedTable]:
        return {t.table_id: t for t in self.tables}


_YEAR_RE = re.compile(r"\d{4}")
_NUMBER_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)")

DEFAULT_SCAN_ROWS = 3


def parse_cell(raw_text: str) -> tuple[CellKind, float | None]:
    """Classify a cell's text as Text, Number, Year or Empty.

    Grammar: trim; an undecorated 4-digit integer in [1900, 2100] is a Year;
    otherwise strip currency markers ($, AUD prefix) and thousands commas,
    let surrounding parentheses negate, allow a trailing percent sign, and
    whatever remains must be an optional-sign decimal to count as a Number.
    Anything else falls back to Text, so classification is total.
    """
    s = raw_text.strip()
    if s == "":
        return CellKind.EMPTY, None
    if _YEAR_RE.fullmatch(s) and 1900 <= int(s) <= 2100:
        return CellKind.YEAR, float(int(s))
    t = s
    if t.upper().startswith("AUD"):
        t = t[3:].lstrip()
    t = t.replace("$", "").replace(",", "").strip()
    negate = False
    if len(t) >= 2 and t.startswith("(") and t.endswith(")"):
        t = t[1:-1].strip()
        negate = True
    if t.endswith("%"):
        t = t[:-1].strip()
    if _NUMBER_RE.fullmatch(t):
        value = float(t)
        return CellKind.NUMBER, -value if negate else value
    return CellKind.TEXT, None


_WS_RE = re.compile(r"\s+")


def _normalize_text(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


class _DocumentScanner(HTMLParser):
    """Locates top-level <table> fragments and collects <style> rule text."""

    def __init__(self, doc_id: str, raw: str):
        super().__init__(convert_charrefs=True)
        self.doc_id = doc_id
        self.raw = raw
        self.line_offsets = [0]
        for line in raw.splitlines(keepends=True):
            self.line_offsets.append(self.line_offsets[-1] + len(line))
        self.depth = 0
        self.fragment_start = 0
        self.fragments: list[str] = []
        self.in_style = False
        self.style_parts: list[str] = []

    def _offset(self) -> int:
        line, col = self.getpos()
        return self.line_offsets[line - 1] + col

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            if self.depth == 0:
                self.fragment_start = self._offset()
            self.depth += 1
        elif tag == "style":
            self.in_style = True

    def handle_endtag(self, tag):
        if tag == "table" and self.depth > 0:
            self.depth -= 1
            if self.depth == 0:
                close = self.raw.find(">", self._offset())
                end = close + 1 if close >= 0 else len(self.raw)
                self.fragments.append(self.raw[self.fragment_start : end])
        elif tag == "style":
            self.in_style = False

    def handle_data(self, data):
        if self.in_style:
            self.style_parts.append(data)

    def finish(self) -> None:
        self.close()
        if self.depth > 0:
            # Unclosed table: tolerant mode runs it to end of document.
            self.fragments.append(self.raw[self.fragment_start :])
            self.depth = 0


def extract_tables(doc: SourceDocument) -> list[tuple[str, str]]:
    """Return (raw_fragment, style_ref) for each top-level table in the document.

    Fragments are verbatim sub-documents in source order; nested tables stay
    inside their outermost fragment. The style_ref keys the document's style
    rule text (see ``extract_styles``) so fragments can be re-rendered with
    their original appearance.
    """
    if not doc.html_payload:
        raise IngestError(doc.doc_id, 0, "empty html payload")
    scanner = _DocumentScanner(doc.doc_id, doc.html_payload)
    try:
        scanner.feed(doc.html_payload)
        scanner.finish()
    except IngestError:
        raise
    except Exception as exc:  # html.parser is tolerant; anything it rejects is fatal
        raise IngestError(doc.doc_id, scanner._offset(), str(exc)) from exc
    return [(fragment, doc.doc_id) for fragment in scanner.fragments]


def extract_styles(doc: SourceDocument) -> str:
    """Concatenated <style> rule text of the document (may be empty)."""
    scanner = _DocumentScanner(doc.doc_id, doc.html_payload)
    scanner.feed(doc.html_payload)
    scanner.finish()
    return "\n".join(part.strip() for part in scanner.style_parts if part.strip())


class _FragmentParser(HTMLParser):
    """Parses one table fragment into rows of (text, colspan) cells."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.table_depth = 0
        self.rows: list[list[tuple[str, int]]] = []
        self.current_row: list[tuple[str, int]] | None = None
        self.cell_text: list[str] | None = None
        self.cell_span = 1

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            self.table_depth += 1
            return
        if self.table_depth != 1:
            return
        if tag == "tr":
            self._close_row()
            self.current_row = []
        elif tag in ("td", "th"):
            self._close_cell()
            if self.current_row is None:
                self.current_row = []
            self.cell_text = []
            span = dict(attrs).get("colspan") or "1"
            try:
                self.cell_span = max(1, int(span))
            except ValueError:
                self.cell_span = 1

    def handle_endtag(self, tag):
        if tag == "table":
            if self.table_depth == 1:
                self._close_cell()
                self._close_row()
            self.table_depth = max(0, self.table_depth - 1)
            return
        if self.table_depth != 1:
            return
        if tag in ("td", "th"):
            self._close_cell()
        elif tag == "tr":
            self._close_cell()
            self._close_row()

    def handle_data(self, data):
        if self.cell_text is not None:
            self.cell_text.append(data)
        # Text inside nested tables accumulates into the open outer cell.

    def _close_cell(self):
        if self.cell_text is not None and self.current_row is not None:
            self.current_row.append(("".join(self.cell_text), self.cell_span))
        self.cell_text = None
        self.cell_span = 1

    def _close_row(self):
        if self.current_row is not None:
            self.rows.append(self.current_row)
        self.current_row = None

    def finish(self):
        self.close()
        self._close_cell()
        self._close_row()


def parse_table(
    fragment: str,
    table_id: str,
    company: str,
    table_type: TableType,
    style_ref: str = "",
    doc_id: str = "",
) -> ExtractedTable:
    """Parse a table fragment into the typed row/cell model.

    Every <tr> becomes a Row and every <td>/<th> a Cell; a colspan-w cell is
    referenced at each of its w grid positions so column indices line up with
    rendered columns.
    """
    parser = _FragmentParser()
    parser.feed(fragment)
    parser.finish()
    raw_rows = [r for r in parser.rows if r]
    if not raw_rows:
        raise IngestError(table_id, 0, "table fragment has no rows")
    rows = []
    for ordinal, raw_cells in enumerate(raw_rows):
        cells: list[Cell] = []
        column = 0
        for text, span in raw_cells:
            normalized = _normalize_text(text)
            kind, value = parse_cell(normalized)
            cell = Cell(column=column, raw_text=normalized, kind=kind, value=value, span=span)
            cells.extend([cell] * span)
            column += span
        rows.append(Row(ordinal=ordinal, cells=tuple(cells)))
    return ExtractedTable(
        table_id=table_id,
        doc_id=doc_id or table_id,
        company=company,
        table_type=table_type,
        rows=tuple(rows),
        raw_fragment=fragment,
        style_ref=style_ref,
    )


def serialize_rows(table: ExtractedTable) -> str:
    """Re-emit the parsed rows as minimal HTML (markup stripped, text preserved)."""
    parts = ["<table>"]
    for row in table.rows:
        cells = "".join(
            f'<td colspan="{c.span}">{c.raw_text}</td>' if c.span > 1 else f"<td>{c.raw_text}</td>"
            for c in row.unique_cells()
        )
        parts.append(f"<tr>{cells}</tr>")
    parts.append("</table>")
    return "\n".join(parts)


def detect_headers(table: ExtractedTable, scan_rows: int = DEFAULT_SCAN_ROWS) -> ColumnHeaderInfo:
    """Scan the first ``scan_rows`` rows for year header cells.

    For each column the first Year cell seen defines its year;
    header_row_count is one past the last row that defined a column's year.
    """
    if scan_rows < 1:
        raise ValueError("scan_rows must be >= 1")
    year_columns: dict[int, int] = {}
    header_row_count = 0
    for row in table.rows[:scan_rows]:
        contributed = False
        for position, cell in enumerate(row.cells):
            if cell.kind is CellKind.YEAR and position not in year_columns:
                year_columns[position] = int(cell.value)
                contributed = True
        if contributed:
            header_row_count = row.ordinal + 1
    return ColumnHeaderInfo(year_columns=year_columns, header_row_count=header_row_count)


MANIFEST_COLUMNS = ("table_file", "table_type", "company")


def read_manifest(manifest_path: str | Path) -> CorpusManifest:
    """Read a comma-separated corpus manifest with a required header row."""
    path = Path(manifest_path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"manifest is empty: {path}") from None
        if tuple(col.strip() for col in header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_COLUMNS)}, got {','.join(header)}"
            )
        entries = []
        seen: set[str] = set()
        for lineno, fields in enumerate(reader, start=2):
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 columns, got {len(fields)}")
            table_file, type_name, company = (f.strip() for f in fields)
            if table_file in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate table_file {table_file!r}")
            seen.add(table_file)
            entries.append(
                ManifestEntry(
                    table_file=table_file,
                    table_type=TableType.from_name(type_name),
                    company=company,
                )
            )
    return CorpusManifest(entries=tuple(entries))


def load_corpus(manifest_path: str | Path) -> Corpus:
    """Load every table named by the manifest, one ExtractedTable per row.

    Fragment paths are resolved relative to the manifest. Each fragment file
    must contain exactly one top-level table; its <style> rules are kept in
    the corpus style store under the table's style_ref.
    """
    path = Path(manifest_path)
    manifest = read_manifest(path)
    base = path.parent
    tables: list[ExtractedTable] = []
    styles: dict[str, str] = {}
    seen_ids: set[str] = set()
    for entry in manifest.entries:
        file_path = base / entry.table_file
        if not file_path.is_file():
            raise ManifestError(f"manifest references missing file: {entry.table_file}")
        table_id = Path(entry.table_file).stem
        if table_id in seen_ids:
            raise ManifestError(f"table id {table_id!r} is not unique across manifest files")
        seen_ids.add(table_id)
        doc = SourceDocument(
            doc_id=table_id,
            company=entry.company,
            origin_path=str(file_path),
            html_payload=file_path.read_text(encoding="utf-8"),
        )
        fragments = extract_tables(doc)
        if len(fragments) != 1:
            raise IngestError(
                doc.doc_id, 0, f"expected exactly 1 table in fragment file, found {len(fragments)}"
            )
        fragment, style_ref = fragments[0]
        tables.append(
            parse_table(
                fragment,
                table_id=table_id,
                company=entry.company,
                table_type=entry.table_type,
                style_ref=style_ref,
                doc_id=doc.doc_id,
            )
        )
        styles[style_ref] = extract_styles(doc)
    return Corpus(tables=tables, styles=styles)
