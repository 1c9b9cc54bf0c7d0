"""Tokenization of parsed tables into word streams and vocabulary building.

Only row descriptions and header words carry signal for classification;
plain numeric cell values are noise and are dropped, while 4-digit years are
kept as tokens of their own.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .tables import Cell, CellKind, ExtractedTable, Row

_SPLIT_RE = re.compile(r"[^0-9a-z]+")
_DIGITS_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class TokenStream:
    """Ordered lowercase tokens owned by a table or by one of its rows."""

    table_id: str
    row_ordinal: int | None
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Vocabulary:
    """Dense token index assigned by descending corpus frequency."""

    index: dict[str, int]
    frequency: dict[str, int]

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def tokens_in_order(self) -> list[str]:
        return sorted(self.index, key=self.index.get)


def _keep_digit_token(piece: str) -> bool:
    return len(piece) == 4 and 1900 <= int(piece) <= 2100


def _split_text(text: str) -> list[str]:
    pieces = [p for p in _SPLIT_RE.split(text.lower()) if p]
    kept = []
    for piece in pieces:
        if _DIGITS_RE.fullmatch(piece) and not _keep_digit_token(piece):
            continue
        kept.append(piece)
    return kept


def _row_tokens(cells: list[Cell]) -> list[str]:
    tokens: list[str] = []
    for cell in cells:
        if cell.kind is CellKind.TEXT:
            tokens.extend(_split_text(cell.raw_text))
        elif cell.kind is CellKind.YEAR:
            tokens.append(cell.raw_text)
    return tokens


def tokenize_row(row: Row, table_id: str = "") -> TokenStream:
    """Lowercase, punctuation-split tokens of one row.

    Number and Empty cells are dropped; Year cells contribute their 4-digit
    string; bare-number pieces inside text cells are dropped unless they are
    in-range years.
    """
    return TokenStream(
        table_id=table_id,
        row_ordinal=row.ordinal,
        tokens=tuple(_row_tokens(row.unique_cells())),
    )


def tokenize_table(table: ExtractedTable) -> TokenStream:
    """All row tokens of a table concatenated in order, as one sentence."""
    tokens: list[str] = []
    for row in table.rows:
        tokens.extend(_row_tokens(row.unique_cells()))
    return TokenStream(table_id=table.table_id, row_ordinal=None, tokens=tuple(tokens))


def build_vocab(streams: list[TokenStream], min_count: int = 1) -> Vocabulary:
    """Count tokens across streams and index those with frequency >= min_count.

    Indices run densely from 0 in descending frequency order, ties broken
    lexicographically.
    """
    if not streams:
        raise ValueError("cannot build a vocabulary from zero streams")
    counts: dict[str, int] = {}
    for stream in streams:
        for token in stream.tokens:
            counts[token] = counts.get(token, 0) + 1
    retained = {t: c for t, c in counts.items() if c >= min_count}
    if not retained:
        raise ValueError(f"no token reaches min_count={min_count}")
    ordered = sorted(retained, key=lambda t: (-retained[t], t))
    return Vocabulary(
        index={token: i for i, token in enumerate(ordered)},
        frequency=retained,
    )
