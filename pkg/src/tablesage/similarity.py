"""Similarity queries: table-level KNN over probability vectors, cross-table
row similarity over row vectors, and a trigram string-similarity baseline.

All searches are brute force; corpora here are tiny and exactness against an
O(n^2) oracle is part of the contract.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

DEFAULT_TABLE_K = 5
DEFAULT_ROW_N = 5


@dataclass(frozen=True)
class NeighborHit:
    """One search result. For rows, id is "table_id:ordinal"."""

    id: str
    distance: float
    table_id: str | None = None
    row_ordinal: int | None = None


class TableIndex:
    """Immutable map of table_id to its probability vector."""

    def __init__(self, entries: dict[str, np.ndarray], k: int = DEFAULT_TABLE_K):
        if entries:
            widths = {len(v) for v in entries.values()}
            if len(widths) != 1:
                raise ValueError(f"probability vectors have mixed lengths: {sorted(widths)}")
        self.k = k
        self._ids = sorted(entries)
        self._vectors = {i: np.asarray(entries[i], dtype=np.float64) for i in self._ids}

    def __contains__(self, table_id: str) -> bool:
        return table_id in self._vectors

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def vector(self, table_id: str) -> np.ndarray:
        return self._vectors[table_id]


def _ranked(pairs: list[tuple[str, float]], limit: int) -> list[tuple[str, float]]:
    # sort by distance then id so ties are stable across runs
    return sorted(pairs, key=lambda p: (p[1], p[0]))[:limit]


def query_similar_tables(
    index: TableIndex, table_id: str, k: int | None = None
) -> list[NeighborHit]:
    """k nearest tables by Euclidean distance, never including the query."""
    if table_id not in index:
        raise KeyError(f"unknown table id: {table_id}")
    if k is None:
        k = index.k
    q = index.vector(table_id)
    pairs = [
        (other, float(np.linalg.norm(index.vector(other) - q)))
        for other in index.ids
        if other != table_id
    ]
    return [NeighborHit(id=i, distance=d, table_id=i) for i, d in _ranked(pairs, k)]


def knn_class_accuracy(index: TableIndex, labels: dict[str, int], k: int = DEFAULT_TABLE_K) -> float:
    """Leave-one-out KNN accuracy percent; vote ties go to the nearest hit's class."""
    if not index.ids:
        raise ValueError("empty index")
    missing = [i for i in index.ids if i not in labels]
    if missing:
        raise ValueError(f"unlabeled tables: {missing[:5]}")
    correct = 0
    for table_id in index.ids:
        hits = query_similar_tables(index, table_id, k)
        votes = Counter(labels[h.id] for h in hits)
        top = max(votes.values())
        tied = {c for c, n in votes.items() if n == top}
        if len(tied) == 1:
            predicted = tied.pop()
        else:
            predicted = next(labels[h.id] for h in hits if labels[h.id] in tied)
        if predicted == labels[table_id]:
            correct += 1
    return 100.0 * correct / len(index.ids)


class RowIndex:
    """Unit row vectors keyed by (table_id, row ordinal).

    Rows whose vector is absent (no in-vocabulary tokens) are simply not
    indexed.
    """

    def __init__(self, entries: dict[tuple[str, int], np.ndarray]):
        self._vectors: dict[tuple[str, int], np.ndarray] = {}
        self._by_table: dict[str, list[int]] = {}
        for (table_id, ordinal), vec in sorted(entries.items()):
            v = np.asarray(vec, dtype=np.float64)
            norm = float(np.linalg.norm(v))
            if not np.isfinite(norm) or abs(norm - 1.0) > 1e-6:
                raise ValueError(f"row vector for {table_id}:{ordinal} is not unit-norm")
            self._vectors[(table_id, ordinal)] = v
            self._by_table.setdefault(table_id, []).append(ordinal)

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._vectors

    def vector(self, table_id: str, ordinal: int) -> np.ndarray | None:
        return self._vectors.get((table_id, ordinal))

    def rows_of(self, table_id: str) -> list[int]:
        return list(self._by_table.get(table_id, []))

    def tables(self) -> list[str]:
        return sorted(self._by_table)


def query_similar_rows(
    row_index: RowIndex,
    query_vector: np.ndarray | None,
    n: int = DEFAULT_ROW_N,
    candidate_tables: list[str] | None = None,
    exclude: tuple[str, int] | None = None,
) -> list[NeighborHit]:
    """Top-n rows by Euclidean distance among the candidate tables' rows."""
    if query_vector is None:
        raise ValueError("query row has no vector (no in-vocabulary tokens)")
    if candidate_tables is None:
        candidate_tables = row_index.tables()
    unknown = [t for t in candidate_tables if t not in row_index.tables()]
    if unknown:
        raise KeyError(f"candidate tables not indexed: {unknown[:5]}")
    q = np.asarray(query_vector, dtype=np.float64)
    pairs: list[tuple[str, float]] = []
    for table_id in candidate_tables:
        for ordinal in row_index.rows_of(table_id):
            if exclude is not None and (table_id, ordinal) == exclude:
                continue
            vec = row_index.vector(table_id, ordinal)
            pairs.append((f"{table_id}:{ordinal}", float(np.linalg.norm(vec - q))))
    hits = []
    for ident, dist in _ranked(pairs, n):
        table_id, _, ordinal = ident.rpartition(":")
        hits.append(NeighborHit(id=ident, distance=dist, table_id=table_id, row_ordinal=int(ordinal)))
    return hits


_WORD_RE = re.compile(r"[0-9a-z]+")


def trigram_set(text: str) -> set[str]:
    """Padded 3-gram set: each word gets 2 leading and 1 trailing space."""
    grams: set[str] = set()
    for word in _WORD_RE.findall(text.lower()):
        padded = "  " + word + " "
        for i in range(len(padded) - 2):
            grams.add(padded[i : i + 3])
    return grams


def trigram_similarity(a: str, b: str) -> float:
    """|intersection| / |union| of trigram sets; 0 when both are empty."""
    ta, tb = trigram_set(a), trigram_set(b)
    union = ta | tb
    if not union:
        return 0.0
    return len(ta & tb) / len(union)
