"""Evaluation: classification metrics, row-similarity hit rates against a
ground truth, and ground-truth file IO.

Weighted precision/recall average per-label values weighted by true-positive
counts; labels that are never predicted correctly therefore carry zero
weight. Support-weighted versions are reported alongside for transparency.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .similarity import RowIndex, query_similar_rows, trigram_similarity
from .tables import Corpus

GroundTruthKey = tuple[str, int]
RowSimGroundTruth = dict[GroundTruthKey, set[GroundTruthKey]]


@dataclass(frozen=True)
class LabelMetrics:
    label: int
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float

    @property
    def support(self) -> int:
        return self.tp + self.fn


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    per_label: tuple[LabelMetrics, ...]
    weighted_precision: float
    weighted_recall: float
    support_weighted_precision: float
    support_weighted_recall: float


def compute_metrics(predicted: list[int], true: list[int]) -> EvalReport:
    """Accuracy percent plus per-label and weighted precision/recall."""
    if len(predicted) != len(true):
        raise ValueError(f"length mismatch: {len(predicted)} predictions, {len(true)} labels")
    if not true:
        raise ValueError("empty evaluation set")
    labels = sorted(set(true) | set(predicted))
    per_label: list[LabelMetrics] = []
    for label in labels:
        tp = sum(1 for p, t in zip(predicted, true) if p == label and t == label)
        fp = sum(1 for p, t in zip(predicted, true) if p == label and t != label)
        fn = sum(1 for p, t in zip(predicted, true) if p != label and t == label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_label.append(LabelMetrics(label, tp, fp, fn, precision, recall))

    def weighted(metric: str, weight: str) -> float:
        total = sum(getattr(m, weight) for m in per_label)
        if total == 0:
            return 0.0
        return sum(getattr(m, metric) * getattr(m, weight) for m in per_label) / total

    correct = sum(1 for p, t in zip(predicted, true) if p == t)
    return EvalReport(
        accuracy=100.0 * correct / len(true),
        per_label=tuple(per_label),
        weighted_precision=weighted("precision", "tp"),
        weighted_recall=weighted("recall", "tp"),
        support_weighted_precision=weighted("precision", "support"),
        support_weighted_recall=weighted("recall", "support"),
    )


def hit_rate(hits: int, total: int) -> float:
    """H = 100 * N_h / N_t."""
    if total <= 0:
        raise ValueError("total row count must be positive")
    if not (0 <= hits <= total):
        raise ValueError(f"hits {hits} outside [0, {total}]")
    return 100.0 * hits / total


class RowSimMethod(Enum):
    CUSTOM_EMBEDDING = "CustomEmbedding"
    PRETRAINED_EMBEDDING = "PretrainedEmbedding"
    TRIGRAM = "Trigram"


@dataclass(frozen=True)
class TableHitRate:
    table_id: str
    hits: int
    total: int

    @property
    def rate(self) -> float:
        return hit_rate(self.hits, self.total) if self.total else 0.0


@dataclass(frozen=True)
class HitRateReport:
    method: RowSimMethod
    per_table: tuple[TableHitRate, ...]

    @property
    def corpus_average(self) -> float:
        rated = [t.rate for t in self.per_table if t.total > 0]
        if not rated:
            return 0.0
        return sum(rated) / len(rated)


def evaluate_rowsim_embedding(
    method: RowSimMethod,
    row_index: RowIndex,
    ground_truth: RowSimGroundTruth,
    n: int = 5,
) -> HitRateReport:
    """Hit rates for an embedding method.

    Every indexed row of every table is queried against every other table's
    rows, the same candidate pool the trigram baseline sees; a query is a
    hit when any of its top-n results is in the row's ground-truth set.
    """
    if method is RowSimMethod.TRIGRAM:
        raise ValueError("use evaluate_rowsim_trigram for the trigram baseline")
    all_tables = sorted(row_index.tables())
    per_table: list[TableHitRate] = []
    for table_id in all_tables:
        candidates = [c for c in all_tables if c != table_id]
        hits = 0
        total = 0
        for ordinal in row_index.rows_of(table_id):
            total += 1
            if not candidates:
                continue
            truth = ground_truth.get((table_id, ordinal), set())
            results = query_similar_rows(
                row_index, row_index.vector(table_id, ordinal), n, candidates
            )
            if any((h.table_id, h.row_ordinal) in truth for h in results):
                hits += 1
        per_table.append(TableHitRate(table_id=table_id, hits=hits, total=total))
    return HitRateReport(method=method, per_table=tuple(per_table))


def evaluate_rowsim_trigram(
    corpus: Corpus,
    ground_truth: RowSimGroundTruth,
    n: int = 5,
) -> HitRateReport:
    """Hit rates for the trigram baseline.

    Rows with non-empty header text are queried against every other table's
    rows, scored by trigram similarity on header text, descending. Ties are
    broken by (table_id, ordinal) for determinism.
    """
    texts: dict[GroundTruthKey, str] = {}
    for table in corpus.tables:
        for row in table.rows:
            text = row.header_text
            if text:
                texts[(table.table_id, row.ordinal)] = text
    keys = sorted(texts)
    per_table: dict[str, list[int]] = {}
    for table in corpus.tables:
        per_table[table.table_id] = [0, 0]
    for (table_id, ordinal) in keys:
        query_text = texts[(table_id, ordinal)]
        per_table[table_id][1] += 1
        truth = ground_truth.get((table_id, ordinal), set())
        scored = [
            (-trigram_similarity(query_text, texts[k]), k)
            for k in keys
            if k[0] != table_id
        ]
        scored.sort()
        top = [k for _, k in scored[:n]]
        if any(k in truth for k in top):
            per_table[table_id][0] += 1
    return HitRateReport(
        method=RowSimMethod.TRIGRAM,
        per_table=tuple(
            TableHitRate(table_id=t, hits=h, total=q)
            for t, (h, q) in sorted(per_table.items())
        ),
    )


def save_ground_truth(truth: RowSimGroundTruth, path: str | Path) -> None:
    """Write `query_table:row -> target_table:row[,target_table:row...]` lines."""
    lines = []
    for (table_id, ordinal) in sorted(truth):
        targets = sorted(truth[(table_id, ordinal)])
        if not targets:
            continue
        joined = ",".join(f"{t}:{r}" for t, r in targets)
        lines.append(f"{table_id}:{ordinal} -> {joined}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_ref(token: str, line_no: int) -> GroundTruthKey:
    table_id, sep, ordinal = token.strip().rpartition(":")
    if not sep or not table_id or not ordinal.isdigit():
        raise ValueError(f"ground truth line {line_no}: bad row reference {token.strip()!r}")
    return table_id, int(ordinal)


def load_ground_truth(path: str | Path, corpus: Corpus | None = None) -> RowSimGroundTruth:
    """Read the ground-truth file, rejecting self references.

    When a corpus is supplied every reference must resolve to an existing
    table row.
    """
    truth: RowSimGroundTruth = {}
    row_counts = None
    if corpus is not None:
        row_counts = {t.table_id: len(t.rows) for t in corpus.tables}

    def check(key: GroundTruthKey, line_no: int) -> None:
        if row_counts is None:
            return
        table_id, ordinal = key
        if table_id not in row_counts or not (0 <= ordinal < row_counts[table_id]):
            raise ValueError(f"ground truth line {line_no}: unresolved reference {table_id}:{ordinal}")

    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        left, sep, right = line.partition("->")
        if not sep:
            raise ValueError(f"ground truth line {line_no}: missing '->'")
        query = _parse_ref(left, line_no)
        check(query, line_no)
        targets = set()
        for token in right.split(","):
            target = _parse_ref(token, line_no)
            if target == query:
                raise ValueError(f"ground truth line {line_no}: self reference {target}")
            check(target, line_no)
            targets.add(target)
        truth[query] = targets
    return truth
