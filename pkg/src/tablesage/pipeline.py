"""Pipeline stages and artifact management.

Each stage reads its inputs from files produced by earlier stages and writes
its outputs back to the workspace, so a full run is reproducible from the
config alone and any stage can be re-run in isolation.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classifier as clf
from . import reports
from .config import AppConfig
from .embeddings import (
    EmbeddingMatrix,
    EmbeddingSource,
    SkipGramConfig,
    load_pretrained,
    row_vector,
    save_word2vec_text,
    train_skipgram,
)
from .evaluation import (
    HitRateReport,
    RowSimGroundTruth,
    RowSimMethod,
    compute_metrics,
    evaluate_rowsim_embedding,
    evaluate_rowsim_trigram,
    load_ground_truth,
)
from .similarity import RowIndex, TableIndex
from .synthetic import SyntheticCorpusConfig, generate_synthetic_corpus
from .tables import (
    Cell,
    CellKind,
    ColumnHeaderInfo,
    Corpus,
    ExtractedTable,
    Row,
    TableType,
    detect_headers,
    load_corpus,
    read_manifest,
)
from .tokens import TokenStream, tokenize_row, tokenize_table
from .tsne import ProjectionPoint, project, serialize_projection


class StageError(Exception):
    """A pipeline stage cannot run; the message names the missing prerequisite."""


@dataclass(frozen=True)
class ArtifactPaths:
    workspace: Path

    @property
    def corpus_dir(self) -> Path:
        return self.workspace / "corpus"

    @property
    def manifest(self) -> Path:
        return self.corpus_dir / "manifest.csv"

    @property
    def ground_truth(self) -> Path:
        return self.corpus_dir / "ground_truth.txt"

    @property
    def corpus_json(self) -> Path:
        return self.workspace / "corpus.json"

    @property
    def embedding_file(self) -> Path:
        return self.workspace / "embedding.vec"

    @property
    def embedding_meta(self) -> Path:
        return self.workspace / "embedding_meta.json"

    @property
    def embedding_log(self) -> Path:
        return self.workspace / "embedding_log.csv"

    @property
    def model_file(self) -> Path:
        return self.workspace / "model.tsg"

    @property
    def training_log(self) -> Path:
        return self.workspace / "training_log.csv"

    @property
    def index_file(self) -> Path:
        return self.workspace / "index.json"

    @property
    def reports_dir(self) -> Path:
        return self.workspace / "reports"

    @property
    def projection_csv(self) -> Path:
        return self.reports_dir / "projection.csv"

    @property
    def projection_png(self) -> Path:
        return self.reports_dir / "projection.png"


def paths_for(config: AppConfig) -> ArtifactPaths:
    return ArtifactPaths(workspace=Path(config.workspace))


def _require(path: Path, what: str, produced_by: str) -> Path:
    if not path.exists():
        raise StageError(f"{what} not found at {path}; run `tablesage {produced_by}` first")
    return path


# ---------------------------------------------------------------- corpus IO


def save_corpus_json(corpus: Corpus, path: Path) -> None:
    tables = []
    for t in sorted(corpus.tables, key=lambda t: t.table_id):
        rows = []
        for row in t.rows:
            cells = [
                {
                    "column": c.column,
                    "raw_text": c.raw_text,
                    "kind": c.kind.value,
                    "value": c.value,
                    "span": c.span,
                }
                for c in row.unique_cells()
            ]
            rows.append({"ordinal": row.ordinal, "cells": cells})
        tables.append(
            {
                "table_id": t.table_id,
                "doc_id": t.doc_id,
                "company": t.company,
                "table_type": t.table_type.value,
                "style_ref": t.style_ref,
                "raw_fragment": t.raw_fragment,
                "rows": rows,
            }
        )
    payload = {"tables": tables, "styles": dict(sorted(corpus.styles.items()))}
    path.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def load_corpus_json(path: Path) -> Corpus:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    tables = []
    for t in payload["tables"]:
        rows = []
        for r in t["rows"]:
            cells: list[Cell] = []
            for c in r["cells"]:
                cell = Cell(
                    column=c["column"],
                    raw_text=c["raw_text"],
                    kind=CellKind(c["kind"]),
                    value=c["value"],
                    span=c["span"],
                )
                cells.extend([cell] * cell.span)
            rows.append(Row(ordinal=r["ordinal"], cells=tuple(cells)))
        tables.append(
            ExtractedTable(
                table_id=t["table_id"],
                doc_id=t["doc_id"],
                company=t["company"],
                table_type=TableType(t["table_type"]),
                rows=tuple(rows),
                raw_fragment=t["raw_fragment"],
                style_ref=t["style_ref"],
            )
        )
    return Corpus(tables=tuple(tables), styles=dict(payload["styles"]))


# ------------------------------------------------------------------ stages


def run_synth(config: AppConfig):
    paths = paths_for(config)
    corpus_config = SyntheticCorpusConfig(seed=config.seed)
    if config.corpus.companies is not None:
        corpus_config = dataclasses.replace(corpus_config, companies=config.corpus.companies)
    corpus_config = dataclasses.replace(
        corpus_config,
        replicates=config.corpus.replicates,
        include_probability=config.corpus.include_probability,
    )
    paths.workspace.mkdir(parents=True, exist_ok=True)
    return generate_synthetic_corpus(corpus_config, paths.corpus_dir)


def run_ingest(config: AppConfig, manifest: Path | None = None) -> Corpus:
    paths = paths_for(config)
    manifest_path = Path(manifest) if manifest is not None else paths.manifest
    _require(manifest_path, "corpus manifest", "synth (or pass an existing manifest)")
    corpus = load_corpus(manifest_path)
    paths.workspace.mkdir(parents=True, exist_ok=True)
    save_corpus_json(corpus, paths.corpus_json)
    return corpus


def _table_streams(corpus: Corpus) -> list[TokenStream]:
    return [tokenize_table(t) for t in sorted(corpus.tables, key=lambda t: t.table_id)]


def run_train_embedding(config: AppConfig) -> EmbeddingMatrix:
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    section = config.embedding
    if section.pretrained_path is not None:
        _, matrix = load_pretrained(section.pretrained_path)
        source = EmbeddingSource.PRETRAINED_FILE
        losses: tuple[float, ...] = ()
    else:
        sg_config = SkipGramConfig(
            dim=section.dim,
            window=section.window,
            negative_samples=section.negative_samples,
            epochs=section.epochs,
            learning_rate=section.learning_rate,
            min_count=section.min_count,
            seed=config.seed,
        )
        matrix = train_skipgram(_table_streams(corpus), sg_config)
        source = EmbeddingSource.CUSTOM_SKIP_GRAM
        losses = matrix.epoch_losses
    save_word2vec_text(matrix, paths.embedding_file)
    paths.embedding_meta.write_text(
        json.dumps({"source": source.value, "dim": matrix.dim}, sort_keys=True),
        encoding="utf-8",
    )
    reports.write_embedding_log(losses, paths.embedding_log)
    return matrix


def load_embedding_artifact(paths: ArtifactPaths) -> EmbeddingMatrix:
    _require(paths.embedding_file, "embedding file", "train-embedding")
    _, matrix = load_pretrained(paths.embedding_file)
    if paths.embedding_meta.exists():
        meta = json.loads(paths.embedding_meta.read_text(encoding="utf-8"))
        matrix = dataclasses.replace(matrix, source=EmbeddingSource(meta["source"]))
    return matrix


def run_train_classifier(config: AppConfig) -> tuple[clf.ClassifierModel, list[clf.EpochStats]]:
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    embedding = load_embedding_artifact(paths)
    section = config.classifier
    tables = sorted(corpus.tables, key=lambda t: t.table_id)
    label_map = clf.LabelMap.build(tables, include_company=section.include_company)
    train_config = clf.TrainConfig(
        seq_len=section.seq_len,
        hidden_size=section.hidden_size,
        num_layers=section.num_layers,
        batch_size=section.batch_size,
        learning_rate=section.learning_rate,
        epochs=section.epochs,
        patience=section.patience,
        train_fraction=section.train_fraction,
        seed=config.seed,
    )
    model, stats = clf.train(tables, embedding, label_map, train_config)
    clf.save_model(model, paths.model_file)
    reports.write_training_log(stats, paths.training_log)
    return model, stats


def load_model_artifact(paths: ArtifactPaths) -> clf.ClassifierModel:
    _require(paths.model_file, "classifier model", "train-classifier")
    model = clf.load_model(paths.model_file)
    model.attach_embedding(load_embedding_artifact(paths))
    return model


def run_build_index(config: AppConfig) -> TableIndex:
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    model = load_model_artifact(paths)
    vectors = {}
    for table in sorted(corpus.tables, key=lambda t: t.table_id):
        vectors[table.table_id] = clf.predict(model, table)
    payload = {
        "k": config.query.table_k,
        "vectors": {i: [repr(float(x)) for x in v] for i, v in sorted(vectors.items())},
    }
    paths.index_file.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
    return TableIndex(vectors, k=config.query.table_k)


def load_index_artifact(paths: ArtifactPaths) -> TableIndex:
    _require(paths.index_file, "table index", "build-index")
    payload = json.loads(paths.index_file.read_text(encoding="utf-8"))
    vectors = {
        i: np.array([float(x) for x in v], dtype=np.float64)
        for i, v in payload["vectors"].items()
    }
    return TableIndex(vectors, k=payload.get("k", 5))


def build_row_index(corpus: Corpus, embedding: EmbeddingMatrix) -> RowIndex:
    entries = {}
    for table in corpus.tables:
        for row in table.rows:
            vec = row_vector(tokenize_row(row, table.table_id), embedding)
            if vec is not None:
                entries[(table.table_id, row.ordinal)] = vec
    return RowIndex(entries)


def run_eval(config: AppConfig) -> dict:
    """Classification metrics on the persisted test split plus row-similarity
    hit rates; writes CSV reports and figures."""
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    model = load_model_artifact(paths)
    by_id = corpus.by_id()

    if model.split is None:
        raise StageError("model carries no train/test split record; re-run train-classifier")
    test_tables = [by_id[i] for i in model.split.test_ids]
    predicted = [int(np.argmax(clf.predict(model, t))) for t in test_tables]
    true = [model.label_map.label_of(t) for t in test_tables]
    clf_report = compute_metrics(predicted, true)

    embedding = model.embedding
    row_index = build_row_index(corpus, embedding)
    _require(paths.ground_truth, "row-similarity ground truth", "synth")
    truth: RowSimGroundTruth = load_ground_truth(paths.ground_truth, corpus)
    method = (
        RowSimMethod.PRETRAINED_EMBEDDING
        if embedding.source is EmbeddingSource.PRETRAINED_FILE
        else RowSimMethod.CUSTOM_EMBEDDING
    )
    rowsim_reports: list[HitRateReport] = [
        evaluate_rowsim_embedding(method, row_index, truth, n=config.query.row_n),
        evaluate_rowsim_trigram(corpus, truth, n=config.query.row_n),
    ]

    paths.reports_dir.mkdir(parents=True, exist_ok=True)
    reports.write_classification_report(
        clf_report, model.label_map, paths.reports_dir / "eval_classification.csv"
    )
    reports.write_rowsim_report(rowsim_reports, paths.reports_dir / "eval_rowsim.csv")
    reports.figure_label_metrics(
        clf_report, model.label_map, paths.reports_dir / "eval_classification.png"
    )
    reports.figure_rowsim(rowsim_reports, paths.reports_dir / "eval_rowsim.png")
    stats = reports.read_training_log(paths.training_log) if paths.training_log.exists() else []
    if stats:
        reports.figure_training(stats, paths.reports_dir / "training_curve.png")
    return {"classification": clf_report, "rowsim": rowsim_reports}


_TYPE_ORDER = list(TableType)


def run_project(config: AppConfig) -> list[ProjectionPoint]:
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    index = load_index_artifact(paths)
    by_id = corpus.by_id()
    entries = [
        (table_id, index.vector(table_id), _TYPE_ORDER.index(by_id[table_id].table_type))
        for table_id in index.ids
        if table_id in by_id
    ]
    points = project(
        entries,
        perplexity=config.projection.perplexity,
        iterations=config.projection.iterations,
        seed=config.seed,
    )
    paths.reports_dir.mkdir(parents=True, exist_ok=True)
    paths.projection_csv.write_text(serialize_projection(points), encoding="utf-8")
    type_names = [t.value for t in _TYPE_ORDER]
    reports.figure_projection(points, type_names, paths.projection_png)
    return points


# ------------------------------------------------------------- engine state


@dataclass(frozen=True)
class EngineState:
    """Everything the HTTP service and query verbs read. Immutable once built."""

    corpus: Corpus
    headers: dict[str, ColumnHeaderInfo]
    embedding: EmbeddingMatrix | None
    model: clf.ClassifierModel | None
    index: TableIndex | None
    row_index: RowIndex | None
    projection_rows: tuple[str, ...]
    default_k: int
    default_n: int


def load_engine(config: AppConfig) -> EngineState:
    """Build an engine from whatever artifacts exist; similarity endpoints
    report unavailability when the model or index is missing."""
    paths = paths_for(config)
    _require(paths.corpus_json, "ingested corpus", "ingest")
    corpus = load_corpus_json(paths.corpus_json)
    headers = {t.table_id: detect_headers(t) for t in corpus.tables}

    embedding = model = index = row_index = None
    if paths.embedding_file.exists():
        embedding = load_embedding_artifact(paths)
        row_index = build_row_index(corpus, embedding)
    if paths.model_file.exists() and embedding is not None:
        model = load_model_artifact(paths)
    if paths.index_file.exists():
        index = load_index_artifact(paths)

    projection_rows: tuple[str, ...] = ()
    if paths.projection_csv.exists():
        projection_rows = tuple(
            line
            for line in paths.projection_csv.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
    return EngineState(
        corpus=corpus,
        headers=headers,
        embedding=embedding,
        model=model,
        index=index,
        row_index=row_index,
        projection_rows=projection_rows,
        default_k=config.query.table_k,
        default_n=config.query.row_n,
    )
