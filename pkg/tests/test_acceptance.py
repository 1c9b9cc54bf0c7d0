"""Acceptance gates for the whole engine, one test per gate.

Each test prints a single PASS/FAIL verdict line (echoed again after the
pytest summary, see conftest). Two session fixtures amortize the heavy
work: one full pipeline run on the default 80-table corpus, and a second
identical run used only by the determinism gate. A third fixture trains
the type-level classifier variant whose probability vectors feed the
projection-separation gate.
"""

import hashlib
import time
from types import SimpleNamespace

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from tablesage import pipeline
from tablesage.classifier import LabelMap, TrainConfig, predict, train
from tablesage.config import AppConfig
from tablesage.filters import FilterExpr, apply_filter, parse_filter, unparse
from tablesage.lstm import (
    batch_loss,
    finite_difference_grads,
    init_params,
    loss_and_grads,
    max_relative_error,
)
from tablesage.similarity import (
    RowIndex,
    TableIndex,
    knn_class_accuracy,
    query_similar_rows,
    query_similar_tables,
    trigram_similarity,
)
from tablesage.synthetic import SyntheticCorpusConfig, generate_synthetic_corpus
from tablesage.tables import CellKind, TableType, detect_headers, load_corpus, parse_table
from tablesage.tsne import project


def verdict(gate: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {gate}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def run_pipeline(workspace) -> SimpleNamespace:
    config = AppConfig(workspace=workspace)
    pipeline.run_synth(config)
    pipeline.run_ingest(config)
    pipeline.run_train_embedding(config)
    started = time.perf_counter()
    pipeline.run_train_classifier(config)
    train_seconds = time.perf_counter() - started
    pipeline.run_build_index(config)
    eval_results = pipeline.run_eval(config)
    pipeline.run_project(config)
    paths = pipeline.paths_for(config)
    return SimpleNamespace(
        config=config,
        paths=paths,
        corpus=pipeline.load_corpus_json(paths.corpus_json),
        model=pipeline.load_model_artifact(paths),
        index=pipeline.load_index_artifact(paths),
        eval_results=eval_results,
        train_seconds=train_seconds,
    )


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("acceptance") / "ws")


@pytest.fixture(scope="session")
def second_run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("acceptance_rerun") / "ws")


@pytest.fixture(scope="session")
def type_level_vectors(pipeline_run):
    """Probability vectors from a classifier over type labels alone.

    The default model separates (company, type) pairs, so its probability
    space clusters by company as much as by statement type; the type-level
    variant is the one whose geometry a type-labeled projection measures.
    """
    corpus = pipeline_run.corpus
    embedding = pipeline.load_embedding_artifact(pipeline_run.paths)
    label_map = LabelMap.build(corpus.tables, include_company=False)
    section = pipeline_run.config.classifier
    model, _ = train(
        corpus.tables,
        embedding,
        label_map,
        TrainConfig(
            seq_len=section.seq_len,
            hidden_size=section.hidden_size,
            num_layers=section.num_layers,
            batch_size=section.batch_size,
            learning_rate=section.learning_rate,
            epochs=section.epochs,
            patience=section.patience,
            seed=pipeline_run.config.seed,
        ),
    )
    return [
        (t.table_id, predict(model, t), label_map.label_of(t))
        for t in corpus.tables
    ]


def test_gradient_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    started = time.perf_counter()
    for _ in range(20):
        classes = int(rng.integers(2, 7))
        hidden = int(rng.choice([3, 8]))
        seq_len = int(rng.choice([4, 10]))
        params = init_params(rng, input_dim=3, hidden_size=hidden, num_classes=classes)
        # the dense head initializes to zero; randomize it so gradient flow
        # reaches every LSTM layer
        params["dense.w"] = rng.normal(scale=0.4, size=params["dense.w"].shape)
        params["dense.b"] = rng.normal(scale=0.4, size=params["dense.b"].shape)
        x = rng.normal(size=(2, seq_len, 3))
        labels = rng.integers(0, classes, size=2)
        _, analytic = loss_and_grads(params, x, labels)
        numeric = finite_difference_grads(
            lambda p: batch_loss(p, x, labels), params, step=1e-5
        )
        worst = max(worst, max_relative_error(analytic, numeric))
    elapsed = time.perf_counter() - started
    verdict(
        "gradient-oracle",
        worst < 1e-4 and elapsed < 60.0,
        f"max relative error {worst:.2e} over 20 models in {elapsed:.1f}s",
    )


def test_synthetic_classification(pipeline_run):
    report = pipeline_run.eval_results["classification"]
    ok = (
        report.accuracy >= 90.0
        and report.weighted_precision >= 0.9
        and report.weighted_recall >= 0.9
        and pipeline_run.train_seconds < 600.0
    )
    verdict(
        "synthetic-classification",
        ok,
        f"accuracy {report.accuracy:.2f}% precision {report.weighted_precision:.3f} "
        f"recall {report.weighted_recall:.3f} (trained in {pipeline_run.train_seconds:.0f}s)",
    )


def test_knn_analog(pipeline_run):
    by_id = pipeline_run.corpus.by_id()
    labels = {
        table_id: pipeline_run.model.label_map.label_of(by_id[table_id])
        for table_id in pipeline_run.index.ids
    }
    accuracy = knn_class_accuracy(pipeline_run.index, labels, k=5)
    verdict("knn-analog", accuracy >= 85.0, f"leave-one-out accuracy {accuracy:.2f}%")


def test_rowsim_method_ordering(pipeline_run):
    emb, tri = pipeline_run.eval_results["rowsim"]
    n_tables = len(pipeline_run.corpus.tables)
    per_table_complete = (
        len(emb.per_table) == n_tables and len(tri.per_table) == n_tables
    )
    report_csv = (pipeline_run.paths.reports_dir / "eval_rowsim.csv").read_text(
        encoding="utf-8"
    )
    ok = (
        emb.corpus_average > tri.corpus_average
        and per_table_complete
        and report_csv.count("\n") >= 2 * n_tables
    )
    verdict(
        "rowsim-ordering",
        ok,
        f"{emb.method.value} {emb.corpus_average:.2f}% > {tri.method.value} "
        f"{tri.corpus_average:.2f}% ({n_tables} tables each)",
    )


def reference_trigram(a: str, b: str) -> float:
    """Independent reimplementation used only as an oracle."""
    import re as _re

    def grams(text: str) -> set:
        out = set()
        for word in _re.findall(r"[0-9a-z]+", text.lower()):
            padded = f"  {word} "
            out.update(padded[i : i + 3] for i in range(len(padded) - 2))
        return out

    ga, gb = grams(a), grams(b)
    if not (ga | gb):
        return 0.0
    return len(ga & gb) / len(ga | gb)


def test_trigram_reference_oracle():
    assert trigram_similarity("word", "word") == 1.0
    assert trigram_similarity("", "x") == 0.0
    alphabet = "abcdefghij XYZ012,.-()%$ \t"
    rng = np.random.default_rng(13)
    checked = 0
    for _ in range(100):
        a = "".join(rng.choice(list(alphabet), size=int(rng.integers(0, 30))))
        b = "".join(rng.choice(list(alphabet), size=int(rng.integers(0, 30))))
        assert trigram_similarity(a, b) == reference_trigram(a, b), (a, b)
        checked += 1
    verdict(
        "trigram-oracle",
        checked == 100,
        f"{checked} random pairs plus fixed cases match the reference exactly",
    )


def test_bruteforce_neighbor_equivalence():
    rng = np.random.default_rng(17)
    # table queries: 200 vectors, a few duplicated to force distance ties
    vectors = {f"tbl{i:03d}": rng.normal(size=7) for i in range(200)}
    vectors["tbl033"] = vectors["tbl007"].copy()
    vectors["tbl150"] = vectors["tbl007"].copy()
    index = TableIndex(vectors, k=5)
    for query_id in index.ids:
        q = vectors[query_id]
        expected = sorted(
            (float(np.linalg.norm(vectors[o] - q)), o)
            for o in vectors
            if o != query_id
        )[:5]
        got = [(h.distance, h.id) for h in query_similar_tables(index, query_id, 5)]
        assert got == expected, query_id

    # row queries: 20 tables x 10 rows (unit vectors), candidate subsets included
    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    entries = {
        (f"t{i}", j): unit(rng.normal(size=6)) for i in range(20) for j in range(10)
    }
    row_index = RowIndex(entries)
    tables = row_index.tables()
    for trial in range(30):
        query = rng.normal(size=6)
        size = int(rng.integers(1, len(tables) + 1))
        candidates = sorted(rng.choice(tables, size=size, replace=False))
        expected = sorted(
            (float(np.linalg.norm(vec - query)), f"{tid}:{ordinal}")
            for (tid, ordinal), vec in entries.items()
            if tid in set(candidates)
        )[:5]
        got = [
            (h.distance, h.id)
            for h in query_similar_rows(row_index, query, 5, list(candidates))
        ]
        assert got == expected, trial
    verdict(
        "bruteforce-equivalence",
        True,
        "table and row queries equal the quadratic oracle on 200-item corpora",
    )


def random_expression(rng) -> FilterExpr:
    kind = rng.integers(0, 7)  # nonempty subset of {gt, lt, year}
    want_gt = kind in (0, 3, 5, 6)
    want_lt = kind in (1, 3, 4, 6)
    want_year = kind in (2, 4, 5, 6)

    def number() -> float:
        style = rng.integers(0, 3)
        if style == 0:
            return float(rng.integers(-10**6, 10**6))
        if style == 1:
            return round(float(rng.uniform(-10_000, 10_000)), int(rng.integers(1, 5)))
        return float(rng.uniform(-1e8, 1e8))

    gt = lt = None
    if want_gt and want_lt:
        a, b = number(), number()
        while a == b:
            b = number()
        gt, lt = min(a, b), max(a, b)
    elif want_gt:
        gt = number()
    elif want_lt:
        lt = number()
    year = int(rng.integers(1000, 10000)) if want_year else None
    return FilterExpr(greater_than=gt, less_than=lt, year=year)


def scan_oracle(expr, table, headers):
    matched = []
    if expr.greater_than is not None or expr.less_than is not None:
        for row in table.rows:
            for cell in row.unique_cells():
                if cell.kind is not CellKind.NUMBER:
                    continue
                if expr.greater_than is not None and not (cell.value > expr.greater_than):
                    continue
                if expr.less_than is not None and not (cell.value < expr.less_than):
                    continue
                matched.append(row.ordinal)
                break
    year_cols = []
    missing = False
    if expr.year is not None:
        year_cols = sorted(
            col for col, year in headers.year_columns.items() if year == expr.year
        )
        missing = not year_cols
    return tuple(matched), tuple(year_cols), missing


def random_html_table(rng, ident: int):
    cols = int(rng.integers(2, 5))
    rows = []
    if rng.random() < 0.7:
        cells = ["<td></td>"] + [f"<td>{2013 + c}</td>" for c in range(cols - 1)]
        rows.append("<tr>" + "".join(cells) + "</tr>")
    for _ in range(int(rng.integers(3, 9))):
        cells = [f"<td>line item {int(rng.integers(0, 50))}</td>"]
        for _ in range(cols - 1):
            style = rng.integers(0, 5)
            if style == 0:
                cells.append("<td></td>")
            elif style == 1:
                cells.append(f"<td>({int(rng.integers(1, 99999)):,})</td>")
            elif style == 2:
                cells.append(f"<td>{float(rng.uniform(-5000, 5000)):.2f}</td>")
            elif style == 3:
                cells.append("<td>n/a</td>")
            else:
                cells.append(f"<td>{int(rng.integers(-99999, 99999)):,}</td>")
        rows.append("<tr>" + "".join(cells) + "</tr>")
    html = "<table>" + "".join(rows) + "</table>"
    return parse_table(html, f"rand{ident}", "Rand Co", TableType.PROFIT_OR_LOSS)


def test_filter_correctness(tmp_path_factory):
    rng = np.random.default_rng(19)

    round_trips = 0
    for _ in range(1000):
        expr = random_expression(rng)
        assert parse_filter(unparse(expr)) == expr, unparse(expr)
        round_trips += 1

    out = tmp_path_factory.mktemp("filter_oracle")
    result = generate_synthetic_corpus(SyntheticCorpusConfig(seed=99), out)
    corpus = load_corpus(result.manifest_path)
    tables = list(corpus.tables) + [random_html_table(rng, i) for i in range(20)]
    assert len(tables) == 100
    scans = 0
    for table in tables:
        headers = detect_headers(table)
        for _ in range(10):
            expr = random_expression(rng)
            got = apply_filter(expr, table, headers)
            assert (got.matched_rows, got.year_columns, got.year_missing) == scan_oracle(
                expr, table, headers
            ), (table.table_id, unparse(expr))
            scans += 1

    assert parse_filter("gt 20") == FilterExpr(greater_than=20.0)
    assert parse_filter("gt 20 and lt 500") == FilterExpr(
        greater_than=20.0, less_than=500.0
    )
    assert parse_filter("gt 50 and lt 1500 and year 2016") == FilterExpr(
        greater_than=50.0, less_than=1500.0, year=2016
    )
    verdict(
        "filter-correctness",
        True,
        f"{round_trips} round-trips, {scans} scans over 100 tables, 3 documented queries",
    )


def test_probability_normalization(pipeline_run):
    worst = 0.0
    for table in pipeline_run.corpus.tables:
        probs = predict(pipeline_run.model, table)
        assert np.all(probs >= 0.0), table.table_id
        worst = max(worst, abs(float(probs.sum()) - 1.0))
    ok = worst <= 1e-9
    verdict(
        "probability-normalization",
        ok,
        f"max |sum - 1| = {worst:.2e} over {len(pipeline_run.corpus.tables)} tables",
    )


def mean_silhouette(coords: np.ndarray, labels: list[int]) -> float:
    dists = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    scores = []
    for i in range(len(coords)):
        same = [j for j in range(len(coords)) if j != i and labels[j] == labels[i]]
        a = float(dists[i, same].mean())
        b = min(
            float(dists[i, [j for j in range(len(coords)) if labels[j] == lab]].mean())
            for lab in set(labels)
            if lab != labels[i]
        )
        scores.append((b - a) / max(a, b))
    return float(np.mean(scores))


def test_tsne_separation(type_level_vectors):
    points = project(type_level_vectors, perplexity=20.0, iterations=1000, seed=42)
    coords = np.array([(p.x, p.y) for p in points])
    labels = [p.label_id for p in points]
    silhouette = mean_silhouette(coords, labels)

    dists = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    np.fill_diagonal(dists, np.inf)
    nearest = np.argmin(dists, axis=1)
    purity = 100.0 * float(
        np.mean([labels[i] == labels[j] for i, j in enumerate(nearest)])
    )
    ok = silhouette > 0.3 and purity > 90.0
    verdict(
        "tsne-separation",
        ok,
        f"silhouette {silhouette:.3f}, nearest-neighbor purity {purity:.1f}% "
        f"({len(set(labels))} type labels)",
    )


def tree_digest(root) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_pipeline_determinism(pipeline_run, second_run):
    first = tree_digest(pipeline_run.config.workspace)
    second = tree_digest(second_run.config.workspace)
    assert set(first) == set(second), set(first) ^ set(second)
    differing = sorted(name for name in first if first[name] != second[name])
    key_artifacts = {"model.tsg", "embedding.vec", "index.json"} | {
        name for name in first if name.startswith("reports/")
    }
    assert key_artifacts <= set(first)
    verdict(
        "determinism",
        not differing,
        f"two seed-{pipeline_run.config.seed} runs byte-identical "
        f"across {len(first)} artifacts"
        + (f"; differing: {differing[:5]}" if differing else ""),
    )
