"""Command-line pipeline driver.

Every verb honors --config / --seed / --out; flags override config file
values, which override built-in defaults. Stages fail fast when a
prerequisite artifact is missing, naming the verb that produces it.
"""

from __future__ import annotations

import os
from pathlib import Path

import click

from . import pipeline
from .config import DEFAULT_ADDR, AppConfig, ConfigError, apply_overrides, load_config
from .filters import FilterParseError
from .pipeline import StageError
from .similarity import query_similar_rows, query_similar_tables
from .tables import IngestError, ManifestError


def _load(config_path: str | None, seed: int | None, out: str | None) -> AppConfig:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    return apply_overrides(config, seed=seed, workspace=out)


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML config file.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the seed.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Workspace directory for artifacts.")(fn)
    return fn


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (StageError, ManifestError, IngestError, FilterParseError, ValueError, KeyError) as exc:
        message = exc.args[0] if exc.args else str(exc)
        raise click.ClickException(str(message)) from exc


@click.group()
def main():
    """Table similarity engine: pipeline stages, queries, and the service."""


@main.command()
@common_options
def synth(config_path, seed, out):
    """Generate the synthetic corpus, manifest, and ground truth."""
    config = _load(config_path, seed, out)
    result = _run(pipeline.run_synth, config)
    click.echo(f"wrote {len(result.table_ids)} tables to {result.corpus_dir}")


@main.command()
@click.option("--manifest", type=click.Path(), default=None,
              help="Manifest to ingest (defaults to the synth output).")
@common_options
def ingest(manifest, config_path, seed, out):
    """Parse manifest-listed documents into the corpus artifact."""
    config = _load(config_path, seed, out)
    corpus = _run(pipeline.run_ingest, config, Path(manifest) if manifest else None)
    click.echo(f"ingested {len(corpus.tables)} tables into {pipeline.paths_for(config).corpus_json}")


@main.command("train-embedding")
@common_options
def train_embedding(config_path, seed, out):
    """Train the skip-gram embedding (or import a pretrained file)."""
    config = _load(config_path, seed, out)
    matrix = _run(pipeline.run_train_embedding, config)
    click.echo(
        f"embedding ready: {len(matrix.vocab)} tokens, dim {matrix.dim}, "
        f"source {matrix.source.value}"
    )


@main.command("train-classifier")
@common_options
def train_classifier(config_path, seed, out):
    """Train the LSTM classifier and persist the model."""
    config = _load(config_path, seed, out)
    model, stats = _run(pipeline.run_train_classifier, config)
    last = stats[-1]
    click.echo(
        f"model saved after {len(stats)} epochs; "
        f"final test accuracy {last.test_accuracy:.4f}"
    )


@main.command("build-index")
@common_options
def build_index(config_path, seed, out):
    """Record per-table probability vectors for similarity queries."""
    config = _load(config_path, seed, out)
    index = _run(pipeline.run_build_index, config)
    click.echo(f"indexed {len(index)} tables")


@main.command()
@common_options
def eval(config_path, seed, out):
    """Classification metrics and row-similarity hit rates, with figures."""
    config = _load(config_path, seed, out)
    results = _run(pipeline.run_eval, config)
    report = results["classification"]
    click.echo(
        f"classification: accuracy {report.accuracy:.2f}% "
        f"precision {report.weighted_precision:.4f} recall {report.weighted_recall:.4f}"
    )
    for rowsim in results["rowsim"]:
        click.echo(f"rowsim {rowsim.method.value}: average hit rate {rowsim.corpus_average:.2f}%")
    click.echo(f"reports written to {pipeline.paths_for(config).reports_dir}")


@main.command()
@common_options
def project(config_path, seed, out):
    """Export the 2-d t-SNE projection and its scatter figure."""
    config = _load(config_path, seed, out)
    points = _run(pipeline.run_project, config)
    paths = pipeline.paths_for(config)
    click.echo(f"projected {len(points)} tables to {paths.projection_csv}")


@main.group()
def query():
    """Similarity queries against the built artifacts."""


@query.command("table")
@click.argument("table_id")
@click.option("--k", type=int, default=None, help="Number of neighbors.")
@common_options
def query_table(table_id, k, config_path, seed, out):
    """Top-k most similar tables."""
    config = _load(config_path, seed, out)
    state = _run(pipeline.load_engine, config)
    if state.index is None:
        raise click.ClickException("table index not built; run `tablesage build-index` first")
    hits = _run(query_similar_tables, state.index, table_id, k or state.default_k)
    for hit in hits:
        click.echo(f"{hit.id} {hit.distance:.6f}")


@query.command("row")
@click.argument("table_id")
@click.argument("ordinal", type=int)
@click.option("--n", type=int, default=None, help="Number of similar rows.")
@common_options
def query_row(table_id, ordinal, n, config_path, seed, out):
    """Top-n similar rows across the table's neighbor tables."""
    config = _load(config_path, seed, out)
    state = _run(pipeline.load_engine, config)
    if state.index is None or state.row_index is None:
        raise click.ClickException("similarity index not built; run `tablesage build-index` first")
    vector = state.row_index.vector(table_id, ordinal)
    if vector is None:
        raise click.ClickException(f"row {table_id}:{ordinal} has no in-vocabulary tokens")
    neighbors = _run(query_similar_tables, state.index, table_id, state.default_k)
    candidates = [h.id for h in neighbors if h.id in state.row_index.tables()]
    hits = _run(query_similar_rows, state.row_index, vector, n or state.default_n, candidates)
    for hit in hits:
        click.echo(f"{hit.table_id}:{hit.row_ordinal} {hit.distance:.6f}")


@main.command("filter")
@click.argument("table_id")
@click.argument("expression")
@common_options
def filter_cmd(table_id, expression, config_path, seed, out):
    """Evaluate a gt/lt/year filter over one table."""
    from .filters import apply_filter, combine_highlights, parse_filter, serialize_highlights

    config = _load(config_path, seed, out)
    state = _run(pipeline.load_engine, config)
    table = state.corpus.by_id().get(table_id)
    if table is None:
        raise click.ClickException(f"unknown table id: {table_id}")
    expr = _run(parse_filter, expression)
    result = apply_filter(expr, table, state.headers[table_id])
    click.echo(f"matched_rows {','.join(map(str, result.matched_rows)) or '-'}")
    click.echo(f"year_columns {','.join(map(str, result.year_columns)) or '-'}")
    if result.year_missing:
        click.echo("year_missing true")
    for triple in serialize_highlights(combine_highlights(table, result, expr)):
        click.echo(triple)


@main.command()
@click.option("--addr", default=None, help="host:port to listen on.")
@common_options
def serve(addr, config_path, seed, out):
    """Serve the read-only HTTP API over the built artifacts."""
    import uvicorn

    from .service import build_app

    config = _load(config_path, seed, out)
    state = _run(pipeline.load_engine, config)
    app = build_app(state)
    chosen = addr or os.environ.get("TABLESAGE_ADDR") or config.addr or DEFAULT_ADDR
    host, _, port = chosen.partition(":")
    if not port.isdigit():
        raise click.ClickException(f"bad address {chosen!r}; expected host:port")
    click.echo(f"serving on {host}:{port}")
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
