"""Tests for the synthetic corpus generator."""

import re
from collections import defaultdict

import pytest

from tablesage.evaluation import load_ground_truth
from tablesage.synthetic import (
    DEFAULT_COMPANIES,
    SyntheticCorpusConfig,
    generate_synthetic_corpus,
)
from tablesage.tables import CellKind, TableType, detect_headers, load_corpus
from tablesage.tokens import tokenize_table

YEAR_RE = re.compile(r"(19|20)\d\d")


@pytest.fixture(scope="module")
def corpus_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    result = generate_synthetic_corpus(SyntheticCorpusConfig(), out)
    return result, load_corpus(result.manifest_path)


class TestShape:
    def test_table_count_is_companies_by_types_by_replicates(self, corpus_bundle):
        result, corpus = corpus_bundle
        assert len(result.table_ids) == 5 * 4 * 4
        assert len(corpus.tables) == 80

    def test_every_company_and_type_combination_present(self, corpus_bundle):
        _, corpus = corpus_bundle
        combos = {(t.company, t.table_type) for t in corpus.tables}
        assert len(combos) == len(DEFAULT_COMPANIES) * len(TableType)

    def test_table_ids_unique(self, corpus_bundle):
        result, _ = corpus_bundle
        assert len(set(result.table_ids)) == len(result.table_ids)

    def test_config_rejects_degenerate_values(self):
        with pytest.raises(ValueError):
            SyntheticCorpusConfig(companies=("Solo Pty",))
        with pytest.raises(ValueError):
            SyntheticCorpusConfig(replicates=0)
        with pytest.raises(ValueError):
            SyntheticCorpusConfig(include_probability=0.0)
        with pytest.raises(ValueError):
            SyntheticCorpusConfig(late_include_probability=1.5)
        with pytest.raises(ValueError):
            SyntheticCorpusConfig(stable_prefix_tokens=-1)


class TestParsability:
    def test_every_table_has_year_columns(self, corpus_bundle):
        _, corpus = corpus_bundle
        for table in corpus.tables:
            headers = detect_headers(table)
            assert headers.year_columns, table.table_id

    def test_every_table_has_minimum_data_rows(self, corpus_bundle):
        _, corpus = corpus_bundle
        for table in corpus.tables:
            data_rows = [
                r for r in table.rows
                if any(c.kind is CellKind.NUMBER for c in r.cells)
            ]
            assert len(data_rows) >= 4, table.table_id

    def test_years_advance_with_replicate(self, corpus_bundle):
        _, corpus = corpus_bundle
        by_id = corpus.by_id()
        t0 = detect_headers(by_id["acme_profitloss_r0"])
        t3 = detect_headers(by_id["acme_profitloss_r3"])
        assert max(t0.year_columns.values()) + 3 == max(t3.year_columns.values())


class TestDeterminism:
    def test_same_seed_regenerates_identical_files(self, tmp_path):
        a = generate_synthetic_corpus(SyntheticCorpusConfig(), tmp_path / "a")
        b = generate_synthetic_corpus(SyntheticCorpusConfig(), tmp_path / "b")
        files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        files_b = sorted(p.name for p in (tmp_path / "b").iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_different_seed_changes_content(self, tmp_path):
        a = generate_synthetic_corpus(SyntheticCorpusConfig(seed=42), tmp_path / "a")
        b = generate_synthetic_corpus(SyntheticCorpusConfig(seed=43), tmp_path / "b")
        same = all(
            (tmp_path / "a" / p.name).read_bytes() == (tmp_path / "b" / p.name).read_bytes()
            for p in sorted((tmp_path / "a").iterdir())
            if (tmp_path / "b" / p.name).exists()
        )
        assert not same


class TestReplicateWording:
    def test_leading_window_is_stable_within_class(self, corpus_bundle):
        # replicate reports of one company keep their opening lines
        # word-for-word; only the year header changes
        _, corpus = corpus_bundle
        windows = defaultdict(set)
        for table in corpus.tables:
            tokens = tokenize_table(table).tokens[:40]
            masked = tuple("<year>" if YEAR_RE.fullmatch(tok) else tok for tok in tokens)
            windows[(table.company, table.table_type)].add(masked)
        for key, forms in windows.items():
            assert len(forms) == 1, key

    def test_late_rows_vary_across_replicates(self, corpus_bundle):
        # the sparse disclosure region must actually differ between
        # replicates somewhere, or the corpus degenerates to copies
        _, corpus = corpus_bundle
        row_sets = defaultdict(set)
        for table in corpus.tables:
            texts = tuple(r.header_text for r in table.rows)
            row_sets[(table.company, table.table_type)].add(texts)
        varied = sum(1 for forms in row_sets.values() if len(forms) > 1)
        assert varied > len(row_sets) // 2

    def test_companies_word_shared_line_items_differently(self, corpus_bundle):
        _, corpus = corpus_bundle
        texts_by_company = defaultdict(set)
        for table in corpus.tables:
            for row in table.rows:
                if row.header_text:
                    texts_by_company[table.company].add(row.header_text)
        companies = sorted(texts_by_company)
        overlaps = [
            len(texts_by_company[a] & texts_by_company[b])
            for i, a in enumerate(companies)
            for b in companies[i + 1:]
        ]
        # some overlap is expected (identical synonym draws), total overlap is not
        assert all(o < len(texts_by_company[a]) for o, a in zip(overlaps, companies))


class TestGroundTruth:
    def test_ground_truth_file_round_trips(self, corpus_bundle):
        result, corpus = corpus_bundle
        loaded = load_ground_truth(result.ground_truth_path, corpus)
        assert loaded == result.ground_truth

    def test_links_are_symmetric(self, corpus_bundle):
        result, _ = corpus_bundle
        truth = result.ground_truth
        for query, targets in truth.items():
            for target in targets:
                assert query in truth.get(target, set()), (query, target)

    def test_no_self_links(self, corpus_bundle):
        result, _ = corpus_bundle
        for query, targets in result.ground_truth.items():
            assert query not in targets

    def test_same_template_rows_are_linked(self, corpus_bundle):
        result, corpus = corpus_bundle
        # within profit-or-loss tables, "revenue" occurs only in the revenue
        # line's synonyms, so those rows must form one linked group
        queries = [
            (t.table_id, r.ordinal)
            for t in corpus.tables
            if t.table_type is TableType.PROFIT_OR_LOSS
            for r in t.rows
            if "revenue" in r.header_text
        ]
        assert len(queries) > 10
        for query in queries[1:]:
            assert query in result.ground_truth[queries[0]]

    def test_year_header_rows_linked_across_statement_types(self, corpus_bundle):
        result, corpus = corpus_bundle
        partners = result.ground_truth[(corpus.tables[0].table_id, 1)]
        partner_types = {corpus.by_id()[tid].table_type for tid, _ in partners}
        assert partner_types == set(TableType)
        assert all(ordinal == 1 for _, ordinal in partners)

    def test_cross_statement_concept_rows_linked(self, corpus_bundle):
        result, corpus = corpus_bundle
        # a dividends row in an equity statement links to dividends-paid
        # rows in cash-flow statements when both appear
        linked_types = set()
        for (table_id, ordinal), targets in result.ground_truth.items():
            table = corpus.by_id()[table_id]
            if table.table_type is not TableType.CHANGES_IN_EQUITY:
                continue
            text = table.rows[ordinal].header_text
            if "dividend" not in text and "distribution" not in text:
                continue
            for target_id, _ in targets:
                linked_types.add(corpus.by_id()[target_id].table_type)
        assert TableType.CASH_FLOWS in linked_types
