"""Tests for the filter language: parsing, evaluation and highlight classes."""

import pytest
from hypothesis import given, strategies as st

from tablesage.filters import (
    CellHighlight,
    FilterExpr,
    FilterParseError,
    FilterResult,
    HighlightClass,
    apply_filter,
    combine_highlights,
    parse_filter,
    serialize_highlights,
    unparse,
)
from tablesage.tables import CellKind, TableType, detect_headers, parse_table


def table_of(fragment):
    return parse_table(fragment, "t1", "Acme", TableType.PROFIT_OR_LOSS)


SAMPLE = table_of(
    "<table>"
    '<tr><td colspan="3">Acme statement</td></tr>'
    "<tr><td></td><td>2015</td><td>2016</td></tr>"
    "<tr><td>Revenue</td><td>100</td><td>1200</td></tr>"
    "<tr><td>Costs</td><td>(40)</td><td>30</td></tr>"
    "<tr><td>Margin</td><td>15%</td><td></td></tr>"
    "</table>"
)
SAMPLE_HEADERS = detect_headers(SAMPLE)


class TestParse:
    def test_single_gt(self):
        assert parse_filter("gt 20") == FilterExpr(greater_than=20.0)

    def test_range(self):
        assert parse_filter("gt 20 and lt 500") == FilterExpr(
            greater_than=20.0, less_than=500.0
        )

    def test_full_conjunction(self):
        assert parse_filter("gt 50 and lt 1500 and year 2016") == FilterExpr(
            greater_than=50.0, less_than=1500.0, year=2016
        )

    def test_year_only(self):
        assert parse_filter("year 2015") == FilterExpr(year=2015)

    def test_case_insensitive_keywords(self):
        assert parse_filter("GT 5 AND Year 2016") == FilterExpr(greater_than=5.0, year=2016)

    def test_signed_and_decimal_values(self):
        assert parse_filter("gt -12.5") == FilterExpr(greater_than=-12.5)
        assert parse_filter("lt +3.25") == FilterExpr(less_than=3.25)

    def test_term_order_free(self):
        assert parse_filter("year 2016 and gt 1") == parse_filter("gt 1 and year 2016")

    def test_extra_whitespace_tolerated(self):
        assert parse_filter("  gt   7  ") == FilterExpr(greater_than=7.0)

    @pytest.mark.parametrize(
        "text,position",
        [
            ("lt abc", 4),  # malformed value at its own position
            ("gt", 3),  # missing value right after the keyword
            ("banana 3", 1),  # unknown keyword at word start
            ("gt 5 lt 9", 6),  # missing 'and' flagged at the next word
            ("gt 5 and", 9),  # dangling 'and'
            ("gt 5 and gt 6", 10),  # duplicate keyword at its position
            ("year 20x6", 6),  # malformed year at the value
            ("year 123", 6),  # too-short year
            ("lt 5 and gt 9", 10),  # inverted bounds flagged at the later term
            ("", 1),  # empty text
            ("   ", 1),  # blank text
        ],
    )
    def test_error_positions_one_based(self, text, position):
        with pytest.raises(FilterParseError) as err:
            parse_filter(text)
        assert err.value.position == position

    def test_inverted_bounds_message(self):
        with pytest.raises(FilterParseError, match="must be below"):
            parse_filter("gt 10 and lt 5")

    def test_equal_bounds_rejected(self):
        with pytest.raises(FilterParseError):
            parse_filter("gt 5 and lt 5")

    def test_number_not_accepted_for_year(self):
        with pytest.raises(FilterParseError):
            parse_filter("year 2016.0")


class TestExprModel:
    def test_empty_expr_rejected(self):
        with pytest.raises(ValueError):
            FilterExpr()

    def test_inverted_constructor_rejected(self):
        with pytest.raises(ValueError):
            FilterExpr(greater_than=5.0, less_than=5.0)

    def test_strict_inequalities(self):
        expr = FilterExpr(greater_than=10.0, less_than=20.0)
        assert not expr.matches_value(10.0)
        assert not expr.matches_value(20.0)
        assert expr.matches_value(10.0001)
        assert expr.matches_value(19.9999)

    def test_has_range(self):
        assert FilterExpr(greater_than=1.0).has_range
        assert FilterExpr(less_than=1.0).has_range
        assert not FilterExpr(year=2016).has_range


class TestUnparse:
    def test_canonical_text(self):
        expr = FilterExpr(greater_than=20.0, less_than=500.0, year=2016)
        assert unparse(expr) == "gt 20 and lt 500 and year 2016"

    def test_decimal_kept(self):
        assert unparse(FilterExpr(greater_than=2.5)) == "gt 2.5"

    @given(
        st.one_of(st.none(), st.integers(-10**6, 10**6).map(float)),
        st.one_of(st.none(), st.integers(-10**6, 10**6).map(float)),
        st.one_of(st.none(), st.integers(1000, 9999)),
    )
    def test_round_trip(self, gt, lt, year):
        if gt is None and lt is None and year is None:
            return
        if gt is not None and lt is not None and not (gt < lt):
            return
        expr = FilterExpr(greater_than=gt, less_than=lt, year=year)
        assert parse_filter(unparse(expr)) == expr


class TestApplyFilter:
    def test_row_matches_when_any_number_passes(self):
        result = apply_filter(parse_filter("gt 20"), SAMPLE, SAMPLE_HEADERS)
        # row 2: 100 and 1200 both pass; row 3: 30 passes ((40) is -40);
        # row 4: 15 not > 20. Years (2015, 2016) never participate.
        assert result.matched_rows == (2, 3)

    def test_all_bounds_must_hold_on_one_cell(self):
        result = apply_filter(parse_filter("gt 20 and lt 50"), SAMPLE, SAMPLE_HEADERS)
        assert result.matched_rows == (3,)  # only 30 falls inside (20, 50)

    def test_negatives_match(self):
        result = apply_filter(parse_filter("lt 0"), SAMPLE, SAMPLE_HEADERS)
        assert result.matched_rows == (3,)  # (40) parses to -40

    def test_year_cells_never_range_match(self):
        result = apply_filter(parse_filter("gt 2000 and lt 2100"), SAMPLE, SAMPLE_HEADERS)
        assert result.matched_rows == ()

    def test_year_term_selects_columns(self):
        result = apply_filter(parse_filter("year 2016"), SAMPLE, SAMPLE_HEADERS)
        assert result.matched_rows == ()
        assert result.year_columns == (2,)
        assert result.year_missing is False

    def test_missing_year_flagged(self):
        result = apply_filter(parse_filter("year 1999"), SAMPLE, SAMPLE_HEADERS)
        assert result.year_columns == ()
        assert result.year_missing is True

    def test_combined_range_and_year_query(self):
        result = apply_filter(
            parse_filter("gt 50 and lt 1500 and year 2016"), SAMPLE, SAMPLE_HEADERS
        )
        assert result.matched_rows == (2,)  # 100 and 1200 in range; 30 below
        assert result.year_columns == (2,)

    @given(st.data())
    def test_matches_per_cell_scan_oracle(self, data):
        # Random tables checked against an exhaustive per-cell reference scan.
        rows = data.draw(st.integers(1, 12))
        cols = data.draw(st.integers(1, 6))
        cells = data.draw(
            st.lists(
                st.lists(
                    st.one_of(
                        st.integers(-500, 1500).map(str),
                        st.just(""),
                        st.just("text"),
                        st.integers(1900, 2100).map(str),
                    ),
                    min_size=cols,
                    max_size=cols,
                ),
                min_size=rows,
                max_size=rows,
            )
        )
        html = "<table>" + "".join(
            "<tr>" + "".join(f"<td>{c}</td>" for c in row) + "</tr>" for row in cells
        ) + "</table>"
        table = table_of(html)
        gt = data.draw(st.one_of(st.none(), st.integers(-400, 900).map(float)))
        lt = data.draw(st.one_of(st.none(), st.integers(-400, 1400).map(float)))
        if gt is None and lt is None:
            gt = 0.0
        if gt is not None and lt is not None and not (gt < lt):
            gt, lt = None, lt
        expr = FilterExpr(greater_than=gt, less_than=lt)
        result = apply_filter(expr, table, detect_headers(table))

        expected = []
        for row in table.rows:
            ok = False
            for cell in row.unique_cells():
                if cell.kind is not CellKind.NUMBER:
                    continue
                value = cell.value
                if gt is not None and not (value > gt):
                    continue
                if lt is not None and not (value < lt):
                    continue
                ok = True
            if ok:
                expected.append(row.ordinal)
        assert list(result.matched_rows) == expected

    @given(st.integers(0, 200), st.integers(0, 200))
    def test_tightening_bounds_shrinks_matches(self, lo, width):
        # Anti-monotonicity: a tighter range never matches more rows.
        loose = FilterExpr(greater_than=float(lo), less_than=float(lo + width + 2))
        tight = FilterExpr(greater_than=float(lo), less_than=float(lo + 1))
        loose_rows = set(apply_filter(loose, SAMPLE, SAMPLE_HEADERS).matched_rows)
        tight_rows = set(apply_filter(tight, SAMPLE, SAMPLE_HEADERS).matched_rows)
        assert tight_rows <= loose_rows


class TestCombineHighlights:
    def classes_by_cell(self, highlights):
        out = {}
        for h in highlights:
            out.setdefault((h.row, h.column), set()).add(h.css_class)
        return out

    def test_filter_only_rows(self):
        result = apply_filter(parse_filter("gt 20"), SAMPLE, SAMPLE_HEADERS)
        highlights = combine_highlights(SAMPLE, result, parse_filter("gt 20"))
        cells = self.classes_by_cell(highlights)
        assert cells[(2, 0)] == {HighlightClass.FILTER_ONLY}
        assert cells[(3, 1)] == {HighlightClass.FILTER_ONLY}
        assert (4, 0) not in cells

    def test_intersection_beats_other_classes(self):
        expr = parse_filter("gt 20")
        result = apply_filter(expr, SAMPLE, SAMPLE_HEADERS)
        highlights = combine_highlights(SAMPLE, result, expr, similar_rows=[(2, 0.1), (4, 0.2)])
        cells = self.classes_by_cell(highlights)
        assert cells[(2, 0)] == {HighlightClass.INTERSECTION}
        assert cells[(3, 0)] == {HighlightClass.FILTER_ONLY}
        # row 4 missed the filter; best remaining similar row is primary
        assert cells[(4, 0)] == {HighlightClass.SIMILAR_PRIMARY}

    def test_primary_is_smallest_distance(self):
        result = FilterResult(matched_rows=(), year_columns=())
        highlights = combine_highlights(
            SAMPLE, result, None, similar_rows=[(2, 0.5), (3, 0.2), (4, 0.9)]
        )
        cells = self.classes_by_cell(highlights)
        assert cells[(3, 0)] == {HighlightClass.SIMILAR_PRIMARY}
        assert cells[(2, 0)] == {HighlightClass.SIMILAR_SECONDARY}
        assert cells[(4, 0)] == {HighlightClass.SIMILAR_SECONDARY}

    def test_primary_distance_tie_breaks_low_row(self):
        result = FilterResult(matched_rows=(), year_columns=())
        highlights = combine_highlights(
            SAMPLE, result, None, similar_rows=[(4, 0.2), (2, 0.2)]
        )
        cells = self.classes_by_cell(highlights)
        assert cells[(2, 0)] == {HighlightClass.SIMILAR_PRIMARY}
        assert cells[(4, 0)] == {HighlightClass.SIMILAR_SECONDARY}

    def test_year_overlay_whole_column_without_range(self):
        expr = parse_filter("year 2016")
        result = apply_filter(expr, SAMPLE, SAMPLE_HEADERS)
        highlights = combine_highlights(SAMPLE, result, expr)
        cells = self.classes_by_cell(highlights)
        for row in range(5):
            assert cells[(row, 2)] == {HighlightClass.YEAR_COLUMN}
        assert (0, 1) not in cells

    def test_year_overlay_confined_to_matches_with_range(self):
        expr = parse_filter("gt 20 and year 2016")
        result = apply_filter(expr, SAMPLE, SAMPLE_HEADERS)
        highlights = combine_highlights(SAMPLE, result, expr)
        cells = self.classes_by_cell(highlights)
        assert cells[(2, 2)] == {HighlightClass.FILTER_ONLY, HighlightClass.YEAR_COLUMN}
        assert cells[(3, 2)] == {HighlightClass.FILTER_ONLY, HighlightClass.YEAR_COLUMN}
        assert (0, 2) not in cells  # unmatched rows get no year overlay
        assert (4, 2) not in cells

    def test_year_column_composes_with_similarity(self):
        expr = parse_filter("year 2015")
        result = apply_filter(expr, SAMPLE, SAMPLE_HEADERS)
        highlights = combine_highlights(SAMPLE, result, expr, similar_rows=[(2, 0.3)])
        cells = self.classes_by_cell(highlights)
        assert cells[(2, 1)] == {HighlightClass.SIMILAR_PRIMARY, HighlightClass.YEAR_COLUMN}

    def test_serialize_sorted_triples(self):
        highlights = [
            CellHighlight(2, 1, HighlightClass.FILTER_ONLY),
            CellHighlight(0, 2, HighlightClass.YEAR_COLUMN),
            CellHighlight(2, 0, HighlightClass.FILTER_ONLY),
        ]
        assert serialize_highlights(highlights) == [
            "0,2,year_column",
            "2,0,filter_only",
            "2,1,filter_only",
        ]
