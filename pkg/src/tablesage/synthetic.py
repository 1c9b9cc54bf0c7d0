"""Deterministic synthetic corpus generator.

Emits HTML report documents (one table each), a manifest, and a
row-similarity ground truth. Wording is a property of the reporting
company: each company keeps a fixed synonym choice per line item, a fixed
title phrasing, and a signature lead/tail filler pair, the way real
preparers reuse boilerplate year after year. The headline line items at
the top of each statement appear in every replicate; minor disclosure
lines further down appear only in some years, so replicate tables of one
company differ in years, amounts, and which late line items they carry,
while different companies word the same line item differently. Ground
truth links rows generated from the same template across tables, plus a
few cross-statement concept pairs (a dividend row in a cash-flow table is
similar to a dividend row in an equity table).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import RowSimGroundTruth, save_ground_truth
from .tables import MANIFEST_COLUMNS, TableType

DEFAULT_COMPANIES = (
    "Acme Retail Group",
    "Borealis Mining Limited",
    "Cobalt Energy Holdings",
    "Dunmore Logistics Corporation",
    "Eastbrook Technology Partners",
)

_TYPE_SLUGS = {
    TableType.PROFIT_OR_LOSS: "profitloss",
    TableType.FINANCIAL_POSITION: "finposition",
    TableType.CHANGES_IN_EQUITY: "equity",
    TableType.CASH_FLOWS: "cashflows",
}

_TITLE_VARIANTS = {
    TableType.PROFIT_OR_LOSS: (
        "statement of profit or loss",
        "income statement",
        "statement of comprehensive income",
    ),
    TableType.FINANCIAL_POSITION: (
        "statement of financial position",
        "balance sheet",
        "statement of assets and liabilities",
    ),
    TableType.CHANGES_IN_EQUITY: (
        "statement of changes in equity",
        "equity movements statement",
        "statement of equity changes",
    ),
    TableType.CASH_FLOWS: (
        "statement of cash flows",
        "cash flow statement",
        "statement of cash movements",
    ),
}


@dataclass(frozen=True)
class RowTemplate:
    """One line item: three wording variants and a value range.

    ``decorated`` templates carry the reporting company's signature filler
    phrases around the anchor text, so their surface form differs across
    companies but not across one company's reports. ``always_included``
    marks line items every report carries (totals, related-party
    disclosures); a ``{company}`` placeholder in a variant is replaced with
    the reporting company's name.
    """

    key: str
    variants: tuple[str, str, str]
    decorated: bool
    value_range: tuple[float, float]
    always_included: bool = False


_LEAD_FILLERS = ("consolidated", "aggregate", "underlying", "reported", "attributable", "combined")
_TAIL_FILLERS = (
    "for continuing operations",
    "before significant items",
    "net of allowances",
    "for the reporting period",
    "after intercompany eliminations",
    "per the audited accounts",
)


def _house_style(company_index: int) -> tuple[str, str]:
    """Signature lead and tail filler phrases for one company.

    Real preparers reuse pet phrasings year after year, so each company gets
    its own lead/tail pair, stable across all of its reports.
    """
    lead = _LEAD_FILLERS[company_index % len(_LEAD_FILLERS)]
    tail = _TAIL_FILLERS[company_index % len(_TAIL_FILLERS)]
    return lead, tail

TEMPLATES: dict[TableType, tuple[RowTemplate, ...]] = {
    TableType.PROFIT_OR_LOSS: (
        RowTemplate("revenue", ("revenue from contracts with customers", "sales revenue", "operating revenue"), False, (8200, 99000)),
        RowTemplate("cost_of_sales", ("cost of sales", "cost of goods sold", "direct selling costs"), False, (4100, 52000)),
        RowTemplate("gross_profit", ("gross profit", "gross margin result", "gross surplus"), False, (2600, 47000)),
        RowTemplate("other_income", ("other income", "sundry income", "miscellaneous earnings"), True, (40, 1700)),
        RowTemplate("related_fees", ("fees paid to related entities of {company}", "management fees paid to {company} entities", "{company} related party service fees"), False, (20, 900), always_included=True),
        RowTemplate("distribution", ("distribution expenses", "freight and delivery costs", "logistics expenditure"), True, (130, 2600)),
        RowTemplate("marketing", ("marketing expenses", "advertising and promotion costs", "brand campaign spending"), True, (90, 1450)),
        RowTemplate("admin", ("administrative expenses", "administration costs", "corporate overheads"), False, (210, 3300)),
        RowTemplate("finance_costs", ("finance costs", "interest expense", "borrowing charges"), False, (35, 880)),
        RowTemplate("depreciation", ("depreciation and amortisation", "write down of plant values", "asset consumption charges"), False, (160, 2450)),
        RowTemplate("tax", ("income tax expense", "taxation charge", "statutory levies on profit"), False, (220, 5200)),
        RowTemplate("profit", ("profit for the year", "net earnings result", "annual surplus after charges"), False, (480, 12500)),
        RowTemplate("eps", ("basic earnings per share", "net result per ordinary unit", "income attributable per security"), False, (11, 95)),
    ),
    TableType.FINANCIAL_POSITION: (
        RowTemplate("cash", ("cash and cash equivalents", "cash at bank and on hand", "liquid funds held"), False, (900, 16000)),
        RowTemplate("receivables", ("trade and other receivables", "trade debtors", "accounts receivable balances"), True, (700, 9800)),
        RowTemplate("related_receivables", ("amounts receivable from {company} related entities", "receivables due from {company} group companies", "{company} related party receivables"), False, (45, 1200), always_included=True),
        RowTemplate("inventories", ("inventories", "stock on hand", "inventory holdings"), True, (380, 7400)),
        RowTemplate("ppe", ("property plant and equipment", "land buildings and machinery", "fixed asset holdings"), False, (2700, 64000)),
        RowTemplate("intangibles", ("intangible assets and goodwill", "goodwill and brand assets", "intangibles carried at cost"), True, (420, 8800)),
        RowTemplate("deferred_tax", ("deferred tax assets", "future income tax benefits", "deferred taxation balances"), False, (55, 1300)),
        RowTemplate("payables", ("trade and other payables", "trade creditors", "accounts payable balances"), False, (620, 8700)),
        RowTemplate("borrowings", ("interest bearing borrowings", "bank loans and facilities", "secured debt obligations"), False, (1400, 30000)),
        RowTemplate("provisions", ("employee benefit provisions", "staff entitlement reserves", "accrued workforce liabilities"), False, (110, 2300)),
        RowTemplate("total_assets", ("total assets", "gross holdings employed", "sum of recognised resources"), False, (5200, 98000)),
        RowTemplate("total_liabilities", ("total liabilities", "overall obligations outstanding", "debts and amounts owed"), False, (2800, 56000)),
        RowTemplate("net_assets", ("net assets", "residual interest in holdings", "equity backing position"), False, (2300, 42000)),
    ),
    TableType.CHANGES_IN_EQUITY: (
        RowTemplate("opening", ("balance at the beginning of the year", "opening equity balance", "equity at start of period"), False, (2100, 39000)),
        RowTemplate("profit_attr", ("profit attributable to members", "profit for the period", "earnings attributable to owners"), True, (420, 11800)),
        RowTemplate("oci", ("other comprehensive income", "comprehensive income items", "revaluation and translation gains"), True, (25, 960)),
        RowTemplate("plan_issues", ("shares issued under {company} employee plans", "equity issued to {company} share plans", "{company} employee share plan issues"), False, (25, 980), always_included=True),
        RowTemplate("issues", ("shares issued during the year", "new share capital issued", "equity raised from share issues"), True, (60, 5200)),
        RowTemplate("buyback", ("shares bought back", "share buy back payments", "treasury share purchases"), False, (45, 2100)),
        RowTemplate("dividends", ("dividends provided for or paid", "dividends declared", "distributions to equity holders"), False, (150, 4800)),
        RowTemplate("share_based", ("share based payment expense", "employee equity compensation", "share plan remuneration"), False, (18, 740)),
        RowTemplate("transfers", ("transfers between reserves", "reallocation across equity accounts", "internal capital movements"), False, (12, 620)),
        RowTemplate("fx_reserve", ("foreign currency translation reserve", "exchange rate adjustment balance", "offshore denomination effects"), False, (9, 830)),
        RowTemplate("retained", ("retained earnings movement", "accumulated profits adjustment", "undistributed surplus change"), False, (260, 7600)),
        RowTemplate("nci", ("non controlling interests share", "minority holders portion", "outside ownership stake"), False, (14, 900)),
        RowTemplate("closing", ("balance at the end of the year", "closing equity position", "terminal reserves carried forward"), False, (2400, 43000)),
    ),
    TableType.CASH_FLOWS: (
        RowTemplate("receipts", ("receipts from customers", "cash received from customers", "customer cash collections"), False, (7800, 97000)),
        RowTemplate("supplier_payments", ("payments to suppliers and employees", "cash paid to suppliers", "supplier and staff payments"), True, (5200, 71000)),
        RowTemplate("interest_received", ("interest received", "interest income collected", "bank interest receipts"), True, (8, 460)),
        RowTemplate("related_payments", ("payments to related entities of {company}", "cash paid to {company} group entities", "{company} related party payments"), False, (30, 1100), always_included=True),
        RowTemplate("tax_paid", ("income taxes paid", "tax payments made", "taxation remitted"), True, (190, 4700)),
        RowTemplate("operating", ("net cash from operating activities", "operating cash inflow", "cash generated by operations"), False, (850, 15500)),
        RowTemplate("capex", ("purchase of property plant and equipment", "capital expenditure payments", "acquisition of fixed assets"), False, (430, 9400)),
        RowTemplate("disposals", ("proceeds from sale of assets", "asset disposal proceeds", "receipts from asset sales"), False, (30, 2900)),
        RowTemplate("investing", ("net cash used in investing activities", "capital deployment outflows", "money applied to long term holdings"), False, (390, 8900)),
        RowTemplate("dividends_paid", ("dividends paid to shareholders", "dividend distributions", "shareholder dividend payments"), False, (140, 4400)),
        RowTemplate("borrow_proceeds", ("proceeds from borrowings", "drawdown of loan facilities", "new debt funding received"), False, (230, 7800)),
        RowTemplate("financing", ("net cash from financing activities", "funding flows for the period", "capital raising and repayment movements"), False, (120, 6200)),
        RowTemplate("net_change", ("net increase in cash held", "movement in liquid balances", "overall shift in money position"), False, (60, 3900)),
    ),
}

# line items that describe the same economic concept in two different
# statements; a human judge would mark these rows mutually similar
_CONCEPT_GROUPS: tuple[tuple[tuple[TableType, str], ...], ...] = (
    ((TableType.PROFIT_OR_LOSS, "profit"), (TableType.CHANGES_IN_EQUITY, "profit_attr")),
    ((TableType.PROFIT_OR_LOSS, "tax"), (TableType.CASH_FLOWS, "tax_paid")),
    ((TableType.FINANCIAL_POSITION, "ppe"), (TableType.CASH_FLOWS, "capex")),
    ((TableType.CHANGES_IN_EQUITY, "dividends"), (TableType.CASH_FLOWS, "dividends_paid")),
)

_CONCEPT_OF: dict[tuple[TableType, str], int] = {
    member: group_index
    for group_index, group in enumerate(_CONCEPT_GROUPS)
    for member in group
}

_STYLE_COLORS = ("#dbeafe", "#dcfce7", "#fee2e2", "#fef9c3", "#ede9fe")


@dataclass(frozen=True)
class SyntheticCorpusConfig:
    companies: tuple[str, ...] = DEFAULT_COMPANIES
    replicates: int = 4
    seed: int = 42
    include_probability: float = 0.8
    # disclosure lines past the stable prefix appear in any one report with
    # this probability, so replicate tables of a company share their opening
    # lines but differ in which minor items they carry further down
    late_include_probability: float = 0.4
    min_data_rows: int = 6
    base_year: int = 2015
    # line items that start inside this many leading tokens appear on every
    # one of the company's reports; the region beyond it is sparse
    stable_prefix_tokens: int = 40

    def __post_init__(self):
        if len(self.companies) < 2:
            raise ValueError("need at least 2 companies")
        if self.replicates < 1:
            raise ValueError("need at least 1 replicate per company and type")
        if not (0.0 < self.include_probability <= 1.0):
            raise ValueError("include_probability must be in (0, 1]")
        if not (0.0 < self.late_include_probability <= 1.0):
            raise ValueError("late_include_probability must be in (0, 1]")
        if self.stable_prefix_tokens < 0:
            raise ValueError("stable_prefix_tokens must be non-negative")


@dataclass(frozen=True)
class SyntheticCorpus:
    corpus_dir: Path
    manifest_path: Path
    ground_truth_path: Path
    table_ids: tuple[str, ...]
    ground_truth: RowSimGroundTruth


def _company_slug(name: str) -> str:
    return name.split()[0].lower()


def _format_value(value: float, rng: np.random.Generator) -> str:
    style = int(rng.integers(0, 5))
    if style == 0:
        return f"{value:,.0f}"
    if style == 1:
        return f"${value:,.0f}"
    if style == 2:
        return f"({value:,.0f})"
    if style == 3:
        return f"{value:.1f}"
    return f"{value:.1f}%"


def _row_text(
    template: RowTemplate,
    variant: int,
    company: str,
    company_index: int,
    table_type: TableType,
    style: tuple[str, str],
) -> str:
    anchor = template.variants[variant].replace("{company}", company)
    if not template.decorated:
        return anchor
    # same company, same line item, same qualifiers on every report; the
    # hash only decides whether this line carries the lead, the tail, or both
    lead, tail = style
    mode = zlib.crc32(f"{company_index}:{table_type.value}:{template.key}".encode()) % 3
    if mode == 0:
        return f"{lead} {anchor}"
    if mode == 1:
        return f"{anchor} {tail}"
    return f"{lead} {anchor} {tail}"


def _stable_layout(
    templates: tuple[RowTemplate, ...],
    config: SyntheticCorpusConfig,
    company: str,
    company_index: int,
    type_index: int,
    table_type: TableType,
    title: str,
    style: tuple[str, str],
    fingerprint: np.ndarray,
) -> tuple[list[int], list[int]]:
    """Split one company/type pair's templates into stable and late sets.

    The stable set is drawn once per company and type (not per replicate),
    then laid out with the company's house wording until the running token
    count reaches the stable prefix; everything from the first line that
    starts past it belongs to the late region, where each report makes its
    own inclusion draws. Returns (stable template indices, late pool).
    """
    base_rng = np.random.default_rng([config.seed, company_index, type_index, 7777])
    baseline = []
    for i, template in enumerate(templates):
        if base_rng.random() < config.include_probability or template.always_included:
            baseline.append(i)
    for i in range(len(templates)):
        if len(baseline) >= config.min_data_rows:
            break
        if i not in baseline:
            baseline.append(i)
    baseline = sorted(baseline)

    tokens_so_far = len(title.split()) + 2  # the two year header cells
    boundary = len(templates)
    for template_index in baseline:
        if tokens_so_far >= config.stable_prefix_tokens:
            boundary = template_index
            break
        template = templates[template_index]
        variant = int(fingerprint[company_index, type_index, template_index])
        text = _row_text(template, variant, company, company_index, table_type, style)
        tokens_so_far += len(text.split())

    stable = [i for i in baseline if i < boundary]
    late_pool = list(range(boundary, len(templates)))
    return stable, late_pool


def _table_html(title: str, years: tuple[int, int], data_rows: list[tuple[str, list[str]]]) -> str:
    width = 1 + len(years)
    lines = ["<table>"]
    lines.append(f'  <tr><td colspan="{width}">{title}</td></tr>')
    year_cells = "".join(f"<td>{y}</td>" for y in years)
    lines.append(f"  <tr><td></td>{year_cells}</tr>")
    for text, values in data_rows:
        value_cells = "".join(f"<td>{v}</td>" for v in values)
        lines.append(f"  <tr><td>{text}</td>{value_cells}</tr>")
    lines.append("</table>")
    return "\n".join(lines)


def _document_html(company: str, color: str, report_year: int, table_html: str) -> str:
    return (
        "<html>\n<head>\n<style>\n"
        "table { border-collapse: collapse; width: 100%; }\n"
        "td { padding: 2px 8px; border-bottom: 1px solid #e5e7eb; }\n"
        f"tr:first-child td {{ background: {color}; font-weight: bold; }}\n"
        "</style>\n</head>\n<body>\n"
        f"<h1>{company} annual report {report_year}</h1>\n"
        f"{table_html}\n"
        "</body>\n</html>\n"
    )


def generate_synthetic_corpus(config: SyntheticCorpusConfig, out_dir: str | Path) -> SyntheticCorpus:
    """Write table documents, manifest.csv, and ground_truth.txt under out_dir."""
    corpus_dir = Path(out_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)

    manifest_rows: list[tuple[str, str, str]] = []
    table_ids: list[str] = []
    # rows that share a key are mutually similar in the ground truth
    linked_rows: dict[tuple, list[tuple[str, int]]] = {}

    # Each company words each line item its own way: a fixed per-company,
    # per-template synonym choice. Replicate tables of one company reuse the
    # company's wording; different companies drift apart template by template.
    max_templates = max(len(t) for t in TEMPLATES.values())
    fingerprint = np.random.default_rng([config.seed, 9091]).integers(
        0, 3, size=(len(config.companies), len(TableType), max_templates)
    )

    for company_index, company in enumerate(config.companies):
        slug = _company_slug(company)
        color = _STYLE_COLORS[company_index % len(_STYLE_COLORS)]
        style = _house_style(company_index)
        for table_type in TableType:
            type_index = list(TableType).index(table_type)
            templates = TEMPLATES[table_type]
            title_variant = company_index % 3
            title = f"{company} {_TITLE_VARIANTS[table_type][title_variant]}"
            stable, late_pool = _stable_layout(
                templates,
                config,
                company,
                company_index,
                type_index,
                table_type,
                title,
                style,
                fingerprint,
            )
            for replicate in range(config.replicates):
                rng = np.random.default_rng(
                    [config.seed, company_index, type_index, replicate]
                )
                table_id = f"{slug}_{_TYPE_SLUGS[table_type]}_r{replicate}"
                years = (config.base_year + replicate, config.base_year + replicate + 1)

                chosen = list(stable)
                for template_index in late_pool:
                    template = templates[template_index]
                    if template.always_included or rng.random() < config.late_include_probability:
                        chosen.append(template_index)
                # top up short tables from the late pool first so the stable
                # opening of the table never changes between reports
                for i in late_pool + list(range(len(templates))):
                    if len(chosen) >= config.min_data_rows:
                        break
                    if i not in chosen:
                        chosen.append(i)
                chosen = sorted(chosen)

                data_rows: list[tuple[str, list[str]]] = []
                for ordinal_offset, template_index in enumerate(chosen):
                    template = templates[template_index]
                    variant = int(fingerprint[company_index, type_index, template_index])
                    text = _row_text(
                        template, variant, company, company_index, table_type, style
                    )
                    values = []
                    for _ in years:
                        if rng.random() < 0.04:
                            values.append("")
                        else:
                            lo, hi = template.value_range
                            values.append(_format_value(float(rng.uniform(lo, hi)), rng))
                    data_rows.append((text, values))
                    ordinal = 2 + ordinal_offset
                    key = ("template", table_type.value, template_index)
                    linked_rows.setdefault(key, []).append((table_id, ordinal))
                    concept = _CONCEPT_OF.get((table_type, template.key))
                    if concept is not None:
                        linked_rows.setdefault(("concept", concept), []).append(
                            (table_id, ordinal)
                        )
                linked_rows.setdefault(("title", table_type.value), []).append((table_id, 0))
                # year header rows read the same way whatever statement they
                # top, so they are linked across the whole corpus
                linked_rows.setdefault(("years",), []).append((table_id, 1))

                html = _document_html(
                    company, color, years[1], _table_html(title, years, data_rows)
                )
                file_name = f"{table_id}.html"
                (corpus_dir / file_name).write_text(html, encoding="utf-8")
                manifest_rows.append((file_name, table_type.value, company))
                table_ids.append(table_id)

    manifest_path = corpus_dir / "manifest.csv"
    lines = [",".join(MANIFEST_COLUMNS)]
    lines += [",".join(row) for row in manifest_rows]
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    truth: RowSimGroundTruth = {}
    for members in linked_rows.values():
        for table_id, ordinal in members:
            others = {m for m in members if m[0] != table_id}
            if others:
                truth.setdefault((table_id, ordinal), set()).update(others)
    ground_truth_path = corpus_dir / "ground_truth.txt"
    save_ground_truth(truth, ground_truth_path)

    return SyntheticCorpus(
        corpus_dir=corpus_dir,
        manifest_path=manifest_path,
        ground_truth_path=ground_truth_path,
        table_ids=tuple(table_ids),
        ground_truth=truth,
    )
