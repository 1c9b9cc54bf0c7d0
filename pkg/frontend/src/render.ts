// DOM construction. Each table pane hosts its document's original style
// rules inside a shadow root, so two panes with conflicting stylesheets
// cannot contaminate each other or the page chrome.

import type { ProjectionPoint, RowPayload, TablePayload } from './api.js';
import { shadeClass, type HighlightClassName, type RowShade } from './state.js';

// Highlight rules are injected after the document's own rules in every
// shadow root: original styling wins for ordinary cells, highlight
// backgrounds win where a class applies. year_column comes last so the
// year overlay stays visible inside matched (green/blue) rows.
const PANE_BASE_CSS = `
table { border-collapse: collapse; }
td { padding: 2px 6px; }
tr.shade-1 td { background: #ffd24d; }
tr.shade-2 td { background: #ffdd77; }
tr.shade-3 td { background: #ffe79f; }
tr.shade-4 td { background: #fff1c4; }
tr.shade-5 td { background: #fff8e1; }
tr.selected-row td { outline: 2px solid #d08700; }
td.hl-similar_primary { background: #ffd24d; }
td.hl-similar_secondary { background: #fff1c4; }
td.hl-filter_only { background: #b8d4ff; }
td.hl-intersection { background: #a9dfa9; }
td.hl-year_column { background: #d5b8ef; }
`;

export interface Pane {
  root: HTMLElement;
  tableId: string;
  table: HTMLTableElement;
  notice: HTMLElement;
}

function buildRow(doc: Document, row: RowPayload): HTMLTableRowElement {
  const tr = doc.createElement('tr');
  tr.dataset.ordinal = String(row.ordinal);
  for (const cell of row.cells) {
    const td = doc.createElement('td');
    td.textContent = cell.text;
    td.dataset.row = String(row.ordinal);
    td.dataset.column = String(cell.column);
    if (cell.span > 1) td.colSpan = cell.span;
    tr.appendChild(td);
  }
  return tr;
}

export interface PaneOptions {
  css: string | null;
  styleFailed?: boolean;
  badge?: string;
}

/** Render one table with its own style rules scoped to a shadow root. */
export function renderTablePane(doc: Document, payload: TablePayload, options: PaneOptions): Pane {
  const root = doc.createElement('section');
  root.className = 'pane';
  root.dataset.tableId = payload.id;

  const header = doc.createElement('header');
  const title = doc.createElement('h3');
  title.textContent = payload.id;
  const meta = doc.createElement('span');
  meta.className = 'pane-meta';
  meta.textContent = `${payload.company} / ${payload.table_type}`;
  header.appendChild(title);
  header.appendChild(meta);
  if (options.badge) {
    const badge = doc.createElement('span');
    badge.className = 'distance-badge';
    badge.textContent = options.badge;
    header.appendChild(badge);
  }
  root.appendChild(header);

  const host = doc.createElement('div');
  host.className = 'pane-body';
  const shadow = host.attachShadow({ mode: 'open' });
  if (options.css) {
    const docStyle = doc.createElement('style');
    docStyle.textContent = options.css;
    shadow.appendChild(docStyle);
  }
  const baseStyle = doc.createElement('style');
  baseStyle.textContent = PANE_BASE_CSS;
  shadow.appendChild(baseStyle);

  const table = doc.createElement('table');
  for (const row of payload.rows) table.appendChild(buildRow(doc, row));
  shadow.appendChild(table);
  root.appendChild(host);

  const notice = doc.createElement('p');
  notice.className = 'pane-notice';
  notice.hidden = true;
  root.appendChild(notice);

  const pane: Pane = { root, tableId: payload.id, table, notice };
  if (options.styleFailed) {
    showNotice(pane, 'style unavailable; showing unstyled table');
  }
  return pane;
}

export function showNotice(pane: Pane, message: string): void {
  pane.notice.textContent = message;
  pane.notice.hidden = false;
}

export function paneRows(pane: Pane): HTMLTableRowElement[] {
  return Array.from(pane.table.querySelectorAll('tr'));
}

/** Shade similar rows by rank; the tooltip is the server's distance string. */
export function applyRowShades(pane: Pane, shades: Map<string, RowShade>): void {
  for (const tr of paneRows(pane)) {
    const shade = shades.get(`${pane.tableId}:${tr.dataset.ordinal}`);
    if (shade) {
      tr.classList.add(shadeClass(shade.rank));
      tr.dataset.rank = String(shade.rank);
      tr.title = shade.distance;
    }
  }
}

export function clearRowShades(pane: Pane): void {
  for (const tr of paneRows(pane)) {
    tr.classList.remove(...[1, 2, 3, 4, 5].map((n) => `shade-${n}`));
    delete tr.dataset.rank;
    tr.removeAttribute('title');
  }
}

export function markSelectedRow(pane: Pane, ordinal: number | null): void {
  for (const tr of paneRows(pane)) {
    tr.classList.toggle('selected-row', tr.dataset.ordinal === String(ordinal));
  }
}

export function applyCellHighlights(
  pane: Pane,
  cells: Map<string, HighlightClassName[]>,
): void {
  for (const td of Array.from(pane.table.querySelectorAll('td'))) {
    const classes = cells.get(`${td.dataset.row}:${td.dataset.column}`);
    if (classes) td.classList.add(...classes.map((name) => `hl-${name}`));
  }
}

export function clearCellHighlights(pane: Pane): void {
  for (const td of Array.from(pane.table.querySelectorAll('td'))) {
    td.classList.remove(...Array.from(td.classList).filter((c) => c.startsWith('hl-')));
  }
}

/** Inline parse error with a caret under the offending character. */
export function renderFilterError(
  container: HTMLElement,
  query: string,
  position: number,
  message: string,
): void {
  container.textContent = '';
  container.hidden = false;
  const doc = container.ownerDocument;
  const pre = doc.createElement('pre');
  pre.className = 'filter-error';
  const queryLine = doc.createElement('span');
  queryLine.className = 'query-line';
  queryLine.textContent = query;
  const caretLine = doc.createElement('span');
  caretLine.className = 'caret-line';
  caretLine.textContent = ' '.repeat(Math.max(position - 1, 0)) + '^';
  pre.appendChild(queryLine);
  pre.appendChild(doc.createTextNode('\n'));
  pre.appendChild(caretLine);
  container.appendChild(pre);
  const note = doc.createElement('p');
  note.className = 'error-message';
  note.textContent = message;
  container.appendChild(note);
}

export function clearFilterError(container: HTMLElement): void {
  container.textContent = '';
  container.hidden = true;
}

const SCATTER_SIZE = 360;
const SCATTER_PAD = 12;

/** Static scatter panel of the 2-d projection, colored by class label. */
export function renderProjection(container: HTMLElement, points: ProjectionPoint[]): void {
  container.textContent = '';
  if (points.length === 0) return;
  const doc = container.ownerDocument;
  const svgNs = 'http://www.w3.org/2000/svg';
  const svg = doc.createElementNS(svgNs, 'svg');
  svg.setAttribute('viewBox', `0 0 ${SCATTER_SIZE} ${SCATTER_SIZE}`);
  svg.setAttribute('class', 'projection-scatter');

  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const scale = (v: number, lo: number, hi: number) => {
    const span = hi - lo || 1;
    return SCATTER_PAD + ((v - lo) / span) * (SCATTER_SIZE - 2 * SCATTER_PAD);
  };

  for (const point of points) {
    const circle = doc.createElementNS(svgNs, 'circle');
    circle.setAttribute('cx', String(scale(point.x, minX, maxX)));
    circle.setAttribute('cy', String(SCATTER_SIZE - scale(point.y, minY, maxY)));
    circle.setAttribute('r', '4');
    circle.setAttribute('class', `point label-${point.label_id}`);
    const label = doc.createElementNS(svgNs, 'title');
    label.textContent = point.table_id;
    circle.appendChild(label);
    svg.appendChild(circle);
  }
  container.appendChild(svg);
}
