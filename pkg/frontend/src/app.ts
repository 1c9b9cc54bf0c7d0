// Controller: wires the table picker, panes, row clicks, the filter bar
// and the projection panel to the API client. Selection changes cancel
// all in-flight requests (latest wins); a stale response never renders.

import {
  ApiClient,
  ApiError,
  type StylePayload,
  type TableHit,
  type TablePayload,
} from './api.js';
import {
  applyCellHighlights,
  applyRowShades,
  clearCellHighlights,
  clearFilterError,
  clearRowShades,
  markSelectedRow,
  renderFilterError,
  renderProjection,
  renderTablePane,
  type Pane,
} from './render.js';
import {
  MAX_NEIGHBORS,
  clampCursor,
  initialState,
  parseHighlights,
  pruneHighlights,
  rowShades,
  similarRowsFor,
  visibleTableIds,
  type ViewState,
} from './state.js';

export function buildAppSkeleton(root: HTMLElement): void {
  root.innerHTML = `
    <header class="toolbar">
      <label>Table
        <select id="table-select"><option value="">choose a table</option></select>
      </label>
      <form id="filter-form">
        <input id="filter-input" placeholder="gt 50 and lt 1500 and year 2016" />
        <button type="submit">Filter</button>
      </form>
      <nav id="pane-nav" hidden>
        <button type="button" id="nav-prev">&lsaquo;</button>
        <span id="nav-status"></span>
        <button type="button" id="nav-next">&rsaquo;</button>
      </nav>
    </header>
    <div id="filter-error" class="filter-error-box" hidden></div>
    <p id="app-notice" hidden></p>
    <main id="panes"></main>
    <section id="projection-panel" hidden>
      <h2>Table map</h2>
      <div id="projection"></div>
    </section>
  `;
}

function isAbort(error: unknown): boolean {
  return error instanceof DOMException && error.name === 'AbortError';
}

interface LoadedPane {
  payload: TablePayload;
  style: StylePayload | null;
  styleFailed: boolean;
}

export class App {
  readonly state: ViewState = initialState();
  private panes: Pane[] = [];
  private selectionAbort: AbortController | null = null;
  private rowAbort: AbortController | null = null;
  private filterAbort: AbortController | null = null;

  private readonly select: HTMLSelectElement;
  private readonly filterInput: HTMLInputElement;
  private readonly filterError: HTMLElement;
  private readonly noticeEl: HTMLElement;
  private readonly panesEl: HTMLElement;
  private readonly nav: HTMLElement;
  private readonly navStatus: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    buildAppSkeleton(root);
    this.select = root.querySelector('#table-select')!;
    this.filterInput = root.querySelector('#filter-input')!;
    this.filterError = root.querySelector('#filter-error')!;
    this.noticeEl = root.querySelector('#app-notice')!;
    this.panesEl = root.querySelector('#panes')!;
    this.nav = root.querySelector('#pane-nav')!;
    this.navStatus = root.querySelector('#nav-status')!;

    this.select.addEventListener('change', () => {
      if (this.select.value) void this.selectTable(this.select.value);
    });
    root.querySelector('#filter-form')!.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.submitFilter(this.filterInput.value);
    });
    root.querySelector('#nav-prev')!.addEventListener('click', () => this.moveCursor(-1));
    root.querySelector('#nav-next')!.addEventListener('click', () => this.moveCursor(1));
  }

  async init(): Promise<void> {
    const listing = await this.api.listTables();
    for (const table of listing.tables) {
      const option = this.root.ownerDocument.createElement('option');
      option.value = table.id;
      option.textContent = `${table.id} (${table.company}, ${table.table_type})`;
      this.select.appendChild(option);
    }
    try {
      const projection = await this.api.projection();
      const panel = this.root.querySelector<HTMLElement>('#projection-panel')!;
      panel.hidden = false;
      renderProjection(this.root.querySelector<HTMLElement>('#projection')!, projection.points);
    } catch (error) {
      if (isAbort(error)) return;
      // projection is optional until the pipeline has run; leave the panel hidden
    }
  }

  queryPane(): Pane | null {
    return this.panes.length > 0 ? this.panes[0] : null;
  }

  neighborPanes(): Pane[] {
    return this.panes.slice(1);
  }

  private notice(message: string | null): void {
    if (message === null) {
      this.noticeEl.hidden = true;
      this.noticeEl.textContent = '';
    } else {
      this.noticeEl.hidden = false;
      this.noticeEl.textContent = message;
    }
  }

  async selectTable(id: string): Promise<void> {
    this.selectionAbort?.abort();
    this.rowAbort?.abort();
    this.filterAbort?.abort();
    const controller = new AbortController();
    this.selectionAbort = controller;
    const signal = controller.signal;

    this.state.selectedId = id;
    this.state.neighbors = [];
    this.state.cursor = 0;
    this.state.selectedRow = null;
    this.state.rowHits = [];
    this.state.filterHighlights.clear();
    this.notice(null);
    clearFilterError(this.filterError);

    try {
      const [payload, styleResult, similar] = await Promise.all([
        this.api.getTable(id, signal),
        this.fetchStyle(id, signal),
        this.api.similarTables(id, MAX_NEIGHBORS, signal),
      ]);
      const neighbors = similar.hits.slice(0, MAX_NEIGHBORS);
      const neighborPanes = await Promise.all(
        neighbors.map((hit) => this.loadNeighbor(hit, signal)),
      );
      if (signal.aborted) return;

      this.state.neighbors = neighbors;
      pruneHighlights(this.state);
      this.renderPanes(
        { payload, style: styleResult.style, styleFailed: styleResult.failed },
        neighborPanes,
        neighbors,
      );
    } catch (error) {
      if (isAbort(error) || signal.aborted) return;
      this.panes = [];
      this.panesEl.textContent = '';
      this.notice(error instanceof Error ? error.message : String(error));
    }
  }

  private async fetchStyle(
    id: string,
    signal: AbortSignal,
  ): Promise<{ style: StylePayload | null; failed: boolean }> {
    try {
      return { style: await this.api.getStyle(id, signal), failed: false };
    } catch (error) {
      if (isAbort(error)) throw error;
      return { style: null, failed: true };
    }
  }

  private async loadNeighbor(hit: TableHit, signal: AbortSignal): Promise<LoadedPane> {
    const [payload, styleResult] = await Promise.all([
      this.api.getTable(hit.table_id, signal),
      this.fetchStyle(hit.table_id, signal),
    ]);
    return { payload, style: styleResult.style, styleFailed: styleResult.failed };
  }

  private renderPanes(query: LoadedPane, neighbors: LoadedPane[], hits: TableHit[]): void {
    const doc = this.root.ownerDocument;
    this.panesEl.textContent = '';
    this.panes = [];

    const queryPane = renderTablePane(doc, query.payload, {
      css: query.style?.css ?? null,
      styleFailed: query.styleFailed,
    });
    queryPane.root.classList.add('query-pane');
    this.attachRowClicks(queryPane);
    this.panesEl.appendChild(queryPane.root);
    this.panes.push(queryPane);

    neighbors.forEach((loaded, i) => {
      const pane = renderTablePane(doc, loaded.payload, {
        css: loaded.style?.css ?? null,
        styleFailed: loaded.styleFailed,
        badge: hits[i].distance,
      });
      pane.root.classList.add('neighbor-pane');
      this.panesEl.appendChild(pane.root);
      this.panes.push(pane);
    });

    this.nav.hidden = neighbors.length === 0;
    this.updateCursorView();
  }

  private attachRowClicks(pane: Pane): void {
    pane.table.addEventListener('click', (event) => {
      const target = event.target as HTMLElement | null;
      const tr = target?.closest('tr');
      if (tr?.dataset.ordinal !== undefined) {
        void this.clickRow(Number(tr.dataset.ordinal));
      }
    });
  }

  moveCursor(delta: number): void {
    this.state.cursor = clampCursor(this.state.cursor + delta, this.state.neighbors.length);
    this.updateCursorView();
  }

  private updateCursorView(): void {
    const neighbors = this.neighborPanes();
    neighbors.forEach((pane, i) => {
      pane.root.classList.toggle('active', i === this.state.cursor);
    });
    this.navStatus.textContent =
      neighbors.length === 0 ? '' : `${this.state.cursor + 1} / ${neighbors.length}`;
    const active = neighbors[this.state.cursor];
    if (active && typeof active.root.scrollIntoView === 'function') {
      active.root.scrollIntoView({ block: 'nearest', inline: 'nearest' });
    }
  }

  async clickRow(ordinal: number): Promise<void> {
    const tableId = this.state.selectedId;
    const queryPane = this.queryPane();
    if (tableId === null || queryPane === null) return;

    this.rowAbort?.abort();
    const controller = new AbortController();
    this.rowAbort = controller;

    // previous click's shading always clears before the new result lands
    this.state.selectedRow = ordinal;
    this.state.rowHits = [];
    for (const pane of this.panes) clearRowShades(pane);
    markSelectedRow(queryPane, ordinal);
    this.notice(null);

    try {
      const result = await this.api.similarRows(
        tableId,
        ordinal,
        undefined,
        controller.signal,
      );
      if (controller.signal.aborted) return;
      this.state.rowHits = result.hits;
      const shades = rowShades(result.hits);
      for (const pane of this.panes) applyRowShades(pane, shades);
    } catch (error) {
      if (isAbort(error) || controller.signal.aborted) return;
      if (error instanceof ApiError && error.status === 422) {
        this.notice(`row ${error.row ?? ordinal}: ${error.message}`);
        return;
      }
      this.notice(error instanceof Error ? error.message : String(error));
    }
  }

  async submitFilter(text: string): Promise<void> {
    this.state.filterText = text;
    this.filterAbort?.abort();
    const controller = new AbortController();
    this.filterAbort = controller;

    clearFilterError(this.filterError);
    this.state.filterHighlights.clear();
    for (const pane of this.panes) clearCellHighlights(pane);
    if (text.trim() === '' || this.panes.length === 0) return;

    const ids = visibleTableIds(this.state);
    const settled = await Promise.allSettled(
      ids.map((id) =>
        this.api.filterTable(id, text, similarRowsFor(this.state, id), controller.signal),
      ),
    );
    if (controller.signal.aborted) return;

    let yearMissing = false;
    for (const [i, outcome] of settled.entries()) {
      if (outcome.status === 'rejected') {
        const error: unknown = outcome.reason;
        if (isAbort(error)) continue;
        if (error instanceof ApiError && error.status === 422 && error.position !== undefined) {
          // the same parse error applies to every pane; render it once
          renderFilterError(this.filterError, text, error.position, error.message);
          return;
        }
        this.notice(error instanceof Error ? error.message : String(error));
        return;
      }
      const cells = parseHighlights(outcome.value.highlights);
      this.state.filterHighlights.set(ids[i], cells);
      yearMissing = yearMissing || outcome.value.year_missing;
    }
    for (const pane of this.panes) {
      const cells = this.state.filterHighlights.get(pane.tableId);
      if (cells) applyCellHighlights(pane, cells);
    }
    this.notice(yearMissing ? 'year not present in one or more tables' : null);
  }
}
