// View state and the pure helpers that turn API responses into highlight
// decisions. Nothing here computes similarity or filtering; every class
// assignment comes verbatim from server responses.

import type { RowHit, TableHit } from './api.js';

export const HIGHLIGHT_CLASSES = [
  'similar_primary',
  'similar_secondary',
  'filter_only',
  'intersection',
  'year_column',
] as const;

export type HighlightClassName = (typeof HIGHLIGHT_CLASSES)[number];

export const MAX_NEIGHBORS = 5;
export const SHADE_COUNT = 5;

export interface ViewState {
  selectedId: string | null;
  neighbors: TableHit[];
  cursor: number;
  selectedRow: number | null;
  filterText: string;
  rowHits: RowHit[];
  // per-table cell classes from the filter endpoint, keyed by table id
  filterHighlights: Map<string, Map<string, HighlightClassName[]>>;
}

export function initialState(): ViewState {
  return {
    selectedId: null,
    neighbors: [],
    cursor: 0,
    selectedRow: null,
    filterText: '',
    rowHits: [],
    filterHighlights: new Map(),
  };
}

export function clampCursor(cursor: number, neighborCount: number): number {
  if (neighborCount <= 0) return 0;
  return Math.min(Math.max(cursor, 0), neighborCount - 1);
}

export function visibleTableIds(state: ViewState): string[] {
  const ids: string[] = [];
  if (state.selectedId !== null) ids.push(state.selectedId);
  for (const hit of state.neighbors) ids.push(hit.table_id);
  return ids;
}

/** Drop highlight entries for tables that are no longer on screen. */
export function pruneHighlights(state: ViewState): void {
  const visible = new Set(visibleTableIds(state));
  for (const key of [...state.filterHighlights.keys()]) {
    if (!visible.has(key)) state.filterHighlights.delete(key);
  }
}

/** Shade class for a 0-based similarity rank; 5 fixed shades, darkest first. */
export function shadeClass(rank: number): string {
  const level = Math.min(rank, SHADE_COUNT - 1) + 1;
  return `shade-${level}`;
}

export interface RowShade {
  rank: number;
  distance: string;
}

/**
 * Rank the row-similarity hits per (table, row). Hits arrive pre-sorted by
 * distance, so array order is rank order; duplicates keep their best rank.
 */
export function rowShades(hits: RowHit[]): Map<string, RowShade> {
  const shades = new Map<string, RowShade>();
  hits.forEach((hit, rank) => {
    const key = `${hit.table_id}:${hit.row}`;
    if (!shades.has(key)) shades.set(key, { rank, distance: hit.distance });
  });
  return shades;
}

function isHighlightClass(name: string): name is HighlightClassName {
  return (HIGHLIGHT_CLASSES as readonly string[]).includes(name);
}

/**
 * Parse `row,column,class` triples into a cell lookup keyed `row:column`.
 * A cell may carry several classes (the year overlay stacks on row classes).
 * Unknown class names are ignored rather than styled arbitrarily.
 */
export function parseHighlights(triples: string[]): Map<string, HighlightClassName[]> {
  const cells = new Map<string, HighlightClassName[]>();
  for (const triple of triples) {
    const parts = triple.split(',');
    if (parts.length !== 3) continue;
    const row = Number(parts[0]);
    const column = Number(parts[1]);
    const name = parts[2];
    if (!Number.isInteger(row) || !Number.isInteger(column) || !isHighlightClass(name)) continue;
    const key = `${row}:${column}`;
    const existing = cells.get(key);
    if (existing) {
      if (!existing.includes(name)) existing.push(name);
    } else {
      cells.set(key, [name]);
    }
  }
  return cells;
}

/** Similar rows of one table, shaped for the filter endpoint's request body. */
export function similarRowsFor(state: ViewState, tableId: string): { row: number; distance: number }[] {
  return state.rowHits
    .filter((hit) => hit.table_id === tableId)
    .map((hit) => ({ row: hit.row, distance: Number(hit.distance) }));
}
