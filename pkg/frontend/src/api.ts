// Typed client for the tablesage HTTP API. Every call takes an optional
// AbortSignal so the app can cancel stale requests; distances stay the
// exact 6-decimal strings the server sends.

export interface TableSummary {
  id: string;
  company: string;
  table_type: string;
  label_id: number | null;
}

export interface CellPayload {
  column: number;
  text: string;
  kind: string;
  value: number | null;
  span: number;
}

export interface RowPayload {
  ordinal: number;
  cells: CellPayload[];
}

export interface YearColumn {
  column: number;
  year: number;
}

export interface TablePayload {
  id: string;
  company: string;
  table_type: string;
  style_ref: string;
  header: { year_columns: YearColumn[]; header_row_count: number };
  rows: RowPayload[];
}

export interface StylePayload {
  style_ref: string;
  css: string;
}

export interface TableHit {
  table_id: string;
  distance: string;
}

export interface SimilarTablesPayload {
  query: string;
  hits: TableHit[];
}

export interface RowHit {
  table_id: string;
  row: number;
  distance: string;
}

export interface SimilarRowsPayload {
  query: { table_id: string; row: number };
  candidate_tables: string[];
  hits: RowHit[];
}

export interface SimilarRowIn {
  row: number;
  distance: number;
}

export interface FilterPayload {
  table_id: string;
  expr: string;
  matched_rows: number[];
  year_columns: number[];
  year_missing: boolean;
  highlights: string[];
}

export interface ProjectionPoint {
  table_id: string;
  x: number;
  y: number;
  label_id: number;
}

interface ErrorDetail {
  message: string;
  position?: number;
  row?: number;
}

export class ApiError extends Error {
  readonly status: number;
  readonly position?: number;
  readonly row?: number;

  constructor(status: number, detail: ErrorDetail) {
    super(detail.message);
    this.name = 'ApiError';
    this.status = status;
    this.position = detail.position;
    this.row = detail.row;
  }
}

async function throwFromResponse(response: Response): Promise<never> {
  let detail: ErrorDetail = { message: `request failed with status ${response.status}` };
  try {
    const body = (await response.json()) as { detail?: ErrorDetail | string };
    if (typeof body.detail === 'string') {
      detail = { message: body.detail };
    } else if (body.detail && typeof body.detail.message === 'string') {
      detail = body.detail;
    }
  } catch {
    // non-JSON body; keep the generic message
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  private async getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await fetch(this.baseUrl + path, { signal });
    if (!response.ok) await throwFromResponse(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
      signal,
    });
    if (!response.ok) await throwFromResponse(response);
    return (await response.json()) as T;
  }

  listTables(signal?: AbortSignal): Promise<{ tables: TableSummary[] }> {
    return this.getJson('/tables', signal);
  }

  getTable(id: string, signal?: AbortSignal): Promise<TablePayload> {
    return this.getJson(`/tables/${encodeURIComponent(id)}`, signal);
  }

  getStyle(id: string, signal?: AbortSignal): Promise<StylePayload> {
    return this.getJson(`/tables/${encodeURIComponent(id)}/style`, signal);
  }

  similarTables(id: string, k?: number, signal?: AbortSignal): Promise<SimilarTablesPayload> {
    const query = k ? `?k=${k}` : '';
    return this.getJson(`/tables/${encodeURIComponent(id)}/similar${query}`, signal);
  }

  similarRows(
    id: string,
    ordinal: number,
    n?: number,
    signal?: AbortSignal,
  ): Promise<SimilarRowsPayload> {
    const query = n ? `?n=${n}` : '';
    return this.getJson(
      `/tables/${encodeURIComponent(id)}/rows/${ordinal}/similar${query}`,
      signal,
    );
  }

  filterTable(
    id: string,
    query: string,
    similarRows: SimilarRowIn[],
    signal?: AbortSignal,
  ): Promise<FilterPayload> {
    const body: { query: string; similar_rows?: SimilarRowIn[] } = { query };
    if (similarRows.length > 0) body.similar_rows = similarRows;
    return this.postJson(`/tables/${encodeURIComponent(id)}/filter`, body, signal);
  }

  projection(signal?: AbortSignal): Promise<{ points: ProjectionPoint[] }> {
    return this.getJson('/projection', signal);
  }
}
