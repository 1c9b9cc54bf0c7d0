// Shared fixtures: canned API payloads and a fetch stub with routable
// endpoints. The stub honors AbortSignal so cancellation paths can be
// exercised deterministically.

import type { CellPayload, RowPayload, TablePayload } from '../src/api.js';

export function makeTable(id: string, company = 'acme', tableType = 'profitloss'): TablePayload {
  const header: RowPayload = {
    ordinal: 0,
    cells: [
      { column: 0, text: 'Concept', kind: 'text', value: null, span: 1 },
      { column: 1, text: '2015', kind: 'year', value: 2015, span: 1 },
      { column: 2, text: '2016', kind: 'year', value: 2016, span: 1 },
    ],
  };
  const body: RowPayload[] = [1, 2, 3, 4, 5].map((ordinal) => ({
    ordinal,
    cells: [
      { column: 0, text: `line ${ordinal}`, kind: 'text', value: null, span: 1 },
      { column: 1, text: String(ordinal * 100), kind: 'number', value: ordinal * 100, span: 1 },
      { column: 2, text: String(ordinal * 110), kind: 'number', value: ordinal * 110, span: 1 },
    ] satisfies CellPayload[],
  }));
  return {
    id,
    company,
    table_type: tableType,
    style_ref: `${company}.css`,
    header: {
      year_columns: [
        { column: 1, year: 2015 },
        { column: 2, year: 2016 },
      ],
      header_row_count: 1,
    },
    rows: [header, ...body],
  };
}

export interface MockResult {
  status?: number;
  json: unknown;
}

type Handler = (url: URL, body: unknown) => MockResult | Promise<MockResult>;

export interface RecordedCall {
  method: string;
  path: string;
  search: string;
  body: unknown;
}

function jsonResponse(status: number, json: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => json,
  } as unknown as Response;
}

function abortError(): DOMException {
  return new DOMException('The operation was aborted.', 'AbortError');
}

function raceAbort<T>(promise: Promise<T>, signal?: AbortSignal): Promise<T> {
  if (!signal) return promise;
  if (signal.aborted) return Promise.reject(abortError());
  return new Promise<T>((resolve, reject) => {
    const onAbort = () => reject(abortError());
    signal.addEventListener('abort', onAbort, { once: true });
    promise.then(
      (value) => {
        signal.removeEventListener('abort', onAbort);
        resolve(value);
      },
      (error: unknown) => {
        signal.removeEventListener('abort', onAbort);
        reject(error);
      },
    );
  });
}

export class MockApi {
  readonly calls: RecordedCall[] = [];
  private readonly routes = new Map<string, Handler>();

  route(method: string, path: string, result: MockResult | Handler): this {
    const handler = typeof result === 'function' ? result : () => result;
    this.routes.set(`${method} ${path}`, handler);
    return this;
  }

  /** Register table, style and an empty-similar route for one table. */
  table(payload: TablePayload, css = 'td { color: #222; }'): this {
    this.route('GET', `/tables/${payload.id}`, { json: payload });
    this.route('GET', `/tables/${payload.id}/style`, {
      json: { style_ref: payload.style_ref, css },
    });
    return this;
  }

  callsTo(method: string, path: string): RecordedCall[] {
    return this.calls.filter((c) => c.method === method && c.path === path);
  }

  readonly fetch = (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), 'http://mock.test');
    const method = init?.method ?? 'GET';
    const body = typeof init?.body === 'string' ? (JSON.parse(init.body) as unknown) : undefined;
    this.calls.push({ method, path: url.pathname, search: url.search, body });
    const handler = this.routes.get(`${method} ${url.pathname}`);
    const result: Promise<MockResult> = handler
      ? Promise.resolve(handler(url, body))
      : Promise.resolve({
          status: 404,
          json: { detail: { message: `no route for ${method} ${url.pathname}` } },
        });
    const signal = init?.signal ?? undefined;
    return raceAbort(
      result.then((r) => jsonResponse(r.status ?? 200, r.json)),
      signal,
    );
  };
}

export function deferred<T>(): { promise: Promise<T>; resolve: (value: T) => void } {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((res) => {
    resolve = res;
  });
  return { promise, resolve };
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}
