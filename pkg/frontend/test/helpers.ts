// Fixture access and an order-strict fetch stub. The fixture file is a
// recording of one scripted session against the live service; the stub
// replays it and flags any deviation in method, path, or request body.

import raw from "./fixtures/session.json";

export interface Exchange {
  name: string;
  method: string;
  path: string;
  request: unknown;
  status: number;
  response: unknown;
}

export interface Session {
  base: string;
  campaign_id: string;
  exchanges: Exchange[];
  invalid: Exchange[];
}

export const session = raw as unknown as Session;

export function exchange(name: string): Exchange {
  const found = session.exchanges.find((e) => e.name === name);
  if (!found) throw new Error(`no captured exchange named ${name}`);
  return found;
}

export function invalidCase(name: string): Exchange {
  const found = session.invalid.find((e) => e.name === name);
  if (!found) throw new Error(`no captured invalid case named ${name}`);
  return found;
}

export function requestOf<T>(e: Exchange): T {
  return e.request as T;
}

export function responseOf<T>(e: Exchange): T {
  return e.response as T;
}

function canonical(v: unknown): string {
  if (Array.isArray(v)) {
    return `[${v.map(canonical).join(",")}]`;
  }
  if (v !== null && typeof v === "object") {
    const entries = Object.entries(v as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : 1))
      .map(([k, val]) => `${JSON.stringify(k)}:${canonical(val)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(v);
}

export class FetchReplay {
  private queue: Exchange[] = [];
  errors: string[] = [];
  calls = 0;

  expect(...names: string[]): void {
    for (const name of names) this.queue.push(exchange(name));
  }

  expectRaw(e: Exchange): void {
    this.queue.push(e);
  }

  get pending(): number {
    return this.queue.length;
  }

  install(): void {
    const handler = async (url: RequestInfo | URL, init?: RequestInit) => {
      this.calls++;
      const next = this.queue.shift();
      const method = init?.method ?? "GET";
      if (!next) {
        this.errors.push(`unexpected request ${method} ${String(url)}`);
        throw new TypeError("replay queue exhausted");
      }
      if (method !== next.method || String(url) !== next.path) {
        this.errors.push(
          `expected ${next.method} ${next.path}, got ${method} ${String(url)}`);
        throw new TypeError("replay mismatch");
      }
      if (next.request !== null && next.request !== undefined) {
        const got = JSON.parse(String(init?.body ?? "null"));
        if (canonical(got) !== canonical(next.request)) {
          this.errors.push(
            `${next.name}: body ${canonical(got)} != ${canonical(next.request)}`);
          throw new TypeError("replay body mismatch");
        }
      }
      return {
        ok: next.status < 400,
        status: next.status,
        json: async () => JSON.parse(JSON.stringify(next.response)),
      } as Response;
    };
    globalThis.fetch = handler as typeof fetch;
  }
}

/** Stand-in for a dead network: every call rejects like fetch does. */
export function installBrokenFetch(): void {
  globalThis.fetch = (async () => {
    throw new TypeError("fetch failed");
  }) as typeof fetch;
}
