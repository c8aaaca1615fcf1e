/**
 * Test plumbing: a recording fetch stub that routes by method+path, and the
 * wire fixture captured from a real server run of the codegen scenario.
 */

import wire from './fixtures/codegen_wire.json';

export { wire };

export interface RecordedRequest {
  method: string;
  url: string;
  path: string;
  headers: Record<string, string>;
  body: unknown;
}

export type Route = (req: RecordedRequest, callCount: number) => { status: number; body: unknown };

export class FakeServer {
  requests: RecordedRequest[] = [];
  private counters = new Map<string, number>();
  private routes: Array<{ method: string; pattern: RegExp; route: Route }> = [];

  on(method: string, pattern: RegExp, route: Route): this {
    this.routes.push({ method, pattern, route });
    return this;
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, '');
    const method = init?.method ?? 'GET';
    const recorded: RecordedRequest = {
      method,
      url,
      path,
      headers: Object.fromEntries(
        Object.entries((init?.headers ?? {}) as Record<string, string>),
      ),
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    this.requests.push(recorded);

    for (const { method: m, pattern, route } of this.routes) {
      if (m === method && pattern.test(path)) {
        const key = `${m} ${pattern.source}`;
        const count = (this.counters.get(key) ?? 0) + 1;
        this.counters.set(key, count);
        const { status, body } = route(recorded, count);
        return new Response(JSON.stringify(body), {
          status,
          headers: { 'Content-Type': 'application/json' },
        });
      }
    }
    return new Response('not found', { status: 404 });
  };
}

/** A server that replays the captured codegen interrupt cycle. */
export function codegenCycleServer(): FakeServer {
  const server = new FakeServer();
  let resumed = false;
  server
    .on('POST', /^\/v1\/chat\/completions$/, (_req, count) => {
      if (count === 1) return wire.chat_interrupt;
      resumed = true;
      return wire.chat_resumed;
    })
    .on('GET', /^\/v1\/sessions\//, () =>
      resumed ? wire.session_completed : wire.session_awaiting,
    )
    .on('GET', /^\/v1\/tools/, (req) => {
      if (req.path.includes('origin=generated')) {
        return resumed ? wire.tools_after : wire.tools_before;
      }
      return wire.tools_all;
    })
    .on('GET', /^\/health$/, () => wire.health);
  return server;
}

export const DOCUMENTED_ENDPOINTS = [
  /^\/v1\/chat\/completions$/,
  /^\/v1\/sessions\/[^/]+$/,
  /^\/v1\/tools(\?.*)?$/,
  /^\/health$/,
];

export function assertOnlyDocumentedEndpoints(requests: RecordedRequest[]): void {
  for (const request of requests) {
    const matches = DOCUMENTED_ENDPOINTS.some((pattern) => pattern.test(request.path));
    if (!matches) {
      throw new Error(`undocumented endpoint used: ${request.method} ${request.path}`);
    }
  }
}

export function mountPanes(): { conversation: HTMLElement; timeline: HTMLElement; registry: HTMLElement } {
  document.body.innerHTML =
    '<div id="conversation"></div><div id="timeline"></div><div id="registry"></div>';
  return {
    conversation: document.getElementById('conversation')!,
    timeline: document.getElementById('timeline')!,
    registry: document.getElementById('registry')!,
  };
}
