/**
 * Browser bootstrap: reads configuration from query parameters or
 * globals, mounts the three panes, and starts the timeline poller.
 */

import { ApiClient } from './api.js';
import { ConsoleApp } from './app.js';

declare global {
  interface Window {
    KUBEPILOT_BASE_URL?: string;
    KUBEPILOT_TOKEN?: string;
    KUBEPILOT_ROLE?: string;
  }
}

const POLL_INTERVAL_MS = 2000;

function required(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

export function bootstrap(): ConsoleApp {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient({
    baseUrl:
      params.get('api') ?? window.KUBEPILOT_BASE_URL ?? 'http://127.0.0.1:8080',
    token: params.get('token') ?? window.KUBEPILOT_TOKEN ?? undefined,
    role: params.get('role') ?? window.KUBEPILOT_ROLE ?? 'admin',
  });
  const sessionId =
    params.get('session') ?? `console-${Math.random().toString(36).slice(2, 10)}`;

  const app = new ConsoleApp(
    api,
    {
      conversation: required('conversation'),
      timeline: required('timeline'),
      registry: required('registry'),
    },
    sessionId,
  );

  const input = required('query-input') as HTMLInputElement;
  required('query-send').addEventListener('click', () => {
    void app.submitQuery(input.value);
    input.value = '';
  });
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') {
      void app.submitQuery(input.value);
      input.value = '';
    }
  });

  const agentFilter = required('registry-filter') as HTMLSelectElement;
  agentFilter.addEventListener('change', () => {
    const value = agentFilter.value;
    void app.browseRegistry(value ? { agent: value } : undefined);
  });

  void app.browseRegistry();
  window.setInterval(() => {
    void app.refreshSession();
    void app.browseRegistry(agentFilter.value ? { agent: agentFilter.value } : undefined);
  }, POLL_INTERVAL_MS);
  return app;
}

if (typeof document !== 'undefined' && document.getElementById('conversation')) {
  bootstrap();
}
