/**
 * Typed client for the kubepilot API.
 *
 * The console talks to exactly four endpoints; every state transition goes
 * through this module so tests can verify the whole surface by intercepting
 * fetch.
 */

export interface ApiConfig {
  baseUrl: string;
  token?: string;
  role?: string;
}

export interface ChatMessage {
  role: string;
  content: string;
}

export interface ChatChoice {
  index: number;
  message: ChatMessage;
  finish_reason: 'stop' | 'interrupt';
}

export interface ChatResponse {
  id: string;
  choices: ChatChoice[];
}

export interface TranscriptEntry {
  actor: string;
  content: string;
}

export interface PendingInterrupt {
  kind: 'clarification' | 'approval';
  prompt: string;
  originating_step: number;
}

export interface CheckpointSummary {
  seq: number;
  node_name: string;
  cause: string;
  created_at: number;
}

export interface SessionView {
  session_id: string;
  status: string;
  turn_index: number;
  transcript: TranscriptEntry[];
  pending_interrupt: PendingInterrupt | null;
  checkpoints: CheckpointSummary[];
}

export interface ToolInfo {
  name: string;
  description: string;
  agent: string;
  origin: 'builtin' | 'generated';
  version: number;
  llm_produced: boolean;
}

export interface HealthView {
  status: 'ok' | 'degraded';
  components: Record<string, boolean>;
}

/** Transport-level failure (server unreachable, connection dropped). */
export class NetworkError extends Error {}

/** Non-2xx response; status is preserved for the caller. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** The session is mid-turn (HTTP 409); retry after it settles. */
export class SessionBusyError extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly config: ApiConfig,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private headers(sessionId?: string): Record<string, string> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (sessionId) headers['X-Session-Id'] = sessionId;
    if (this.config.token) headers['Authorization'] = `Bearer ${this.config.token}`;
    else if (this.config.role) headers['X-Role'] = this.config.role;
    return headers;
  }

  private async request(path: string, init: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.config.baseUrl}${path}`, init);
    } catch (error) {
      throw new NetworkError(`cannot reach ${this.config.baseUrl}: ${String(error)}`);
    }
    if (response.status === 409) {
      throw new SessionBusyError(await response.text());
    }
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return response;
  }

  /** POST /v1/chat/completions — run a turn or answer a pending interrupt. */
  async chat(sessionId: string, text: string): Promise<ChatResponse> {
    const response = await this.request('/v1/chat/completions', {
      method: 'POST',
      headers: this.headers(sessionId),
      body: JSON.stringify({
        model: 'kubepilot',
        messages: [{ role: 'user', content: text }],
      }),
    });
    return (await response.json()) as ChatResponse;
  }

  /** GET /v1/sessions/{id} — transcript, checkpoints, pending interrupt. */
  async session(sessionId: string): Promise<SessionView> {
    const response = await this.request(`/v1/sessions/${encodeURIComponent(sessionId)}`, {
      method: 'GET',
      headers: this.headers(),
    });
    return (await response.json()) as SessionView;
  }

  /** GET /v1/tools — registry browser, optionally filtered. */
  async tools(filter?: { agent?: string; origin?: string }): Promise<ToolInfo[]> {
    const params = new URLSearchParams();
    if (filter?.agent) params.set('agent', filter.agent);
    if (filter?.origin) params.set('origin', filter.origin);
    const suffix = params.size > 0 ? `?${params.toString()}` : '';
    const response = await this.request(`/v1/tools${suffix}`, {
      method: 'GET',
      headers: this.headers(),
    });
    const body = (await response.json()) as { tools: ToolInfo[] };
    return body.tools;
  }

  /** GET /health — readiness of provider, checkpoint store, registry. */
  async health(): Promise<HealthView> {
    const response = await this.request('/health', { method: 'GET', headers: this.headers() });
    return (await response.json()) as HealthView;
  }
}
