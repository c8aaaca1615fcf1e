/**
 * View models and pure reducers for the console.
 *
 * The server transcript is the source of truth for message order; the
 * reducers never reorder or invent entries, and at most one pending
 * interrupt exists at a time by construction.
 */

import type { ChatResponse, PendingInterrupt, SessionView, ToolInfo } from './api.js';

export type ConnectionState = 'idle' | 'busy' | 'error';

export interface Message {
  actor: string;
  content: string;
}

export interface ConversationView {
  sessionId: string;
  messages: Message[];
  pendingInterrupt: PendingInterrupt | null;
  connection: ConnectionState;
  notice: string | null;
}

export interface TimelineStep {
  seq: number;
  actor: string;
  summary: string;
  status: string;
  checkpointCause: string;
}

export interface TimelineView {
  steps: TimelineStep[];
  sessionStatus: string;
}

export function emptyConversation(sessionId: string): ConversationView {
  return { sessionId, messages: [], pendingInterrupt: null, connection: 'idle', notice: null };
}

/** Merge the authoritative server projection into the conversation view. */
export function applySession(view: ConversationView, session: SessionView): ConversationView {
  return {
    ...view,
    messages: session.transcript.map((entry) => ({ actor: entry.actor, content: entry.content })),
    pendingInterrupt: session.pending_interrupt,
    connection: 'idle',
    notice: view.notice,
  };
}

/**
 * Record the immediate result of a chat POST. The interrupt card state is
 * driven by finish_reason: it appears iff the last response interrupted.
 */
export function applyChatResponse(
  view: ConversationView,
  userText: string,
  response: ChatResponse,
  interruptKind: PendingInterrupt['kind'] = 'clarification',
): ConversationView {
  const choice = response.choices[0];
  const messages = [
    ...view.messages,
    { actor: 'user', content: userText },
    { actor: 'assistant', content: choice.message.content },
  ];
  const pendingInterrupt: PendingInterrupt | null =
    choice.finish_reason === 'interrupt'
      ? { kind: interruptKind, prompt: choice.message.content, originating_step: 0 }
      : null;
  return { ...view, messages, pendingInterrupt, connection: 'idle', notice: null };
}

export function withNotice(view: ConversationView, notice: string): ConversationView {
  return { ...view, notice, connection: 'idle' };
}

export function withConnection(
  view: ConversationView,
  connection: ConnectionState,
): ConversationView {
  return { ...view, connection };
}

export function clearInterrupt(view: ConversationView): ConversationView {
  return { ...view, pendingInterrupt: null };
}

const ACTOR_STATUS: Record<string, string> = {
  completion: 'completed',
  failure: 'failed',
  interrupt: 'waiting',
};

/** Build the step timeline from the session projection (ascending by seq). */
export function timelineFromSession(session: SessionView): TimelineView {
  const steps = [...session.checkpoints]
    .sort((a, b) => a.seq - b.seq)
    .map((checkpoint) => ({
      seq: checkpoint.seq,
      actor: checkpoint.node_name.split(':')[0],
      summary: checkpoint.node_name,
      status: ACTOR_STATUS[checkpoint.cause] ?? 'done',
      checkpointCause: checkpoint.cause,
    }));
  return { steps, sessionStatus: session.status };
}

export interface RegistryRow {
  name: string;
  agent: string;
  description: string;
  version: number;
  badge: 'builtin' | 'generated';
}

export function registryRows(tools: ToolInfo[]): RegistryRow[] {
  return tools.map((tool) => ({
    name: tool.name,
    agent: tool.agent,
    description: tool.description,
    version: tool.version,
    badge: tool.llm_produced || tool.origin === 'generated' ? 'generated' : 'builtin',
  }));
}
