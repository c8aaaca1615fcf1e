/**
 * Console controller: binds the API client to the render layer.
 *
 * Every mutation travels through ApiClient (the four public endpoints); the
 * controller only shapes view models and re-renders.
 */

import { ApiClient, ApiError, NetworkError, SessionBusyError } from './api.js';
import {
  ConversationView,
  applySession,
  clearInterrupt,
  emptyConversation,
  registryRows,
  timelineFromSession,
  withConnection,
  withNotice,
} from './state.js';
import { renderConversation, renderRegistry, renderTimeline } from './ui.js';

export interface ConsolePanes {
  conversation: HTMLElement;
  timeline: HTMLElement;
  registry: HTMLElement;
}

export class ConsoleApp {
  view: ConversationView;

  constructor(
    private readonly api: ApiClient,
    private readonly panes: ConsolePanes,
    sessionId: string,
  ) {
    this.view = emptyConversation(sessionId);
  }

  private handlers() {
    return {
      onApprove: () => void this.answerInterrupt('yes'),
      onDeny: () => void this.answerInterrupt('no'),
      onClarify: (answer: string) => void this.answerInterrupt(answer),
    };
  }

  private paint(): void {
    renderConversation(this.panes.conversation, this.view, this.handlers());
  }

  /** Send a fresh query; rejected client-side when empty. */
  async submitQuery(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed) {
      this.view = withNotice(this.view, 'Type a query first.');
      this.paint();
      return;
    }
    await this.send(trimmed);
  }

  /** Answer the pending interrupt; detects staleness before sending. */
  async answerInterrupt(answer: string): Promise<void> {
    if (!this.view.pendingInterrupt) {
      this.view = withNotice(this.view, 'No interrupt is waiting for an answer.');
      this.paint();
      return;
    }
    try {
      const session = await this.api.session(this.view.sessionId);
      if (!session.pending_interrupt) {
        this.view = withNotice(
          clearInterrupt(applySession(this.view, session)),
          'That interrupt was already answered elsewhere.',
        );
        this.paint();
        return;
      }
    } catch (error) {
      if (!(error instanceof ApiError && error.status === 404)) {
        this.fail(error);
        return;
      }
    }
    await this.send(answer);
  }

  private async send(text: string): Promise<void> {
    this.view = withConnection(this.view, 'busy');
    this.paint();
    try {
      const response = await this.api.chat(this.view.sessionId, text);
      const interrupted = response.choices[0].finish_reason === 'interrupt';
      // the server transcript is the source of truth for message order
      const session = await this.api.session(this.view.sessionId);
      this.view = applySession(this.view, session);
      if (!interrupted) {
        // card shown iff the last response carried finish_reason=interrupt
        this.view = clearInterrupt(this.view);
      }
      this.paint();
      renderTimeline(this.panes.timeline, timelineFromSession(session));
    } catch (error) {
      this.fail(error);
    }
  }

  private fail(error: unknown): void {
    if (error instanceof SessionBusyError) {
      this.view = withNotice(this.view, 'Session is busy with another turn; try again shortly.');
    } else if (error instanceof NetworkError) {
      this.view = withNotice(this.view, 'Cannot reach the kubepilot service.');
    } else if (error instanceof ApiError) {
      this.view = withNotice(this.view, `Request failed (${error.status}).`);
    } else {
      this.view = withNotice(this.view, `Unexpected error: ${String(error)}`);
    }
    this.paint();
  }

  /** Poll the session projection into the conversation and timeline panes. */
  async refreshSession(): Promise<void> {
    try {
      const session = await this.api.session(this.view.sessionId);
      this.view = applySession(this.view, session);
      this.paint();
      renderTimeline(this.panes.timeline, timelineFromSession(session));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        return; // session not started yet: nothing to show
      }
      this.fail(error);
    }
  }

  /** Populate the registry browser, optionally filtered. */
  async browseRegistry(filter?: { agent?: string; origin?: string }): Promise<void> {
    try {
      const tools = await this.api.tools(filter);
      renderRegistry(this.panes.registry, registryRows(tools));
    } catch (error) {
      this.fail(error);
    }
  }
}
