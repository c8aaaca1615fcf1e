/**
 * DOM rendering. Render functions are pure over their inputs: they replace
 * the contents of a container from a view model and wire callbacks.
 */

import type { ConversationView, RegistryRow, TimelineView } from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface InterruptHandlers {
  onApprove: () => void;
  onDeny: () => void;
  onClarify: (answer: string) => void;
}

export function renderConversation(
  container: HTMLElement,
  view: ConversationView,
  handlers: InterruptHandlers,
): void {
  container.replaceChildren();

  if (view.notice) {
    const banner = el('div', 'banner', view.notice);
    banner.dataset.testid = 'notice';
    container.append(banner);
  }

  const list = el('div', 'messages');
  list.dataset.testid = 'messages';
  for (const message of view.messages) {
    const row = el('div', `message ${message.actor.split(':')[0]}`);
    row.append(el('span', 'actor', message.actor));
    row.append(el('pre', 'content', message.content));
    list.append(row);
  }
  container.append(list);

  if (view.pendingInterrupt) {
    container.append(renderInterruptCard(view.pendingInterrupt.kind, view.pendingInterrupt.prompt, handlers));
  }

  if (view.connection === 'busy') {
    const busy = el('div', 'busy', 'working...');
    busy.dataset.testid = 'busy';
    container.append(busy);
  }
}

function renderInterruptCard(
  kind: 'clarification' | 'approval',
  prompt: string,
  handlers: InterruptHandlers,
): HTMLElement {
  const card = el('div', `interrupt-card ${kind}`);
  card.dataset.testid = 'interrupt-card';
  card.dataset.kind = kind;
  card.append(el('p', 'prompt', prompt));

  if (kind === 'approval') {
    const approve = el('button', 'approve', 'Approve');
    approve.dataset.testid = 'approve';
    approve.addEventListener('click', handlers.onApprove);
    const deny = el('button', 'deny', 'Deny');
    deny.dataset.testid = 'deny';
    deny.addEventListener('click', handlers.onDeny);
    card.append(approve, deny);
  } else {
    const input = el('input', 'clarify-input');
    input.dataset.testid = 'clarify-input';
    input.placeholder = 'Type your answer';
    const send = el('button', 'clarify-send', 'Answer');
    send.dataset.testid = 'clarify-send';
    send.addEventListener('click', () => {
      if (input.value.trim().length > 0) handlers.onClarify(input.value.trim());
    });
    card.append(input, send);
  }
  return card;
}

export function renderTimeline(container: HTMLElement, timeline: TimelineView): void {
  container.replaceChildren();
  const header = el('div', 'timeline-status', `session: ${timeline.sessionStatus}`);
  header.dataset.testid = 'timeline-status';
  container.append(header);

  const list = el('ol', 'timeline');
  list.dataset.testid = 'timeline';
  for (const step of timeline.steps) {
    const item = el('li', `step ${step.status}`);
    item.dataset.seq = String(step.seq);
    item.append(el('span', 'seq', `#${step.seq}`));
    item.append(el('span', 'summary', step.summary));
    item.append(el('span', `marker ${step.checkpointCause}`, step.checkpointCause));
    list.append(item);
  }
  container.append(list);
}

export function renderRegistry(container: HTMLElement, rows: RegistryRow[]): void {
  container.replaceChildren();
  const table = el('table', 'registry');
  table.dataset.testid = 'registry';
  const head = el('tr');
  for (const title of ['Tool', 'Agent', 'Origin', 'Version', 'Description']) {
    head.append(el('th', undefined, title));
  }
  table.append(head);
  for (const row of rows) {
    const tr = el('tr', 'tool-row');
    tr.dataset.tool = row.name;
    tr.append(el('td', 'name', row.name));
    tr.append(el('td', 'agent', row.agent));
    const badge = el('span', `badge ${row.badge}`, row.badge);
    badge.dataset.testid = `badge-${row.name}`;
    const origin = el('td', 'origin');
    origin.append(badge);
    tr.append(origin);
    tr.append(el('td', 'version', `v${row.version}`));
    tr.append(el('td', 'description', row.description));
    table.append(tr);
  }
  container.append(table);
}
