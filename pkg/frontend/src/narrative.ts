/**
 * Narrative controls for a text node: Tab-triggered generation, the
 * accept/reject decision, and the shorten/expand/regenerate/custom buttons.
 * The displayed narrative is always the server's text, character for
 * character; this component only manages state around it.
 */

import { ApiClient } from './api.js';
import { escapeText } from './widgets/base.js';
import { Narrative } from './wire.js';

export type NarrativePhase = 'idle' | 'generating' | 'pending' | 'accepted' | 'rejected';

export class NarrativeControls {
  phase: NarrativePhase = 'idle';
  narrative: Narrative | null = null;
  error: string | null = null;

  constructor(
    private api: ApiClient,
    public readonly nodeId: string,
  ) {}

  /** Bound to the Tab key inside the text editor. */
  async generate(): Promise<void> {
    this.phase = 'generating';
    this.error = null;
    try {
      this.narrative = await this.api.generateNarrative(this.nodeId);
      this.phase = 'pending';
    } catch (err) {
      this.phase = 'idle';
      this.error = err instanceof Error ? err.message : String(err);
    }
  }

  async accept(): Promise<void> {
    if (this.phase !== 'pending') throw new Error('no pending narrative to accept');
    this.narrative = await this.api.acceptNarrative(this.nodeId, true);
    this.phase = 'accepted';
  }

  async reject(): Promise<void> {
    if (this.phase !== 'pending') throw new Error('no pending narrative to reject');
    this.narrative = await this.api.acceptNarrative(this.nodeId, false);
    this.phase = 'rejected';
  }

  async revise(
    mode: 'shorten' | 'expand' | 'regenerate' | 'custom',
    span: [number, number],
    instruction = '',
  ): Promise<void> {
    if (this.phase !== 'accepted') throw new Error('accept the narrative before revising');
    this.narrative = await this.api.reviseNarrative(this.nodeId, mode, span, instruction);
  }

  text(): string {
    return this.narrative?.text ?? '';
  }

  html(): string {
    const banner =
      this.phase === 'generating'
        ? '<div class="banner generating">Generating…</div>'
        : this.phase === 'pending'
          ? '<div class="banner pending">Review the draft below.</div>'
          : '';
    const error = this.error ? `<div class="banner error">${escapeText(this.error)}</div>` : '';
    const decision =
      this.phase === 'pending'
        ? '<button data-action="accept">Accept</button><button data-action="reject">Reject</button>'
        : '';
    const revisions =
      this.phase === 'accepted'
        ? '<button data-action="shorten">Shorten</button>' +
          '<button data-action="expand">Expand</button>' +
          '<button data-action="regenerate">Regenerate</button>' +
          '<input class="custom-instruction" placeholder="Custom instruction">' +
          '<button data-action="custom">Apply</button>'
        : '';
    const body = this.narrative
      ? `<div class="narrative-text">${escapeText(this.narrative.text)}</div>`
      : '';
    return `<div class="narrative-controls">${banner}${error}${body}${decision}${revisions}</div>`;
  }
}
