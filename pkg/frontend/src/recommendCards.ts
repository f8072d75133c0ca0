/**
 * Recommendation cards for the text-node cart's visual-insights segment:
 * rationale, a validity badge, and an add-to-canvas button per card.
 */

import { escapeText } from './widgets/base.js';
import { Recommendation } from './wire.js';

export class RecommendationCards {
  constructor(
    public recommendations: Recommendation[],
    public reason: string | null = null,
  ) {}

  html(): string {
    if (!this.recommendations.length) {
      const why = this.reason ? escapeText(this.reason) : 'no recommendations';
      return `<div class="recommend-cards empty">${why}</div>`;
    }
    const cards = this.recommendations
      .map((rec, index) => {
        const badge = rec.valid
          ? '<span class="badge valid">valid</span>'
          : `<span class="badge invalid" title="${escapeText(rec.violations.join('; '))}">invalid</span>`;
        const add = rec.valid
          ? `<button data-action="add" data-index="${index}">Add to canvas</button>`
          : '';
        return (
          `<article class="recommend-card" data-index="${index}">` +
          `<header>${escapeText(rec.spec.chartType)} ${badge}</header>` +
          `<p class="rationale">${escapeText(rec.rationale)}</p>${add}</article>`
        );
      })
      .join('');
    return `<div class="recommend-cards">${cards}</div>`;
  }
}
