/**
 * Review page: reorder story blocks and preview the three presentation
 * formats. Section content is identical across formats by construction;
 * only the navigation chrome around it changes.
 */

import { escapeText } from './widgets/base.js';
import { StoryRender } from './wire.js';

export type PreviewMode = 'continuous' | 'scrollytelling' | 'stepper';

export class ReviewPage {
  order: number[];

  constructor(public render: StoryRender) {
    this.order = render.sections.map((_, i) => i);
  }

  /** Drag-reorder result; indices must be a permutation of the sections. */
  reorder(permutation: number[]): void {
    const sorted = [...permutation].sort((a, b) => a - b);
    if (
      sorted.length !== this.render.sections.length ||
      sorted.some((value, index) => value !== index)
    ) {
      throw new Error('reorder needs a permutation of every section');
    }
    this.order = [...permutation];
  }

  private sectionHtml(index: number): string {
    const section = this.render.sections[index];
    const charts = section.charts
      .map(
        (chart) =>
          `<figure class="chart-slot" data-node="${escapeText(chart.nodeId)}" ` +
          `data-chart-type="${escapeText(chart.chartSpec?.chartType ?? '')}"></figure>`,
      )
      .join('');
    return (
      `<section class="story-section" data-text-node="${escapeText(section.textNode)}">` +
      `${charts}<div class="narrative">${section.html}</div></section>`
    );
  }

  /** The format-independent content; previews differ only in chrome. */
  sectionsHtml(): string {
    return this.order.map((index) => this.sectionHtml(index)).join('\n');
  }

  preview(mode: PreviewMode): string {
    const sections = this.sectionsHtml();
    if (mode === 'continuous') {
      return `<div class="preview continuous">${sections}</div>`;
    }
    if (mode === 'scrollytelling') {
      return (
        '<div class="preview scrolly"><div class="sticky-graphic"></div>' +
        `<div class="scroll-steps">${sections}</div></div>`
      );
    }
    return (
      '<div class="preview stepper"><nav class="step-nav">' +
      this.order.map((_, i) => `<button data-step="${i}">${i + 1}</button>`).join('') +
      `</nav><div class="step-panels">${sections}</div></div>`
    );
  }
}
