/**
 * Chart widget plumbing shared by the six family renderers.
 *
 * A widget owns one rendered chart plus its gesture handlers. Each family
 * class exposes only the gesture methods that are legal for that chart type,
 * so an illegal callout is unrepresentable at compile time. Every emitted
 * callout is validated against the wire schema before it is returned.
 */

import { Callout, CalloutSchema, ChartSpec, parseWire } from '../wire.js';

export type Row = Record<string, string | number | null>;

export interface PlotBox {
  width: number;
  height: number;
  marginLeft?: number;
  marginRight?: number;
  marginTop?: number;
  marginBottom?: number;
}

export interface PixelRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export const PALETTE = [
  '#4e79a7',
  '#f28e2b',
  '#e15759',
  '#76b7b2',
  '#59a14f',
  '#edc948',
  '#b07aa1',
  '#ff9da7',
];

export abstract class ChartWidget {
  readonly chartId: string;

  protected constructor(
    public readonly spec: ChartSpec,
    public readonly rows: Row[],
    public readonly box: PlotBox,
  ) {
    if (!spec.id) throw new Error('a chart widget needs a spec with an id');
    this.chartId = spec.id;
  }

  protected plot() {
    const left = this.box.marginLeft ?? 40;
    const right = this.box.marginRight ?? 16;
    const top = this.box.marginTop ?? 16;
    const bottom = this.box.marginBottom ?? 28;
    return {
      left,
      top,
      width: this.box.width - left - right,
      height: this.box.height - top - bottom,
      xRange: [left, this.box.width - right] as [number, number],
      // pixel y grows downward; value axes grow upward
      yRange: [this.box.height - bottom, top] as [number, number],
    };
  }

  protected emit(kind: Callout['kind'], params: unknown): Callout {
    return parseWire(CalloutSchema, { chartId: this.chartId, kind, params }, `${kind} callout`);
  }

  protected values(column: string | null | undefined): number[] {
    if (!column) return [];
    return this.rows
      .map((row) => row[column])
      .filter((v): v is number => typeof v === 'number');
  }

  protected svgShell(body: string): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.box.width}" ` +
      `height="${this.box.height}" viewBox="0 0 ${this.box.width} ${this.box.height}" ` +
      `role="img" data-chart="${this.spec.chartType}">${body}</svg>`
    );
  }

  protected colorOf(category: string, categories: string[]): string {
    const index = Math.max(0, categories.indexOf(category));
    return PALETTE[index % PALETTE.length];
  }

  protected legendSvg(categories: string[], x: number): string {
    return categories
      .map((category, i) => {
        const y = 14 + i * 16;
        const color = this.colorOf(category, categories);
        return (
          `<g class="legend-item" data-category="${escapeAttr(category)}">` +
          `<rect x="${x}" y="${y - 8}" width="9" height="9" fill="${color}"></rect>` +
          `<text x="${x + 13}" y="${y}" font-size="10">${escapeText(category)}</text></g>`
        );
      })
      .join('');
  }

  abstract svg(): string;
}

export function escapeText(value: unknown): string {
  return String(value).replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function escapeAttr(value: unknown): string {
  return escapeText(value).replace(/"/g, '&quot;');
}

export function orderedPair(a: number, b: number): [number, number] {
  return a <= b ? [a, b] : [b, a];
}
