/** Bar chart widget: bar click, legend click, and a 1-D brush along x. */

import { BandScale, distinctInOrder, LinearScale } from '../scales.js';
import { Callout, ChartSpec } from '../wire.js';
import { ChartWidget, escapeAttr, orderedPair, PlotBox, Row } from './base.js';

export class BarWidget extends ChartWidget {
  readonly xScale: BandScale;
  readonly yScale: LinearScale;
  readonly heights: Map<string, number>;
  private legendCategories: string[];

  constructor(spec: ChartSpec, rows: Row[], box: PlotBox) {
    super(spec, rows, box);
    const { xRange, yRange } = this.plot();
    const categories = distinctInOrder(rows.map((r) => r[spec.xAttr!]));
    this.heights = new Map(categories.map((c) => [c, 0]));
    for (const row of rows) {
      const x = row[spec.xAttr!];
      const y = row[spec.yAttr!];
      if (x === null || typeof y !== 'number') continue;
      this.heights.set(String(x), (this.heights.get(String(x)) ?? 0) + y);
    }
    this.xScale = new BandScale(categories, xRange);
    const tops = [...this.heights.values()];
    this.yScale = new LinearScale([Math.min(0, ...tops), Math.max(0, ...tops)], yRange);
    this.legendCategories = spec.colorAttr
      ? distinctInOrder(rows.map((r) => r[spec.colorAttr!]))
      : [];
  }

  svg(): string {
    const zero = this.yScale.apply(0);
    const bars = this.xScale.categories
      .map((category) => {
        const top = this.yScale.apply(this.heights.get(category) ?? 0);
        const y = Math.min(top, zero);
        const h = Math.abs(zero - top);
        return (
          `<rect x="${this.xScale.position(category).toFixed(1)}" y="${y.toFixed(1)}" ` +
          `width="${this.xScale.bandWidth().toFixed(1)}" height="${h.toFixed(1)}" ` +
          `fill="#4e79a7" data-key="${escapeAttr(category)}"></rect>`
        );
      })
      .join('');
    return this.svgShell(bars + this.legendSvg(this.legendCategories, this.box.width - 90));
  }

  clickBars(categories: string[]): Callout {
    return this.emit('discreteClick', { keys: categories });
  }

  clickLegend(categories: string[]): Callout {
    return this.emit('legendClick', { categories });
  }

  /** Horizontal pixel sweep; bounds resolve to the categories under them. */
  brushX(px0: number, px1: number): Callout {
    const [lo, hi] = orderedPair(px0, px1);
    return this.emit('brush1dX', {
      xCoordRange: [lo, hi],
      xValueRange: [this.xScale.categoryAt(lo), this.xScale.categoryAt(hi)],
    });
  }
}
