/** Scatterplot widget: 2-D brush, point click, legend click, trendline toggle. */

import { distinctInOrder, extent, LinearScale } from '../scales.js';
import { Callout, ChartSpec } from '../wire.js';
import { ChartWidget, escapeAttr, orderedPair, PixelRect, PlotBox, Row } from './base.js';

export class ScatterWidget extends ChartWidget {
  readonly xScale: LinearScale;
  readonly yScale: LinearScale;
  private categories: string[];

  constructor(spec: ChartSpec, rows: Row[], box: PlotBox) {
    super(spec, rows, box);
    const { xRange, yRange } = this.plot();
    this.xScale = new LinearScale(extent(this.values(spec.xAttr)), xRange);
    this.yScale = new LinearScale(extent(this.values(spec.yAttr)), yRange);
    this.categories = spec.colorAttr
      ? distinctInOrder(rows.map((r) => r[spec.colorAttr!]))
      : [];
  }

  svg(): string {
    const points = this.rows
      .map((row, i) => {
        const x = row[this.spec.xAttr!];
        const y = row[this.spec.yAttr!];
        if (typeof x !== 'number' || typeof y !== 'number') return '';
        const color = this.spec.colorAttr
          ? this.colorOf(String(row[this.spec.colorAttr]), this.categories)
          : '#4e79a7';
        const key = this.keyOf(row, i);
        return (
          `<circle cx="${this.xScale.apply(x).toFixed(1)}" cy="${this.yScale.apply(y).toFixed(1)}" ` +
          `r="4" fill="${color}" data-row="${i}" data-key="${escapeAttr(key)}"></circle>`
        );
      })
      .join('');
    return this.svgShell(points + this.legendSvg(this.categories, this.box.width - 90));
  }

  private keyOf(row: Row, index: number): string {
    const attr = this.spec.identityAttr ?? this.spec.xAttr;
    const value = attr ? row[attr] : null;
    return value === null || value === undefined ? `row ${index}` : String(value);
  }

  /** A drag rectangle in pixels; emits both pixel and value ranges. */
  brush(rect: PixelRect): Callout {
    const [px0, px1] = orderedPair(rect.x0, rect.x1);
    const [py0, py1] = orderedPair(rect.y0, rect.y1);
    // the y axis is inverted in pixel space, so the low pixel is the high value
    const xValues = orderedPair(this.xScale.invert(px0), this.xScale.invert(px1));
    const yValues = orderedPair(this.yScale.invert(py1), this.yScale.invert(py0));
    return this.emit('brush2d', {
      xCoordRange: [px0, px1],
      yCoordRange: [py0, py1],
      xValueRange: xValues,
      yValueRange: yValues,
    });
  }

  clickPoints(rowIndices: number[]): Callout {
    const keys = rowIndices.map((i) => this.keyOf(this.rows[i], i));
    return this.emit('discreteClick', { keys });
  }

  clickLegend(categories: string[]): Callout {
    return this.emit('legendClick', { categories });
  }

  toggleTrendline(): Callout {
    return this.emit('addTrendline', {});
  }
}
