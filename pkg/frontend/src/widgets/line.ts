/** Line chart widget: timeframe brush, series (legend) select, point click. */

import { distinctInOrder, extent, LinearScale, TemporalScale, temporalMs } from '../scales.js';
import { Callout, ChartSpec } from '../wire.js';
import { ChartWidget, escapeAttr, orderedPair, PlotBox, Row } from './base.js';

export class LineWidget extends ChartWidget {
  readonly xScale: TemporalScale;
  readonly yScale: LinearScale;
  readonly series: string[];

  constructor(spec: ChartSpec, rows: Row[], box: PlotBox) {
    super(spec, rows, box);
    const { xRange, yRange } = this.plot();
    const xValues = rows
      .map((r) => r[spec.xAttr!])
      .filter((v): v is string | number => v !== null && v !== undefined);
    this.xScale = new TemporalScale(xValues, xRange);
    this.yScale = new LinearScale(extent(this.values(spec.yAttr)), yRange);
    this.series = spec.colorAttr ? distinctInOrder(rows.map((r) => r[spec.colorAttr!])) : [];
  }

  private seriesPoints(series: string | null): Array<[number, number, string | number]> {
    const points: Array<[number, number, string | number]> = [];
    for (const row of this.rows) {
      const x = row[this.spec.xAttr!];
      const y = row[this.spec.yAttr!];
      if (x === null || x === undefined || typeof y !== 'number') continue;
      if (series !== null && String(row[this.spec.colorAttr!]) !== series) continue;
      points.push([this.xScale.apply(x), this.yScale.apply(y), x]);
    }
    points.sort((a, b) => a[0] - b[0]);
    return points;
  }

  svg(): string {
    const names: Array<string | null> = this.series.length ? this.series : [null];
    const paths = names
      .map((name) => {
        const points = this.seriesPoints(name)
          .map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`)
          .join(' ');
        const color = name === null ? '#4e79a7' : this.colorOf(name, this.series);
        return (
          `<polyline points="${points}" fill="none" stroke="${color}" stroke-width="2" ` +
          `data-series="${escapeAttr(name ?? '')}"></polyline>`
        );
      })
      .join('');
    return this.svgShell(paths + this.legendSvg(this.series, this.box.width - 70));
  }

  /** Horizontal sweep over the time axis; emits pixel and value ranges. */
  brushTimeframe(px0: number, px1: number): Callout {
    const [lo, hi] = orderedPair(px0, px1);
    const v0 = this.xScale.invert(lo);
    const v1 = this.xScale.invert(hi);
    const ordered = temporalMs(v0) <= temporalMs(v1) ? [v0, v1] : [v1, v0];
    return this.emit('timeframeBrush', { xCoordRange: [lo, hi], xValueRange: ordered });
  }

  clickLines(series: string[]): Callout {
    return this.emit('lineSelect', { categories: series });
  }

  clickTimePoints(xValues: Array<string | number>): Callout {
    return this.emit('temporalPointClick', { keys: xValues });
  }
}
