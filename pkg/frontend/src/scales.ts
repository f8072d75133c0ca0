/** Minimal scales for the chart renderers: linear, band, and temporal. */

export class LinearScale {
  constructor(
    public domain: [number, number],
    public range: [number, number],
  ) {}

  apply(value: number): number {
    const [d0, d1] = this.domain;
    const [r0, r1] = this.range;
    if (d1 === d0) return (r0 + r1) / 2;
    return r0 + ((value - d0) / (d1 - d0)) * (r1 - r0);
  }

  invert(px: number): number {
    const [d0, d1] = this.domain;
    const [r0, r1] = this.range;
    if (r1 === r0) return d0;
    return d0 + ((px - r0) / (r1 - r0)) * (d1 - d0);
  }
}

export class BandScale {
  readonly step: number;

  constructor(
    public categories: string[],
    public range: [number, number],
    public padding = 0.15,
  ) {
    this.step = categories.length ? (range[1] - range[0]) / categories.length : 0;
  }

  bandWidth(): number {
    return this.step * (1 - this.padding);
  }

  position(category: string): number {
    const index = this.categories.indexOf(category);
    return this.range[0] + index * this.step + (this.step * this.padding) / 2;
  }

  center(category: string): number {
    return this.position(category) + this.bandWidth() / 2;
  }

  /** Category whose band contains the pixel, clamped to the ends. */
  categoryAt(px: number): string {
    if (!this.categories.length) throw new Error('empty band scale');
    const raw = Math.floor((px - this.range[0]) / this.step);
    const index = Math.max(0, Math.min(this.categories.length - 1, raw));
    return this.categories[index];
  }
}

const YEAR_RE = /^\d{4}$/;

/** Millisecond timestamp for a temporal cell (4-digit year or ISO date). */
export function temporalMs(value: string | number): number {
  const text = String(value).trim();
  if (YEAR_RE.test(text)) return Date.UTC(Number(text), 0, 1);
  const ms = Date.parse(text);
  if (Number.isNaN(ms)) throw new Error(`not a temporal value: ${value}`);
  return ms;
}

export class TemporalScale {
  private linear: LinearScale;
  private yearStyle: boolean;

  constructor(domainValues: Array<string | number>, range: [number, number]) {
    const stamps = domainValues.map(temporalMs);
    this.linear = new LinearScale([Math.min(...stamps), Math.max(...stamps)], range);
    this.yearStyle = domainValues.every((v) => YEAR_RE.test(String(v).trim()));
  }

  apply(value: string | number): number {
    return this.linear.apply(temporalMs(value));
  }

  /** Invert to a wire-friendly axis value: a year number or an ISO date. */
  invert(px: number): string | number {
    const ms = this.linear.invert(px);
    if (this.yearStyle) return new Date(ms).getUTCFullYear();
    return new Date(ms).toISOString().slice(0, 10);
  }
}

export function extent(values: number[]): [number, number] {
  if (!values.length) throw new Error('extent of an empty list');
  return [Math.min(...values), Math.max(...values)];
}

export function distinctInOrder(values: Array<string | number | null>): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const value of values) {
    if (value === null || value === undefined) continue;
    const text = String(value);
    if (!seen.has(text)) {
      seen.add(text);
      out.push(text);
    }
  }
  return out;
}
