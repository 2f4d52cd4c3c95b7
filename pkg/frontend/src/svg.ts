/** Minimal deterministic SVG scene builder: linear scales, nice ticks,
 * polylines, markers, and text.  No DOM, no randomness, no timestamps, so
 * re-rendering the same inputs yields identical bytes. */

export interface Extent {
  lo: number;
  hi: number;
}

export function extent(values: number[], pad = 0.05): Extent {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!isFinite(lo) || !isFinite(hi)) throw new Error("non-finite data extent");
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  return { lo: lo - pad * span, hi: hi + pad * span };
}

export class Scale {
  constructor(
    readonly domain: Extent,
    readonly range: [number, number],
  ) {}

  at(x: number): number {
    const t = (x - this.domain.lo) / (this.domain.hi - this.domain.lo);
    return this.range[0] + t * (this.range[1] - this.range[0]);
  }

  ticks(target = 6): number[] {
    const span = this.domain.hi - this.domain.lo;
    const raw = span / target;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const norm = raw / mag;
    const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
    const start = Math.ceil(this.domain.lo / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.domain.hi + 1e-12 * span; v += step) {
      out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
    }
    return out;
  }
}

const fmt = (x: number): string => {
  if (!isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  return Number(x.toPrecision(6)).toString();
};

export const fmtTick = (x: number): string => {
  const a = Math.abs(x);
  if (a !== 0 && (a >= 1e4 || a < 1e-3)) return x.toExponential(1);
  return Number(x.toPrecision(4)).toString();
};

export const PALETTE = ["#1f6fb2", "#d1495b", "#3a7d44", "#8e6c8a", "#c77d2f"];

export class Figure {
  readonly width = 640;
  readonly height = 420;
  readonly margin = { left: 72, right: 24, top: 40, bottom: 52 };
  private body: string[] = [];

  constructor(
    readonly xscale: Scale,
    readonly yscale: Scale,
  ) {}

  static forData(xs: number[], ys: number[]): Figure {
    const f = new Figure(
      new Scale(extent(xs), [72, 640 - 24]),
      new Scale(extent(ys), [420 - 52, 40]),
    );
    return f;
  }

  add(el: string): void {
    this.body.push(el);
  }

  line(xs: number[], ys: number[], color: string, width = 1.5, dash = ""): void {
    const pts = xs.map((x, i) => `${fmt(this.xscale.at(x))},${fmt(this.yscale.at(ys[i]))}`);
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  marker(x: number, y: number, color: string, r = 4): void {
    this.add(
      `<circle cx="${fmt(this.xscale.at(x))}" cy="${fmt(this.yscale.at(y))}" r="${r}" fill="${color}"/>`,
    );
  }

  band(yLo: number, yHi: number, color: string, opacity = 0.15): void {
    const y1 = this.yscale.at(yHi);
    const y2 = this.yscale.at(yLo);
    this.add(
      `<rect x="${this.margin.left}" y="${fmt(y1)}" width="${this.width - this.margin.left - this.margin.right}" height="${fmt(y2 - y1)}" fill="${color}" opacity="${opacity}"/>`,
    );
  }

  cell(x0: number, x1: number, y0: number, y1: number, color: string): void {
    const px = this.xscale.at(x0);
    const py = this.yscale.at(y1);
    this.add(
      `<rect x="${fmt(px)}" y="${fmt(py)}" width="${fmt(this.xscale.at(x1) - px)}" height="${fmt(this.yscale.at(y0) - py)}" fill="${color}" stroke="#ffffff" stroke-width="0.5"/>`,
    );
  }

  text(x: number, y: number, s: string, opts: { anchor?: string; size?: number; color?: string } = {}): void {
    this.add(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${opts.anchor ?? "start"}" font-size="${opts.size ?? 13}" fill="${opts.color ?? "#222222"}" font-family="sans-serif">${escapeXml(s)}</text>`,
    );
  }

  annotate(s: string): void {
    this.text(this.margin.left + 12, this.margin.top + 18, s, { size: 14 });
  }

  axes(opts: { title?: string; xlabel?: string; ylabel?: string; xfmt?: (v: number) => string; yfmt?: (v: number) => string } = {}): void {
    const { left, right, top, bottom } = this.margin;
    const xf = opts.xfmt ?? fmtTick;
    const yf = opts.yfmt ?? fmtTick;
    const x0 = left;
    const x1 = this.width - right;
    const y0 = this.height - bottom;
    const y1 = top;
    this.add(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#444444"/>`);
    this.add(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#444444"/>`);
    for (const t of this.xscale.ticks()) {
      const px = this.xscale.at(t);
      this.add(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 5}" stroke="#444444"/>`);
      this.text(px, y0 + 20, xf(t), { anchor: "middle", size: 11, color: "#444444" });
    }
    for (const t of this.yscale.ticks()) {
      const py = this.yscale.at(t);
      this.add(`<line x1="${x0 - 5}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="#444444"/>`);
      this.text(x0 - 8, py + 4, yf(t), { anchor: "end", size: 11, color: "#444444" });
    }
    if (opts.title) this.text(this.width / 2, 24, opts.title, { anchor: "middle", size: 15 });
    if (opts.xlabel) this.text((x0 + x1) / 2, this.height - 14, opts.xlabel, { anchor: "middle", size: 12 });
    if (opts.ylabel)
      this.add(
        `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" fill="#222222" font-family="sans-serif" transform="rotate(-90 18 ${(y0 + y1) / 2})">${escapeXml(opts.ylabel)}</text>`,
      );
  }

  legend(entries: [string, string][]): void {
    const x = this.width - this.margin.right - 150;
    let y = this.margin.top + 10;
    for (const [label, color] of entries) {
      this.add(`<line x1="${x}" y1="${y - 4}" x2="${x + 22}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`);
      this.text(x + 28, y, label, { size: 12 });
      y += 18;
    }
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>`,
      ...this.body,
      `</svg>`,
    ].join("\n");
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Simple two-stop color ramp for heatmaps (low: blue, high: red). */
export function ramp(t: number): string {
  const clamp = Math.max(0, Math.min(1, t));
  const mix = (a: number, b: number) => Math.round(a + (b - a) * clamp);
  return `rgb(${mix(43, 209)},${mix(111, 73)},${mix(178, 91)})`;
}
