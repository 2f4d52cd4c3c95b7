import { readFileSync } from "node:fs";
import { column, readCsv, SchemaError, Table } from "./csv.js";
import {
  Fit,
  FigureSpec,
  SpectralReportSchema,
  VerdictSchema,
} from "./schemas.js";
import { extent, Figure, fmtTick, PALETTE, ramp, Scale } from "./svg.js";

function readJson(path: string): unknown {
  try {
    return JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
}

function need(spec: FigureSpec, key: string): string {
  const path = spec.inputs[key];
  if (!path) throw new SchemaError(`figure kind ${spec.kind} needs inputs.${key}`);
  return path;
}

const log10 = (v: number, label: string): number => {
  if (!(v > 0)) throw new SchemaError(`${label}: nonpositive value ${v} on a log axis`);
  return Math.log10(v);
};

/** Log-log decay curve with the fitted power law overlaid and the slope
 * annotated to two decimals (matching the verdict's fit exponent). */
export function renderDecay(spec: FigureSpec): string {
  const col = spec.options.column ?? "E_minus_beta";
  const table = readCsv(need(spec, "series"), ["t", col]);
  const verdict = VerdictSchema.parse(readJson(need(spec, "fit")));
  const fit: Fit | undefined = verdict.fits.find((f) => f.series === col);
  if (!fit) {
    const have = verdict.fits.map((f) => f.series);
    throw new SchemaError(`no fit for series ${col} in verdict (have [${have.join(", ")}])`);
  }
  const t = column(table, "t");
  const y = column(table, col);
  const keep = t.map((_, i) => y[i] > 0);
  const lx = t.filter((_, i) => keep[i]).map((v) => log10(1 + v, "t"));
  const ly = y.filter((_, i) => keep[i]).map((v) => log10(v, col));
  const fig = Figure.forData(lx, ly);
  fig.axes({
    title: spec.options.title ?? `decay of ${col}`,
    xlabel: spec.options.xlabel ?? "log10(1 + t)",
    ylabel: spec.options.ylabel ?? `log10 ${col}`,
  });
  fig.line(lx, ly, PALETTE[0], 1.8);
  // overlay: log10 y = (intercept + exponent ln(1+t)) / ln 10
  const [w0, w1] = fit.window;
  const fx = [Math.log10(1 + w0), Math.log10(1 + w1)];
  const fy = fx.map((v) => (fit.intercept + fit.exponent * v * Math.LN10) / Math.LN10);
  fig.line(fx, fy, PALETTE[1], 1.5, "6,4");
  fig.annotate(`slope ${fit.exponent.toFixed(2)}`);
  fig.legend([
    [col, PALETTE[0]],
    ["fit", PALETTE[1]],
  ]);
  return fig.render();
}

/** Discrete eigenvalue levels with the continuum band shaded above the
 * edge and the resonance verdict annotated. */
export function renderSpectrum(spec: FigureSpec): string {
  const report = SpectralReportSchema.parse(readJson(need(spec, "report")));
  const edge = report.continuum_edge;
  const top = edge * 1.5;
  const values = [...report.eigenvalues, 0, top];
  const fig = new Figure(
    new Scale({ lo: 0, hi: 1 }, [72, 640 - 24]),
    new Scale(extent(values, 0.08), [420 - 52, 40]),
  );
  fig.axes({
    title: spec.options.title ?? `spectrum at v = ${report.v}`,
    ylabel: spec.options.ylabel ?? "eigenvalue",
    xfmt: () => "",
  });
  fig.band(edge, fig.yscale.domain.hi, PALETTE[0]);
  fig.text(fig.width - 160, fig.yscale.at(edge) - 8, `continuum from ${fmtTick(edge)}`, {
    size: 12,
    color: PALETTE[0],
  });
  report.eigenvalues.forEach((ev, i) => {
    fig.line([0.15, 0.85], [ev, ev], PALETTE[1], 2);
    fig.marker(0.5, ev, PALETTE[1], 3);
    fig.text(fig.xscale.at(0.87), fig.yscale.at(ev) + 4, fmtTick(ev), { size: 12 });
  });
  const res = report.resonance;
  fig.annotate(
    `admissible: ${report.u2_passed ? "yes" : "no"}` +
      (res ? `, edge resonance: ${res.verdict}` : ""),
  );
  return fig.render();
}

/** Field snapshot: second (and optionally third) column against the first. */
export function renderSnapshot(spec: FigureSpec): string {
  const path = need(spec, "snapshot");
  const head = readCsv(path, []);
  const cols = spec.options.columns ?? head.columns.slice(1, 3);
  const table = readCsv(path, [head.columns[0], ...cols]);
  const x = column(table, head.columns[0]);
  const series = cols.map((c) => column(table, c));
  const fig = Figure.forData(x, series.flat());
  fig.axes({
    title: spec.options.title ?? "field snapshot",
    xlabel: spec.options.xlabel ?? head.columns[0],
    ylabel: spec.options.ylabel ?? cols.join(", "),
  });
  series.forEach((s, i) => fig.line(x, s, PALETTE[i % PALETTE.length]));
  fig.legend(cols.map((c, i) => [c, PALETTE[i % PALETTE.length]] as [string, string]));
  return fig.render();
}

/** Majorant plateaus: running suprema of the time-weighted norms from the
 * norm series artifact. */
export function renderMajorant(spec: FigureSpec): string {
  const table = readCsv(need(spec, "series"), ["t", "E_minus_beta", "Linf"]);
  const t = column(table, "t");
  const m1: number[] = [];
  const m2: number[] = [];
  let a = 0;
  let b = 0;
  for (let i = 0; i < t.length; i++) {
    a = Math.max(a, Math.pow(1 + t[i], 1.5) * table.rows[i]["E_minus_beta"]);
    b = Math.max(b, Math.pow(1 + t[i], 0.5) * table.rows[i]["Linf"]);
    m1.push(a);
    m2.push(b);
  }
  const fig = Figure.forData(t, [...m1, ...m2, 0]);
  fig.axes({
    title: spec.options.title ?? "majorants",
    xlabel: spec.options.xlabel ?? "t",
    ylabel: spec.options.ylabel ?? "running supremum",
  });
  fig.line(t, m1, PALETTE[0], 1.8);
  fig.line(t, m2, PALETTE[1], 1.8);
  const last = t.length - 1;
  fig.annotate(
    `final growth m1 ${(m1[last] / m1[Math.floor(last / 10)] - 1).toFixed(3)}, ` +
      `m2 ${(m2[last] / m2[Math.floor(last / 10)] - 1).toFixed(3)}`,
  );
  fig.legend([
    ["(1+t)^{3/2} |X|", PALETTE[0]],
    ["(1+t)^{1/2} |Psi|_inf", PALETTE[1]],
  ]);
  return fig.render();
}

/** Heatmap of a sweep table over two axis columns. */
export function renderSweepHeatmap(spec: FigureSpec): string {
  const path = need(spec, "sweep");
  const head = readCsv(path, []);
  const xAxis = spec.options.x_axis ?? head.columns[0];
  const yAxis = spec.options.y_axis ?? head.columns[1];
  const value =
    spec.options.value ?? head.columns.find((c) => c.startsWith("exponent"));
  if (!value) {
    throw new SchemaError(`sweep table has no exponent column; found [${head.columns.join(", ")}]`);
  }
  const table = readCsv(path, [xAxis, yAxis, value]);
  const xs = [...new Set(column(table, xAxis))].sort((p, q) => p - q);
  const ys = [...new Set(column(table, yAxis))].sort((p, q) => p - q);
  const vals = column(table, value);
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  const fig = new Figure(
    new Scale({ lo: -0.5, hi: xs.length - 0.5 }, [72, 640 - 24]),
    new Scale({ lo: -0.5, hi: ys.length - 0.5 }, [420 - 52, 40]),
  );
  fig.axes({
    title: spec.options.title ?? `${value} over (${xAxis}, ${yAxis})`,
    xlabel: spec.options.xlabel ?? xAxis,
    ylabel: spec.options.ylabel ?? yAxis,
    xfmt: (i) => (Number.isInteger(i) && xs[i] !== undefined ? fmtTick(xs[i]) : ""),
    yfmt: (i) => (Number.isInteger(i) && ys[i] !== undefined ? fmtTick(ys[i]) : ""),
  });
  for (const row of table.rows) {
    const i = xs.indexOf(row[xAxis]);
    const j = ys.indexOf(row[yAxis]);
    const t = hi > lo ? (row[value] - lo) / (hi - lo) : 0.5;
    fig.cell(i - 0.5, i + 0.5, j - 0.5, j + 0.5, ramp(t));
    fig.text(fig.xscale.at(i), fig.yscale.at(j) + 4, fmtTick(row[value]), {
      anchor: "middle",
      size: 11,
      color: "#ffffff",
    });
  }
  return fig.render();
}

export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "decay":
      return renderDecay(spec);
    case "spectrum":
      return renderSpectrum(spec);
    case "snapshot":
      return renderSnapshot(spec);
    case "majorant":
      return renderMajorant(spec);
    case "sweep_heatmap":
      return renderSweepHeatmap(spec);
  }
}
