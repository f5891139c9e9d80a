/**
 * Figure builders: each consumes documented artifacts (report.json, metric
 * CSV tables, field snapshots) and returns an SVG string. Builders never
 * recompute metrics; annotations quote the report's own numbers.
 */

import { column, metricNumber, metricNumbers, readCsv, readField, readReport } from "./csv.js";
import type { FieldDoc, FigureSpec, Report } from "./types.js";
import { Svg, extent, linearScale, linearTicks, logScale, logTicks } from "./svg.js";

const SERIES_COLORS = ["#1f6fb4", "#d1495b", "#3a9a5c", "#8a5cb4", "#b0772a"];

async function findInput(
  spec: FigureSpec,
  matcher: (path: string) => boolean,
  description: string,
): Promise<string> {
  const hit = spec.inputs.find(matcher);
  if (!hit) {
    throw new Error(`spec needs ${description}; inputs were ${spec.inputs.join(", ")}`);
  }
  return hit;
}

/** Log-log error-versus-spacing plot, slope annotation copied from the report. */
export async function convergenceFigure(spec: FigureSpec): Promise<string> {
  const reportPath = await findInput(spec, (p) => p.endsWith(".json"), "a report.json input");
  const report = await readReport(reportPath);

  let h: number[];
  let errL1: number[];
  const csvPath = spec.inputs.find((p) => p.endsWith(".csv"));
  if (csvPath) {
    const table = await readCsv(csvPath);
    h = column(table, "h");
    errL1 = column(table, "err_l1");
  } else {
    h = metricNumbers(report, "h");
    errL1 = metricNumbers(report, "err_l1");
  }
  if (h.length < 2) {
    throw new Error(`need at least 2 resolutions to draw convergence, got ${h.length}`);
  }
  const order = metricNumber(report, "order_l1_fit");

  const svg = new Svg();
  const { x, y } = svg.plotArea;
  const xd: [number, number] = [Math.min(...h) / 1.3, Math.max(...h) * 1.3];
  const yd: [number, number] = [Math.min(...errL1) / 1.5, Math.max(...errL1) * 1.5];
  const xs = logScale(xd, x);
  const ys = logScale(yd, y);
  svg.title(`${report.name}: relative L1 error vs h`);
  svg.axes(xs, ys, logTicks(xd), logTicks(yd), "grid spacing h", "relative L1 error");
  svg.polyline(h.map(xs), errL1.map(ys), SERIES_COLORS[0]);
  svg.markers(h.map(xs), errL1.map(ys), SERIES_COLORS[0]);
  svg.text(x[0] + 14, y[1] + 20, `slope ${order.toFixed(2)}`, { size: 14, color: SERIES_COLORS[0] });
  return svg.render();
}

/** Field snapshot: profile line in 1D, shaded cell map in 2D. */
export async function snapshotFigure(spec: FigureSpec): Promise<string> {
  const fieldPath = await findInput(spec, (p) => p.endsWith(".json"), "a field snapshot JSON input");
  const field = await readField(fieldPath);
  return field.grid.n === 1 ? snapshot1d(field) : snapshot2d(field);
}

function snapshot1d(field: FieldDoc): string {
  const { lo, hi, cells, h } = field.grid;
  const xsData = Array.from({ length: cells[0] }, (_, i) => lo[0] + i * h[0]);
  const svg = new Svg();
  const { x, y } = svg.plotArea;
  const xd: [number, number] = [lo[0], hi[0]];
  const yd = extent([...field.values, 0]);
  const xScale = linearScale(xd, x);
  const yScale = linearScale(yd, y);
  svg.title("field snapshot");
  svg.axes(xScale, yScale, linearTicks(xd), linearTicks(yd), "x", "value");
  svg.polyline([x[0], x[1]], [yScale(0), yScale(0)], "#999", 1, "4 4");
  svg.polyline(xsData.map(xScale), field.values.map(yScale), SERIES_COLORS[0]);
  return svg.render();
}

function snapshot2d(field: FieldDoc): string {
  const { lo, cells, h } = field.grid;
  const [nx, ny] = cells;
  const top = Math.max(...field.values);
  const bottom = Math.min(...field.values, 0);
  const span = top - bottom || 1;
  const svg = new Svg();
  const { x, y } = svg.plotArea;
  const cellW = (x[1] - x[0]) / nx;
  const cellH = (y[0] - y[1]) / ny;
  svg.title("field snapshot");
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      const v = (field.values[i * ny + j] - bottom) / span;
      const shade = Math.round(255 - 215 * v);
      svg.rect(x[0] + i * cellW, y[0] - (j + 1) * cellH, cellW + 0.5, cellH + 0.5,
               `rgb(${shade},${shade},255)`);
    }
  }
  const xd: [number, number] = [lo[0], lo[0] + (nx - 1) * h[0]];
  const yd: [number, number] = [lo[1], lo[1] + (ny - 1) * h[1]];
  svg.axes(linearScale(xd, x), linearScale(yd, y), linearTicks(xd), linearTicks(yd), "x", "y");
  return svg.render();
}

/** Truncation-ladder curves (violation or stabilization metric vs k). */
export async function ladderFigure(spec: FigureSpec): Promise<string> {
  const reportPath = await findInput(spec, (p) => p.endsWith(".json"), "a report.json input");
  const report = await readReport(reportPath);
  const ks = metricNumbers(report, "k_ladder");
  if (ks.length < 2) {
    throw new Error(`need at least 2 ladder rungs to draw a ladder, got ${ks.length}`);
  }
  const series = ladderSeries(report);

  const svg = new Svg();
  const { x, y } = svg.plotArea;
  const xd: [number, number] = [ks[0] / 2, ks[ks.length - 1] * 2];
  const all = series.flatMap((s) => s.values).filter((v) => Number.isFinite(v));
  const yd = extent(all, 0.1);
  const xScale = logScale(xd, x);
  const yScale = linearScale(yd, y);
  svg.title(`${report.name}: truncation ladder`);
  svg.axes(xScale, yScale, logTicks(xd), linearTicks(yd), "truncation constant k", "metric");
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    svg.polyline(ks.map(xScale), s.values.map(yScale), color);
    svg.markers(ks.map(xScale), s.values.map(yScale), color);
  });
  svg.legend(series.map((s, i) => ({ label: s.label, color: SERIES_COLORS[i % SERIES_COLORS.length] })));
  return svg.render();
}

function ladderSeries(report: Report): Array<{ label: string; values: number[] }> {
  const out: Array<{ label: string; values: number[] }> = [];
  if (Array.isArray(report.metrics["violation"])) {
    out.push({ label: "violation", values: metricNumbers(report, "violation") });
  }
  const rate = report.metrics["rate"];
  if (rate && typeof rate === "object") {
    for (const [probe, values] of Object.entries(rate as Record<string, number[]>)) {
      out.push({ label: `rate ${probe}`, values: values.map(Number) });
    }
  }
  if (out.length === 0) {
    throw new Error("report carries no ladder metrics (violation/rate)");
  }
  return out;
}

/** Flat-versus-slanted stabilization curves, one per slope, with threshold. */
export async function dichotomyFigure(spec: FigureSpec): Promise<string> {
  const reportPath = await findInput(spec, (p) => p.endsWith(".json"), "a report.json input");
  const report = await readReport(reportPath);
  const ks = metricNumbers(report, "k_ladder");
  if (ks.length < 2) {
    throw new Error(`need at least 2 ladder rungs to draw the dichotomy, got ${ks.length}`);
  }
  const stab = report.metrics["stabilization"] as Record<string, number[]> | undefined;
  if (!stab || typeof stab !== "object") {
    throw new Error("report carries no stabilization metric");
  }
  const threshold = report.thresholds["stabilization"];

  const svg = new Svg();
  const { x, y } = svg.plotArea;
  const xd: [number, number] = [ks[0] / 2, ks[ks.length - 1] * 2];
  const values = Object.values(stab).flat().map(Number).filter((v) => v > 0);
  const yd: [number, number] = [Math.min(...values, threshold) / 3, Math.max(...values) * 3];
  const xScale = logScale(xd, x);
  const yScale = logScale(yd, y);
  svg.title("stabilization across the ladder: flat vs slanted");
  svg.axes(xScale, yScale, logTicks(xd), logTicks(yd), "truncation constant k",
           "|u(2k) - u(k)| / u(k) at probe");
  svg.polyline([x[0], x[1]], [yScale(threshold), yScale(threshold)], "#777", 1.2, "6 4");
  svg.text(x[1] - 6, yScale(threshold) - 6, `threshold ${threshold}`, { size: 11, color: "#777", anchor: "end" });
  const entries = Object.entries(stab);
  entries.forEach(([slope, series], i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    const ys = series.map((v) => yScale(Math.max(Number(v), yd[0])));
    svg.polyline(ks.map(xScale), ys, color);
    svg.markers(ks.map(xScale), ys, color);
  });
  svg.legend(entries.map(([slope], i) => ({
    label: `a = ${slope}`,
    color: SERIES_COLORS[i % SERIES_COLORS.length],
  })));
  return svg.render();
}

export async function buildFigure(spec: FigureSpec): Promise<string> {
  switch (spec.kind) {
    case "convergence":
      return convergenceFigure(spec);
    case "snapshot":
      return snapshotFigure(spec);
    case "ladder":
      return ladderFigure(spec);
    case "dichotomy":
      return dichotomyFigure(spec);
    default:
      throw new Error(`unknown figure kind ${JSON.stringify(spec.kind)}`);
  }
}
