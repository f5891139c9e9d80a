/**
 * Minimal deterministic SVG builder: fixed canvas, linear or log axes with
 * tick labels, polylines, markers, and text. No external dependencies so
 * figures render identically everywhere.
 */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 440,
  margin: { top: 40, right: 24, bottom: 56, left: 72 },
};

export type Scale = (v: number) => number;

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  if (domain[0] <= 0 || domain[1] <= 0) {
    throw new Error("log scale needs positive domain");
  }
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  return (v) => inner(Math.log10(v));
}

export function extent(values: number[], padFraction = 0.05): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v));
  if (finite.length === 0) {
    throw new Error("no finite values to scale");
  }
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFraction;
  return [lo - pad, hi + pad];
}

export function logTicks(domain: [number, number]): number[] {
  const lo = Math.ceil(Math.log10(domain[0]) - 1e-9);
  const hi = Math.floor(Math.log10(domain[1]) + 1e-9);
  const decades: number[] = [];
  for (let e = lo; e <= hi; e++) decades.push(10 ** e);
  if (decades.length >= 4) return decades;
  // narrow domain: fill in 1-2-5 mantissa ticks
  const out: number[] = [];
  for (let e = lo - 1; e <= hi + 1; e++) {
    for (const m of [1, 2, 5]) {
      const v = m * 10 ** e;
      if (v >= domain[0] * (1 - 1e-9) && v <= domain[1] * (1 + 1e-9)) out.push(v);
    }
  }
  return out.length > 0 ? out : [domain[0], domain[1]];
}

export function linearTicks(domain: [number, number], count = 5): number[] {
  const span = domain[1] - domain[0];
  const step = 10 ** Math.floor(Math.log10(span / count));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= count) ?? 10;
  const inc = step * mult;
  const start = Math.ceil(domain[0] / inc) * inc;
  const out: number[] = [];
  for (let v = start; v <= domain[1] + 1e-12 * span; v += inc) out.push(v);
  return out;
}

const fmt = (v: number): string => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(4)));
  return v.toExponential(0).replace("e+", "e").replace("e-", "e-");
};

export class Svg {
  private parts: string[] = [];

  constructor(readonly frame: Frame = DEFAULT_FRAME) {}

  get plotArea(): { x: [number, number]; y: [number, number] } {
    const { width, height, margin } = this.frame;
    return {
      x: [margin.left, width - margin.right],
      y: [height - margin.bottom, margin.top],
    };
  }

  title(text: string): void {
    this.parts.push(
      `<text x="${this.frame.width / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${escapeXml(text)}</text>`,
    );
  }

  axes(
    xScale: Scale,
    yScale: Scale,
    xTicks: number[],
    yTicks: number[],
    xLabel: string,
    yLabel: string,
  ): void {
    const { x, y } = this.plotArea;
    this.parts.push(
      `<rect x="${x[0]}" y="${y[1]}" width="${x[1] - x[0]}" height="${y[0] - y[1]}" fill="none" stroke="#444"/>`,
    );
    for (const t of xTicks) {
      const px = xScale(t);
      if (px < x[0] - 0.5 || px > x[1] + 0.5) continue;
      this.parts.push(
        `<line x1="${px.toFixed(2)}" y1="${y[0]}" x2="${px.toFixed(2)}" y2="${y[0] + 5}" stroke="#444"/>`,
        `<text x="${px.toFixed(2)}" y="${y[0] + 20}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
      );
    }
    for (const t of yTicks) {
      const py = yScale(t);
      if (py > y[0] + 0.5 || py < y[1] - 0.5) continue;
      this.parts.push(
        `<line x1="${x[0] - 5}" y1="${py.toFixed(2)}" x2="${x[0]}" y2="${py.toFixed(2)}" stroke="#444"/>`,
        `<text x="${x[0] - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x[0] + x[1]) / 2}" y="${this.frame.height - 12}" text-anchor="middle" font-size="13">${escapeXml(xLabel)}</text>`,
      `<text x="18" y="${(y[0] + y[1]) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y[0] + y[1]) / 2})">${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.8, dash = ""): void {
    const pts = xs.map((x, i) => `${x.toFixed(2)},${ys[i].toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  markers(xs: number[], ys: number[], color: string, r = 3.5): void {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${xs[i].toFixed(2)}" cy="${ys[i].toFixed(2)}" r="${r}" fill="${color}"/>`,
      );
    }
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, options: { size?: number; color?: string; anchor?: string } = {}): void {
    const { size = 13, color = "#222", anchor = "start" } = options;
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" text-anchor="${anchor}" font-size="${size}" fill="${color}">${escapeXml(content)}</text>`,
    );
  }

  legend(entries: Array<{ label: string; color: string }>): void {
    const { x, y } = this.plotArea;
    entries.forEach((entry, i) => {
      const py = y[1] + 16 + 18 * i;
      this.parts.push(
        `<line x1="${x[1] - 150}" y1="${py - 4}" x2="${x[1] - 124}" y2="${py - 4}" stroke="${entry.color}" stroke-width="2.5"/>`,
        `<text x="${x[1] - 118}" y="${py}" font-size="12">${escapeXml(entry.label)}</text>`,
      );
    });
  }

  render(): string {
    const { width, height } = this.frame;
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
