/**
 * Minimal deterministic SVG renderer: fixed canvas, linear/log axes, line
 * and scatter series, vertical marker lines, legend. No timestamps, no
 * randomness — identical input data yields byte-identical SVG.
 *
 * Structure contract used by the tests: every series renders as a
 * `<g class="series" data-label="...">`, every marker line as a
 * `<line class="vline" data-label="...">`, and the axis titles as
 * `<text class="x-label">` / `<text class="y-label">`.
 */

export type AxisScale = "linear" | "log";

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
  kind: "line" | "scatter";
}

export interface VLine {
  x: number;
  label: string;
}

export interface FigureData {
  title: string;
  xLabel: string;
  yLabel: string;
  xScale: AxisScale;
  yScale: AxisScale;
  series: Series[];
  vlines: VLine[];
  warnings: string[];
}

const WIDTH = 800;
const HEIGHT = 520;
const MARGIN = { left: 72, right: 24, top: 40, bottom: 56 };
const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

/** Compact deterministic number formatting for labels and coordinates. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return String(x);
  const s = x.toPrecision(4);
  return s.includes(".") && !s.includes("e")
    ? s.replace(/\.?0+$/, "")
    : s;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

interface Domain {
  lo: number;
  hi: number;
}

function usable(v: number, scale: AxisScale): boolean {
  return Number.isFinite(v) && (scale === "linear" || v > 0);
}

function domainOf(values: number[], scale: AxisScale): Domain {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!usable(v, scale)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return scale === "log" ? { lo: 1, hi: 10 } : { lo: 0, hi: 1 };
  if (lo === hi) {
    // Degenerate span: widen symmetrically so the point sits mid-axis.
    if (scale === "log") return { lo: lo / 10, hi: hi * 10 };
    const pad = Math.abs(lo) || 1;
    return { lo: lo - pad / 2, hi: hi + pad / 2 };
  }
  if (scale === "linear" && lo > 0 && lo < hi / 4) lo = 0;
  return { lo, hi };
}

function project(v: number, d: Domain, scale: AxisScale,
                 out0: number, out1: number): number {
  let t: number;
  if (scale === "log") {
    t = (Math.log10(v) - Math.log10(d.lo)) /
        (Math.log10(d.hi) - Math.log10(d.lo));
  } else {
    t = (v - d.lo) / (d.hi - d.lo);
  }
  return out0 + t * (out1 - out0);
}

function linearTicks(d: Domain): number[] {
  const span = d.hi - d.lo;
  const rawStep = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= rawStep) {
      step = mag * m;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(d.lo / step) * step; v <= d.hi + step / 2; v += step) {
    // Snap near-zero accumulation noise.
    ticks.push(Math.abs(v) < step / 1e6 ? 0 : v);
  }
  return ticks;
}

function logTicks(d: Domain): number[] {
  const ticks: number[] = [];
  const k0 = Math.ceil(Math.log10(d.lo) - 1e-9);
  const k1 = Math.floor(Math.log10(d.hi) + 1e-9);
  for (let k = k0; k <= k1; k++) ticks.push(Math.pow(10, k));
  if (ticks.length === 0) ticks.push(d.lo, d.hi);
  return ticks;
}

function tickLabel(v: number, scale: AxisScale): string {
  if (scale === "log") {
    const k = Math.round(Math.log10(v));
    if (Math.abs(v - Math.pow(10, k)) / v < 1e-9 && (k > 3 || k < -3)) {
      return `1e${k}`;
    }
  }
  if (Math.abs(v) >= 10000 && Number.isInteger(v)) {
    const k = Math.log10(Math.abs(v));
    if (Number.isInteger(k)) return `1e${k}`;
  }
  return fmt(v);
}

export function renderSvg(fig: FigureData): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;   // svg y grows downward
  const y1 = MARGIN.top;

  const xValues: number[] = [];
  const yValues: number[] = [];
  for (const s of fig.series) {
    xValues.push(...s.xs);
    yValues.push(...s.ys);
  }
  for (const v of fig.vlines) xValues.push(v.x);
  const xDom = domainOf(xValues, fig.xScale);
  const yDom = domainOf(yValues, fig.yScale);
  const px = (v: number) => project(v, xDom, fig.xScale, x0, x1);
  const py = (v: number) => project(v, yDom, fig.yScale, y0, y1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
    `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `font-family="sans-serif" font-size="13">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text class="title" x="${WIDTH / 2}" y="24" text-anchor="middle" ` +
    `font-size="16">${esc(fig.title)}</text>`);

  // Axes, ticks, grid.
  const xTicks = fig.xScale === "log" ? logTicks(xDom) : linearTicks(xDom);
  const yTicks = fig.yScale === "log" ? logTicks(yDom) : linearTicks(yDom);
  for (const t of xTicks) {
    const x = px(t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${y1}" x2="${fmt(x)}" y2="${y0}" ` +
      `stroke="#e0e0e0"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${y0 + 20}" text-anchor="middle">` +
      `${esc(tickLabel(t, fig.xScale))}</text>`);
  }
  for (const t of yTicks) {
    const y = py(t);
    parts.push(
      `<line x1="${x0}" y1="${fmt(y)}" x2="${x1}" y2="${fmt(y)}" ` +
      `stroke="#e0e0e0"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${fmt(y + 4)}" text-anchor="end">` +
      `${esc(tickLabel(t, fig.yScale))}</text>`);
  }
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  parts.push(
    `<text class="x-label" x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" ` +
    `text-anchor="middle">${esc(fig.xLabel)}</text>`);
  parts.push(
    `<text class="y-label" x="18" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(fig.yLabel)}</text>`);

  // Marker lines.
  for (const v of fig.vlines) {
    if (!usable(v.x, fig.xScale)) continue;
    const x = fmt(px(v.x));
    parts.push(
      `<line class="vline" data-label="${esc(v.label)}" x1="${x}" ` +
      `y1="${y1}" x2="${x}" y2="${y0}" stroke="#444" ` +
      `stroke-dasharray="6 4"/>`);
    parts.push(
      `<text x="${x}" y="${y1 - 6}" text-anchor="middle" font-size="11">` +
      `${esc(v.label)}</text>`);
  }

  // Series.
  fig.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const points: string[] = [];
    for (let k = 0; k < s.xs.length; k++) {
      const vx = s.xs[k];
      const vy = s.ys[k];
      if (vx === undefined || vy === undefined) continue;
      if (!usable(vx, fig.xScale) || !usable(vy, fig.yScale)) continue;
      points.push(`${fmt(px(vx))},${fmt(py(vy))}`);
    }
    parts.push(`<g class="series" data-label="${esc(s.label)}">`);
    if (s.kind === "line") {
      parts.push(
        `<polyline points="${points.join(" ")}" fill="none" ` +
        `stroke="${color}" stroke-width="1.8"/>`);
    } else {
      for (const pt of points) {
        const [cx, cy] = pt.split(",");
        parts.push(
          `<circle cx="${cx}" cy="${cy}" r="4" fill="${color}" ` +
          `fill-opacity="0.75"/>`);
      }
    }
    parts.push(`</g>`);
  });

  // Legend, top-right inside the plot area.
  fig.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = y1 + 16 + 18 * i;
    parts.push(
      `<rect x="${x1 - 190}" y="${y - 10}" width="12" height="12" ` +
      `fill="${color}"/>`);
    parts.push(
      `<text class="legend" x="${x1 - 172}" y="${y}">${esc(s.label)}</text>`);
  });

  if (fig.series.every((s) => s.xs.length === 0) && fig.series.length === 0) {
    parts.push(
      `<text class="no-data" x="${(x0 + x1) / 2}" y="${(y0 + y1) / 2}" ` +
      `text-anchor="middle" fill="#888">no data</text>`);
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
