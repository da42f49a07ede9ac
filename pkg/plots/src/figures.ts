/**
 * Figure builders over the benchmark CSV contract.
 *
 * quality-theory    rank-error survival distribution from a simulate
 *                   histogram, with the geometric (1-s)^i overlay and the
 *                   two-choice long-run mean marker; both overlays are
 *                   computed from the CSV's config echo, never hard-coded.
 * binned-quantiles  mean + q25/q50/q75/q100 of one replay metric per time
 *                   bin, from a replay bins file.
 * pareto            throughput vs. mean rank error scatter, one series per
 *                   input summary CSV.
 * scaling           throughput vs. thread count, grouped by run label
 *                   across input summary CSVs.
 */

import { writeFileSync } from "node:fs";

import {
  columnIndex,
  configNumber,
  numericCell,
  readCsvFile,
  runLabel,
  type CsvTable,
} from "./csv.js";
import { renderSvg, type AxisScale, type FigureData, type Series } from "./svg.js";

export type FigureKind =
  | "quality-theory"
  | "binned-quantiles"
  | "pareto"
  | "scaling";

export const FIGURE_KINDS: readonly FigureKind[] = [
  "quality-theory", "binned-quantiles", "pareto", "scaling",
];

export interface FigureSpec {
  kind: FigureKind;
  /** Input CSV paths; quality-theory and binned-quantiles use exactly one. */
  inputs: string[];
  /** Output SVG path. */
  output: string;
  xScale?: AxisScale;
  yScale?: AxisScale;
  /** binned-quantiles: which replay metric to plot (default rank_error). */
  metric?: string;
}

function emptyWarning(table: CsvTable, what: string): string {
  return `${table.path}: no ${what} rows, rendering empty axes`;
}

function singleInput(spec: FigureSpec): CsvTable {
  if (spec.inputs.length !== 1) {
    throw new Error(
      `${spec.kind} takes exactly one input CSV, got ${spec.inputs.length}`);
  }
  const path = spec.inputs[0];
  if (path === undefined) throw new Error(`${spec.kind}: no input CSV`);
  return readCsvFile(path);
}

/** Survival function P(X >= i) over a value,count histogram. */
function survival(values: number[], counts: number[]):
    { xs: number[]; ys: number[] } {
  const order = values.map((_, i) => i).sort((a, b) => values[a]! - values[b]!);
  const total = counts.reduce((a, b) => a + b, 0);
  const xs: number[] = [];
  const ys: number[] = [];
  let seen = 0;
  for (const i of order) {
    xs.push(values[i]!);
    ys.push((total - seen) / total);   // P(X >= value), value ascending
    seen += counts[i]!;
  }
  return { xs, ys };
}

function buildQualityTheory(spec: FigureSpec): FigureData {
  const table = singleInput(spec);
  const metricCol = columnIndex(table, "metric");
  const valueCol = columnIndex(table, "value");
  const countCol = columnIndex(table, "count");

  const values: number[] = [];
  const counts: number[] = [];
  for (const row of table.rows) {
    if (row[metricCol] !== "rank_error") continue;
    const v = numericCell(table, row, valueCol);
    const c = numericCell(table, row, countCol);
    if (v !== null && c !== null) {
      values.push(v);
      counts.push(c);
    }
  }

  const series: Series[] = [];
  const vlines: FigureData["vlines"] = [];
  const warnings: string[] = [];
  if (values.length === 0) {
    warnings.push(emptyWarning(table, "rank_error histogram"));
  } else {
    const emp = survival(values, counts);
    series.push({ label: "empirical P(R >= i)", kind: "line", ...emp });

    // Model overlays from the echoed configuration.
    const queues = configNumber(table, "queues");
    const candidates = configNumber(table, "candidates");
    const s = candidates / queues;
    const top = Math.max(...values);
    const xs: number[] = [];
    const ys: number[] = [];
    for (let i = 0; i <= top; i++) {
      xs.push(i);
      ys.push(Math.pow(1 - s, i));
    }
    series.push({ label: "geometric (1-s)^i", kind: "line", xs, ys });
    const cp = queues;
    vlines.push({
      x: (5 / 6) * cp - 1 + 1 / (6 * cp),
      label: "two-choice mean",
    });
  }

  return {
    title: "Rank error distribution vs. theory",
    xLabel: "rank error",
    yLabel: "cumulative frequency P(R >= i)",
    xScale: spec.xScale ?? "linear",
    yScale: spec.yScale ?? "log",
    series,
    vlines,
    warnings,
  };
}

const QUANTILE_COLUMNS = ["mean", "q25", "q50", "q75", "q100"] as const;

function buildBinnedQuantiles(spec: FigureSpec): FigureData {
  const table = singleInput(spec);
  const metric = spec.metric ?? "rank_error";
  const metricCol = columnIndex(table, "metric");
  const binCol = columnIndex(table, "bin");
  const columns = QUANTILE_COLUMNS.map((name) => columnIndex(table, name));

  const bins: number[] = [];
  const data: number[][] = QUANTILE_COLUMNS.map(() => []);
  for (const row of table.rows) {
    if (row[metricCol] !== metric) continue;
    const bin = numericCell(table, row, binCol);
    if (bin === null) continue;
    bins.push(bin);
    columns.forEach((col, i) => {
      const v = numericCell(table, row, col);
      data[i]!.push(v === null ? NaN : v);
    });
  }

  const warnings: string[] = [];
  let series: Series[] = QUANTILE_COLUMNS.map((label, i) => ({
    label,
    kind: "line" as const,
    xs: bins,
    ys: data[i]!,
  }));
  if (bins.length === 0) {
    warnings.push(emptyWarning(table, `'${metric}'`));
    series = [];
  }

  return {
    title: `Binned ${metric.replace("_", " ")} over time`,
    xLabel: "bin",
    yLabel: metric.replace("_", " "),
    xScale: spec.xScale ?? "linear",
    yScale: spec.yScale ?? "linear",
    series,
    vlines: [],
    warnings,
  };
}

function buildPareto(spec: FigureSpec): FigureData {
  const series: Series[] = [];
  const warnings: string[] = [];
  for (const path of spec.inputs) {
    const table = readCsvFile(path);
    const tputCol = columnIndex(table, "throughput");
    const qualityCol = columnIndex(table, "mean_rank_error");
    const xs: number[] = [];
    const ys: number[] = [];
    for (const row of table.rows) {
      const quality = numericCell(table, row, qualityCol);
      if (quality === null) continue;   // rep without quality measurement
      const tput = numericCell(table, row, tputCol);
      if (tput === null) continue;
      xs.push(tput);
      ys.push(quality);
    }
    if (xs.length === 0) warnings.push(emptyWarning(table, "quality"));
    series.push({ label: runLabel(table), kind: "scatter", xs, ys });
  }
  if (spec.inputs.length === 0) warnings.push("no input CSVs");

  return {
    title: "Throughput vs. quality",
    xLabel: "throughput (ops/s)",
    yLabel: "mean rank error",
    xScale: spec.xScale ?? "linear",
    yScale: spec.yScale ?? "log",
    series,
    vlines: [],
    warnings,
  };
}

function buildScaling(spec: FigureSpec): FigureData {
  // One (threads, mean throughput) point per file, grouped by run label.
  const groups = new Map<string, { threads: number; tput: number }[]>();
  const warnings: string[] = [];
  for (const path of spec.inputs) {
    const table = readCsvFile(path);
    const tputCol = columnIndex(table, "throughput");
    const tputs: number[] = [];
    for (const row of table.rows) {
      const v = numericCell(table, row, tputCol);
      if (v !== null) tputs.push(v);
    }
    if (tputs.length === 0) {
      warnings.push(emptyWarning(table, "throughput"));
      continue;
    }
    const threads = configNumber(table, "threads");
    const mean = tputs.reduce((a, b) => a + b, 0) / tputs.length;
    const label = runLabel(table);
    const group = groups.get(label) ?? [];
    group.push({ threads, tput: mean });
    groups.set(label, group);
  }
  if (spec.inputs.length === 0) warnings.push("no input CSVs");

  const series: Series[] = [];
  for (const [label, points] of groups) {
    points.sort((a, b) => a.threads - b.threads);
    series.push({
      label,
      kind: "line",
      xs: points.map((p) => p.threads),
      ys: points.map((p) => p.tput),
    });
  }

  return {
    title: "Thread scaling",
    xLabel: "threads",
    yLabel: "throughput (ops/s)",
    xScale: spec.xScale ?? "linear",
    yScale: spec.yScale ?? "linear",
    series,
    vlines: [],
    warnings,
  };
}

/** Pure figure assembly; rendering and file writing live in plot(). */
export function buildFigure(spec: FigureSpec): FigureData {
  switch (spec.kind) {
    case "quality-theory":
      return buildQualityTheory(spec);
    case "binned-quantiles":
      return buildBinnedQuantiles(spec);
    case "pareto":
      return buildPareto(spec);
    case "scaling":
      return buildScaling(spec);
    default:
      throw new Error(`unknown figure kind '${(spec as FigureSpec).kind}'`);
  }
}

export interface PlotResult {
  svg: string;
  warnings: string[];
}

export function plot(spec: FigureSpec): PlotResult {
  const fig = buildFigure(spec);
  const svg = renderSvg(fig);
  writeFileSync(spec.output, svg);
  return { svg, warnings: fig.warnings };
}
