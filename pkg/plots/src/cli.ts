#!/usr/bin/env node
/**
 * mq-plot <kind> --in <csv> [--in <csv> ...] --out <file.svg>
 *         [--x-scale linear|log] [--y-scale linear|log] [--metric NAME]
 *
 * Exit codes: 0 success (warnings go to stderr), 2 usage or data errors.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { FIGURE_KINDS, plot, type FigureKind, type FigureSpec } from "./figures.js";
import type { AxisScale } from "./svg.js";

const USAGE =
  "usage: mq-plot <kind> --in <csv> [--in <csv> ...] --out <file.svg>\n" +
  "               [--x-scale linear|log] [--y-scale linear|log]\n" +
  "               [--metric NAME]\n" +
  `  kinds: ${FIGURE_KINDS.join(", ")}\n`;

function parseScale(raw: string | undefined, flag: string):
    AxisScale | undefined {
  if (raw === undefined) return undefined;
  if (raw === "linear" || raw === "log") return raw;
  throw new Error(`${flag} must be 'linear' or 'log', got '${raw}'`);
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    const { values, positionals } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        in: { type: "string", multiple: true },
        out: { type: "string" },
        "x-scale": { type: "string" },
        "y-scale": { type: "string" },
        metric: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
    if (values.help) {
      process.stdout.write(USAGE);
      return 0;
    }
    const kind = positionals[0];
    if (positionals.length !== 1 ||
        !FIGURE_KINDS.includes(kind as FigureKind)) {
      throw new Error(`expected one figure kind out of: ${
        FIGURE_KINDS.join(", ")}`);
    }
    const inputs = values.in ?? [];
    if (inputs.length === 0) throw new Error("at least one --in CSV required");
    if (!values.out) throw new Error("--out required");
    spec = {
      kind: kind as FigureKind,
      inputs,
      output: values.out,
      xScale: parseScale(values["x-scale"], "--x-scale"),
      yScale: parseScale(values["y-scale"], "--y-scale"),
      metric: values.metric,
    };
  } catch (err) {
    process.stderr.write(`mq-plot: ${(err as Error).message}\n${USAGE}`);
    return 2;
  }

  try {
    const { warnings } = plot(spec);
    for (const w of warnings) process.stderr.write(`mq-plot: warning: ${w}\n`);
    process.stdout.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`mq-plot: ${(err as Error).message}\n`);
    return 2;
  }
}

if (process.argv[1] !== undefined &&
    import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
