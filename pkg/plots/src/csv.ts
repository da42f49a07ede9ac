/**
 * Reader for the benchmark CLI's CSV contract: `# key=value` comment lines
 * echoing the run configuration (fixed key order), one header row, then
 * comma-separated data rows. Cells are plain numbers or empty strings; the
 * writer never quotes, so no quoting rules apply here.
 */

import { readFileSync } from "node:fs";

export interface CsvTable {
  /** Where the table came from, for diagnostics. */
  path: string;
  /** Configuration echoed by the producing run. */
  config: Record<string, string>;
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, path = "<memory>"): CsvTable {
  const config: Record<string, string> = {};
  let header: string[] = [];
  const rows: string[][] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trimEnd();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const eq = body.indexOf("=");
      if (eq >= 0) config[body.slice(0, eq).trim()] = body.slice(eq + 1);
      continue;
    }
    if (header.length === 0) {
      header = line.split(",");
    } else {
      rows.push(line.split(","));
    }
  }
  return { path, config, header, rows };
}

export function readCsvFile(path: string): CsvTable {
  return parseCsv(readFileSync(path, "utf8"), path);
}

/** Index of a column, or a diagnostic naming the missing column. */
export function columnIndex(table: CsvTable, name: string): number {
  const i = table.header.indexOf(name);
  if (i < 0) {
    throw new Error(`${table.path}: missing column '${name}'`);
  }
  return i;
}

/** Numeric cell value; empty cells come back as null. */
export function numericCell(
  table: CsvTable, row: string[], column: number,
): number | null {
  const cell = row[column];
  if (cell === undefined || cell === "") return null;
  const value = Number(cell);
  if (Number.isNaN(value)) {
    throw new Error(
      `${table.path}: non-numeric cell '${cell}' in column ` +
      `'${table.header[column]}'`);
  }
  return value;
}

/** Whole column as numbers; empty cells are skipped. */
export function numericColumn(table: CsvTable, name: string): number[] {
  const i = columnIndex(table, name);
  const out: number[] = [];
  for (const row of table.rows) {
    const v = numericCell(table, row, i);
    if (v !== null) out.push(v);
  }
  return out;
}

/** Numeric value from the config echo, or a diagnostic naming the key. */
export function configNumber(table: CsvTable, key: string): number {
  const raw = table.config[key];
  const value = raw === undefined || raw === "" ? NaN : Number(raw);
  if (Number.isNaN(value)) {
    throw new Error(`${table.path}: config echo is missing '${key}'`);
  }
  return value;
}

/** Human label for the run: preset name when set, else the stick mode. */
export function runLabel(table: CsvTable): string {
  const preset = table.config["preset"];
  if (preset) return preset;
  const mode = table.config["stickiness"] ?? "?";
  const period = table.config["period"] ?? "?";
  return `${mode}/${period}`;
}
