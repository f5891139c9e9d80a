import { readFile } from "node:fs/promises";

import type { CsvTable, FieldDoc, Report } from "./types.js";

/** Parse a numeric CSV with a header row; empty cells become NaN. */
export function parseCsv(text: string): CsvTable {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 1) {
    throw new Error("empty CSV");
  }
  const headers = lines[0].split(",").map((h) => h.trim());
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    if (cells.length !== headers.length) {
      throw new Error(`CSV row has ${cells.length} cells, expected ${headers.length}`);
    }
    return cells.map((c) => (c.trim() === "" ? NaN : Number(c)));
  });
  return { headers, rows };
}

export function column(table: CsvTable, name: string): number[] {
  const idx = table.headers.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column ${JSON.stringify(name)}; have ${table.headers.join(", ")}`);
  }
  return table.rows.map((r) => r[idx]);
}

export async function readCsv(path: string): Promise<CsvTable> {
  return parseCsv(await readFile(path, "utf-8"));
}

export async function readReport(path: string): Promise<Report> {
  const doc = JSON.parse(await readFile(path, "utf-8")) as Report;
  if (typeof doc.name !== "string" || typeof doc.metrics !== "object") {
    throw new Error(`${path} is not an experiment report`);
  }
  return doc;
}

export async function readField(path: string): Promise<FieldDoc> {
  const doc = JSON.parse(await readFile(path, "utf-8")) as FieldDoc;
  if (!doc.grid || !Array.isArray(doc.values)) {
    throw new Error(`${path} is not a field snapshot`);
  }
  const expected = doc.grid.cells.reduce((a, b) => a * b, 1);
  if (doc.values.length !== expected) {
    throw new Error(`field has ${doc.values.length} values, grid expects ${expected}`);
  }
  return doc;
}

export function metricNumbers(report: Report, key: string): number[] {
  const value = report.metrics[key];
  if (!Array.isArray(value)) {
    throw new Error(`report metric ${JSON.stringify(key)} is missing or not an array`);
  }
  return value.map(Number);
}

export function metricNumber(report: Report, key: string): number {
  const value = report.metrics[key];
  if (typeof value !== "number") {
    throw new Error(`report metric ${JSON.stringify(key)} is missing or not a number`);
  }
  return value;
}
