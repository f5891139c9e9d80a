#!/usr/bin/env node
/**
 * render — turn plaplab experiment artifacts into SVG figures.
 *
 * Usage:
 *   render --spec FILE                         figure spec as JSON
 *   render --kind KIND --input PATH [...] --out FILE
 *
 * Kinds: convergence | snapshot | ladder | dichotomy.
 * Figures are pure views of report data: nothing is recomputed, the
 * convergence slope annotation quotes the report's fitted order.
 */

import { readFile, writeFile } from "node:fs/promises";
import { exit } from "node:process";

import { buildFigure } from "./figures.js";
import type { FigureKind, FigureSpec } from "./types.js";

const KINDS: FigureKind[] = ["convergence", "snapshot", "ladder", "dichotomy"];

function usage(): never {
  console.error(
    "usage: render --spec FILE\n" +
    "       render --kind KIND --input PATH [--input PATH ...] --out FILE\n" +
    `kinds: ${KINDS.join(" | ")}`,
  );
  exit(2);
}

async function parseArgs(argv: string[]): Promise<FigureSpec> {
  let specPath: string | undefined;
  let kind: string | undefined;
  let output: string | undefined;
  const inputs: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) usage();
      return argv[++i];
    };
    if (arg === "--spec") specPath = next();
    else if (arg === "--kind") kind = next();
    else if (arg === "--input") inputs.push(next());
    else if (arg === "--out") output = next();
    else usage();
  }
  if (specPath) {
    const doc = JSON.parse(await readFile(specPath, "utf-8")) as FigureSpec;
    kind = doc.kind;
    output = doc.output;
    inputs.push(...(doc.inputs ?? []));
  }
  if (!kind || !output || inputs.length === 0) usage();
  if (!KINDS.includes(kind as FigureKind)) {
    console.error(`unknown figure kind ${JSON.stringify(kind)}`);
    exit(2);
  }
  return { kind: kind as FigureKind, inputs, output };
}

export async function main(argv: string[]): Promise<number> {
  const spec = await parseArgs(argv);
  try {
    const svg = await buildFigure(spec);
    await writeFile(spec.output, svg, "utf-8");
    console.log(spec.output);
    return 0;
  } catch (err) {
    console.error(`render error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split("/").pop() ?? "",
);
if (invokedDirectly) {
  main(process.argv.slice(2)).then(exit);
}
