import assert from "node:assert/strict";
import { spawnSync } from "node:child_process";
import { mkdtemp, readFile, readdir, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { column, parseCsv } from "../src/csv.js";
import { buildFigure } from "../src/figures.js";
import { main } from "../src/render.js";
import type { Report } from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = resolve(HERE, "..", "..", "..");
const PY_SRC = join(REPO_ROOT, "src");

function syntheticReport(overrides: Partial<Report> = {}): Report {
  return {
    name: "barenblatt",
    params: { p: 3.0 },
    metrics: {
      h: [0.05, 0.025, 0.0125],
      err_l1: [8.8e-4, 4.3e-4, 2.1e-4],
      order_l1_fit: 1.0199,
      k_ladder: [10, 100, 1000],
      violation: [0.13, 0.01, 0.0],
      stabilization: { "0.0": [0.07, 0.01, 0.001], "0.1": [0.99, 1.0, 1.0] },
    },
    verdicts: {},
    thresholds: { stabilization: 0.01 },
    notes: [],
    artifacts: [],
    passed: true,
    ...overrides,
  };
}

async function writeSynthetic(dir: string, report: Report): Promise<string> {
  const path = join(dir, "report.json");
  await writeFile(path, JSON.stringify(report), "utf-8");
  return path;
}

test("csv parsing and column lookup", () => {
  const table = parseCsv("a,b\n1,2\n3,4\n");
  assert.deepEqual(column(table, "b"), [2, 4]);
  assert.throws(() => column(table, "c"), /missing column "c"/);
});

test("convergence figure annotates the report's fitted order", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const reportPath = await writeSynthetic(dir, syntheticReport());
  const svg = await buildFigure({
    kind: "convergence",
    inputs: [reportPath],
    output: join(dir, "fig.svg"),
  });
  assert.match(svg, /^<svg /);
  assert.match(svg, /slope 1\.02</);
});

test("convergence figure needs two resolutions", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const report = syntheticReport();
  report.metrics = { ...report.metrics, h: [0.05], err_l1: [8.8e-4] };
  const reportPath = await writeSynthetic(dir, report);
  await assert.rejects(
    buildFigure({ kind: "convergence", inputs: [reportPath], output: "x.svg" }),
    /at least 2 resolutions/,
  );
});

test("ladder figure rejects a single rung", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const report = syntheticReport();
  report.metrics = { ...report.metrics, k_ladder: [10], violation: [0.1] };
  const reportPath = await writeSynthetic(dir, report);
  await assert.rejects(
    buildFigure({ kind: "ladder", inputs: [reportPath], output: "x.svg" }),
    /at least 2 ladder rungs/,
  );
});

test("ladder figure draws violation and rate series", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const report = syntheticReport();
  report.metrics = {
    ...report.metrics,
    rate: { "(50,)": [0.1, 0.5, 0.9] },
  };
  const reportPath = await writeSynthetic(dir, report);
  const svg = await buildFigure({ kind: "ladder", inputs: [reportPath], output: "x.svg" });
  assert.match(svg, /violation/);
  assert.match(svg, /rate \(50,\)/);
});

test("dichotomy figure draws one curve per slope plus the threshold", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const reportPath = await writeSynthetic(dir, syntheticReport());
  const svg = await buildFigure({ kind: "dichotomy", inputs: [reportPath], output: "x.svg" });
  assert.match(svg, /a = 0\.0/);
  assert.match(svg, /a = 0\.1/);
  assert.match(svg, /threshold 0\.01/);
});

test("snapshot figure shows the zero boundary of a 1D field", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const field = {
    grid: { n: 1, lo: [0], hi: [1], cells: [5], h: [0.25] },
    values: [0, 0.5, 1.0, 0.5, 0],
  };
  const path = join(dir, "field.json");
  await writeFile(path, JSON.stringify(field), "utf-8");
  const svg = await buildFigure({ kind: "snapshot", inputs: [path], output: "x.svg" });
  assert.match(svg, /polyline/);
  assert.match(svg, /stroke-dasharray/); // the zero line
});

test("snapshot figure renders a 2D field as a cell map", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const field = {
    grid: { n: 2, lo: [0, 0], hi: [1, 1], cells: [3, 3], h: [0.5, 0.5] },
    values: [0, 0, 0, 0, 1, 0, 0, 0, 0],
  };
  const path = join(dir, "field.json");
  await writeFile(path, JSON.stringify(field), "utf-8");
  const svg = await buildFigure({ kind: "snapshot", inputs: [path], output: "x.svg" });
  assert.match(svg, /rgb\(40,40,255\)/); // the peak cell
});

test("cli writes the figure and reports missing-column errors", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const reportPath = await writeSynthetic(dir, syntheticReport());
  const out = join(dir, "out.svg");
  assert.equal(await main(["--kind", "convergence", "--input", reportPath, "--out", out]), 0);
  const svg = await readFile(out, "utf-8");
  assert.match(svg, /^<svg /);

  const badCsv = join(dir, "bad.csv");
  await writeFile(badCsv, "foo,bar\n1,2\n", "utf-8");
  const code = await main([
    "--kind", "convergence", "--input", reportPath, "--input", badCsv, "--out", out,
  ]);
  assert.equal(code, 1);
});

test("cli accepts a figure spec file", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-"));
  const reportPath = await writeSynthetic(dir, syntheticReport());
  const out = join(dir, "spec-out.svg");
  const specPath = join(dir, "figure.json");
  await writeFile(specPath, JSON.stringify({
    kind: "convergence",
    inputs: [reportPath],
    output: out,
  }), "utf-8");
  assert.equal(await main(["--spec", specPath]), 0);
  assert.match(await readFile(out, "utf-8"), /slope 1\.02</);
});

test("end to end: convergence figure from a live primary run", async () => {
  const dir = await mkdtemp(join(tmpdir(), "fig-e2e-"));
  const run = spawnSync(
    "python3",
    ["-m", "plaplab.cli", "barenblatt", "--out", join(dir, "runs")],
    { env: { ...process.env, PYTHONPATH: PY_SRC }, encoding: "utf-8", timeout: 300_000 },
  );
  assert.equal(run.status, 0, `primary run failed: ${run.stderr}`);

  const runDir = join(dir, "runs", "barenblatt");
  const stamped = join(runDir, (await readdir(runDir))[0]);
  const reportPath = join(stamped, "report.json");
  const csvPath = join(stamped, "convergence.csv");
  const out = join(dir, "convergence.svg");
  assert.equal(
    await main(["--kind", "convergence", "--input", reportPath, "--input", csvPath, "--out", out]),
    0,
  );

  const report = JSON.parse(await readFile(reportPath, "utf-8")) as Report;
  const order = report.metrics["order_l1_fit"] as number;
  const svg = await readFile(out, "utf-8");
  assert.match(svg, new RegExp(`slope ${order.toFixed(2).replace(".", "\\.")}<`));
});
