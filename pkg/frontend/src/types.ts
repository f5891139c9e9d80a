export type FigureKind = "convergence" | "snapshot" | "ladder" | "dichotomy";

/** One figure per spec: input artifacts, the plot kind, the output image. */
export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
}

/** Shape of report.json as written by the experiment runner. */
export interface Report {
  name: string;
  params: Record<string, unknown>;
  metrics: Record<string, unknown>;
  verdicts: Record<string, Verdict>;
  thresholds: Record<string, number>;
  notes: string[];
  artifacts: string[];
  passed: boolean;
}

export interface Verdict {
  metric: string;
  op: string;
  threshold: number;
  value: number;
  pass: boolean;
}

/** Field snapshot JSON: grid header plus flat values in C order. */
export interface FieldDoc {
  grid: {
    n: number;
    lo: number[];
    hi: number[];
    cells: number[];
    h: number[];
  };
  values: number[];
}

export interface CsvTable {
  headers: string[];
  rows: number[][];
}
