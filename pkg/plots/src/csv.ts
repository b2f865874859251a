/**
 * Reader for the risk-sweep CSV schema produced by the matshrink CLI:
 * sigma_1..sigma_p, lambda_1..lambda_p, se_1..se_p, frobenius, n_reps, seed.
 */

import { readFileSync } from "node:fs";

export interface SweepTable {
  /** number of eigenvalue columns (p) */
  p: number;
  /** column name -> values, row major */
  columns: Map<string, number[]>;
  rows: number;
}

export class SchemaError extends Error {
  constructor(public column: string, detail: string) {
    super(`schema violation: column '${column}' ${detail}`);
    this.name = "SchemaError";
  }
}

export function parseSweepCsv(path: string): SweepTable {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length < 2) {
    throw new SchemaError("(header)", "file has no data rows");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError("(row)", `expected ${header.length} cells, got ${cells.length}`);
    }
    header.forEach((name, i) => {
      const v = Number(cells[i]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(name, `has non-numeric value '${cells[i].trim()}'`);
      }
      columns.get(name)!.push(v);
    });
  }

  let p = 0;
  while (columns.has(`lambda_${p + 1}`)) p += 1;
  if (p === 0) {
    throw new SchemaError("lambda_1", "is missing");
  }
  for (let i = 1; i <= p; i++) {
    for (const prefix of ["sigma", "se"]) {
      if (!columns.has(`${prefix}_${i}`)) {
        throw new SchemaError(`${prefix}_${i}`, "is missing");
      }
    }
  }
  for (const required of ["frobenius", "n_reps", "seed"]) {
    if (!columns.has(required)) {
      throw new SchemaError(required, "is missing");
    }
  }
  return { p, columns, rows: lines.length - 1 };
}

/** All eigenvalue series of a table, ordered lambda_1..lambda_p. */
export function eigenvalueSeries(table: SweepTable): number[][] {
  const out: number[][] = [];
  for (let i = 1; i <= table.p; i++) {
    out.push(table.columns.get(`lambda_${i}`)!);
  }
  return out;
}

export function column(table: SweepTable, name: string): number[] {
  const values = table.columns.get(name);
  if (!values) {
    throw new SchemaError(name, "is missing");
  }
  return values;
}
