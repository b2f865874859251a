import { writeFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { SchemaError, column, eigenvalueSeries, parseSweepCsv } from "../src/csv.js";
import { tempDir, writeSweepCsv } from "./fixtures.js";

describe("parseSweepCsv", () => {
  it("reads the full sweep schema", () => {
    const dir = tempDir();
    const path = writeSweepCsv(dir, "ok.csv", 3, 0, [0, 5, 10], 5);
    const table = parseSweepCsv(path);
    expect(table.p).toBe(3);
    expect(table.rows).toBe(3);
    expect(column(table, "sigma_1")).toEqual([0, 5, 10]);
    expect(eigenvalueSeries(table)).toHaveLength(3);
  });

  it("rejects an empty grid", () => {
    const dir = tempDir();
    const path = join(dir, "empty.csv");
    writeFileSync(path, "sigma_1,lambda_1,se_1,frobenius,n_reps,seed\n");
    expect(() => parseSweepCsv(path)).toThrow(/no data rows/);
  });

  it("names the missing column", () => {
    const dir = tempDir();
    const path = join(dir, "missing.csv");
    writeFileSync(
      path,
      ["sigma_1,lambda_1,frobenius,n_reps,seed", "0,4.0,4.0,100,7"].join("\n"),
    );
    let err: unknown;
    try {
      parseSweepCsv(path);
    } catch (e) {
      err = e;
    }
    expect(err).toBeInstanceOf(SchemaError);
    expect((err as SchemaError).column).toBe("se_1");
    expect(String(err)).toContain("se_1");
  });

  it("names a non-numeric column", () => {
    const dir = tempDir();
    const path = join(dir, "nonnum.csv");
    writeFileSync(
      path,
      ["sigma_1,lambda_1,se_1,frobenius,n_reps,seed", "0,oops,0.01,4,100,7"].join("\n"),
    );
    expect(() => parseSweepCsv(path)).toThrow(/lambda_1.*non-numeric/);
  });
});
