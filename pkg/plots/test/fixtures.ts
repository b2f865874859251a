import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Write a synthetic sweep CSV with the full column schema. */
export function writeSweepCsv(
  dir: string,
  name: string,
  p: number,
  sweptColumn: number,
  xValues: number[],
  level: number,
): string {
  const header = [
    ...Array.from({ length: p }, (_, i) => `sigma_${i + 1}`),
    ...Array.from({ length: p }, (_, i) => `lambda_${i + 1}`),
    ...Array.from({ length: p }, (_, i) => `se_${i + 1}`),
    "frobenius",
    "n_reps",
    "seed",
  ];
  const rows = xValues.map((x) => {
    const sigma = Array.from({ length: p }, (_, i) => (i === sweptColumn ? x : 0));
    const lambda = Array.from({ length: p }, (_, i) => level - i - x / 10);
    const se = Array.from({ length: p }, () => 0.01);
    const fro = lambda.reduce((a, b) => a + b, 0);
    return [...sigma, ...lambda, ...se, fro, 100, 7].join(",");
  });
  const path = join(dir, name);
  writeFileSync(path, [header.join(","), ...rows].join("\n") + "\n");
  return path;
}

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "matshrink-plots-"));
}

/** Populate a directory with fixture CSVs for one figure. */
export function writeFigureFixtures(figure: string, dir: string): void {
  const grid = [0, 1, 2, 3];
  switch (figure) {
    case "fig1":
      writeSweepCsv(dir, "fig1_svs.csv", 3, 1, grid, 5);
      writeSweepCsv(dir, "fig1_stein.csv", 3, 1, grid, 5);
      break;
    case "fig2":
      writeSweepCsv(dir, "fig2_svs.csv", 3, 0, grid, 5);
      writeSweepCsv(dir, "fig2_stein.csv", 3, 0, grid, 5);
      break;
    case "fig3":
      writeSweepCsv(dir, "fig3_em.csv", 20, 0, grid, 100);
      writeSweepCsv(dir, "fig3_js.csv", 20, 0, grid, 100);
      break;
    case "fig4":
      for (const p of [10, 20, 30, 40, 50]) {
        writeSweepCsv(dir, `fig4_left_p${p}.csv`, p, 0, grid, 100);
      }
      for (const p of [100, 200, 300, 400, 500]) {
        writeSweepCsv(dir, `fig4_right_p${p}.csv`, p, 0, grid, 1000);
      }
      break;
    default:
      throw new Error(`no fixtures for ${figure}`);
  }
}
