/**
 * Figure layouts: which CSVs feed each panel, the swept column on the x axis,
 * the sorted eigenvalue curves, and the dashed minimax level n.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import { SweepTable, column, eigenvalueSeries, parseSweepCsv } from "./csv.js";
import { PanelSpec } from "./svg.js";

export type FigureName = "fig1" | "fig2" | "fig3" | "fig4";

interface PanelSource {
  title: string;
  /** files in reading order; single-file panels plot lambda_1..lambda_p,
      multi-file panels plot lambda_1 of each file */
  files: string[];
  xColumn: string;
  xLabel: string;
  reference: number;
}

const LAYOUTS: Record<FigureName, PanelSource[]> = {
  fig1: [
    { title: "singular value shrinkage prior", files: ["fig1_svs.csv"], xColumn: "sigma_2", xLabel: "sigma_2", reference: 5 },
    { title: "Frobenius-norm Stein prior", files: ["fig1_stein.csv"], xColumn: "sigma_2", xLabel: "sigma_2", reference: 5 },
  ],
  fig2: [
    { title: "singular value shrinkage prior", files: ["fig2_svs.csv"], xColumn: "sigma_1", xLabel: "sigma_1", reference: 5 },
    { title: "Frobenius-norm Stein prior", files: ["fig2_stein.csv"], xColumn: "sigma_1", xLabel: "sigma_1", reference: 5 },
  ],
  fig3: [
    { title: "Efron-Morris", files: ["fig3_em.csv"], xColumn: "sigma_1", xLabel: "sigma_1", reference: 100 },
    { title: "James-Stein", files: ["fig3_js.csv"], xColumn: "sigma_1", xLabel: "sigma_1", reference: 100 },
  ],
  fig4: [
    {
      title: "n = 100",
      files: [10, 20, 30, 40, 50].map((p) => `fig4_left_p${p}.csv`),
      xColumn: "sigma_1",
      xLabel: "sigma_1",
      reference: 100,
    },
    {
      title: "n = 1000",
      files: [100, 200, 300, 400, 500].map((p) => `fig4_right_p${p}.csv`),
      xColumn: "sigma_1",
      xLabel: "sigma_1",
      reference: 1000,
    },
  ],
};

export function figurePanels(figure: FigureName, inputDir: string): PanelSpec[] {
  const layout = LAYOUTS[figure];
  if (!layout) {
    throw new Error(`unknown figure '${figure}'`);
  }
  return layout.map((source) => {
    const tables: SweepTable[] = source.files.map((name) => {
      const path = join(inputDir, name);
      if (!existsSync(path)) {
        throw new Error(`missing input CSV: ${path}`);
      }
      return parseSweepCsv(path);
    });
    let series;
    if (tables.length === 1) {
      // one curve per eigenvalue, already descending within a row
      const x = column(tables[0], source.xColumn);
      series = eigenvalueSeries(tables[0]).map((y) => ({ x, y }));
    } else {
      // one curve per file: the largest eigenvalue of each sweep
      series = tables.map((t) => ({
        x: column(t, source.xColumn),
        y: column(t, "lambda_1"),
      }));
    }
    return {
      title: source.title,
      xLabel: source.xLabel,
      yLabel: "eigenvalue",
      reference: source.reference,
      series,
    };
  });
}
