import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { figurePanels } from "../src/figures.js";
import { main } from "../src/render.js";
import { renderFigureSvg } from "../src/svg.js";
import { tempDir, writeFigureFixtures, writeSweepCsv } from "./fixtures.js";

function countMatches(text: string, pattern: RegExp): number {
  return (text.match(pattern) ?? []).length;
}

describe("figurePanels", () => {
  it.each([
    ["fig1", 2, [3, 3], 5],
    ["fig2", 2, [3, 3], 5],
    ["fig3", 2, [20, 20], 100],
    ["fig4", 2, [5, 5], 100],
  ] as const)("%s has the right panel and curve counts", (figure, nPanels, curves, ref) => {
    const dir = tempDir();
    writeFigureFixtures(figure, dir);
    const panels = figurePanels(figure, dir);
    expect(panels).toHaveLength(nPanels);
    panels.forEach((panel, i) => {
      expect(panel.series).toHaveLength(curves[i]);
      expect(panel.yLabel).toBe("eigenvalue");
    });
    expect(panels[0].reference).toBe(ref);
  });

  it("errors on a missing input file", () => {
    const dir = tempDir();
    expect(() => figurePanels("fig1", dir)).toThrow(/missing input CSV/);
  });
});

describe("renderFigureSvg", () => {
  it("draws every curve plus one dashed reference per panel", () => {
    const dir = tempDir();
    writeFigureFixtures("fig1", dir);
    const svg = renderFigureSvg(figurePanels("fig1", dir));
    expect(countMatches(svg, /class="curve"/g)).toBe(6);
    expect(countMatches(svg, /class="reference"/g)).toBe(2);
    expect(svg).toContain("stroke-dasharray");
    expect(svg).toContain("<svg");
  });

  it("is a pure function of its input", () => {
    const dir = tempDir();
    writeFigureFixtures("fig2", dir);
    const panels = figurePanels("fig2", dir);
    expect(renderFigureSvg(panels)).toBe(renderFigureSvg(panels));
  });
});

describe("render CLI", () => {
  it.each(["fig1", "fig2", "fig3", "fig4"] as const)("renders %s end to end", (figure) => {
    const dir = tempDir();
    writeFigureFixtures(figure, dir);
    const out = join(dir, `${figure}.svg`);
    const rc = main(["--figure", figure, "--in", dir, "--out", out]);
    expect(rc).toBe(0);
    const svg = readFileSync(out, "utf8");
    const curves = figure === "fig3" ? 40 : figure === "fig4" ? 10 : 6;
    expect(countMatches(svg, /class="curve"/g)).toBe(curves);
    expect(countMatches(svg, /class="reference"/g)).toBe(2);
  });

  it("fails with the named column on a schema violation and writes no image", () => {
    const dir = tempDir();
    writeFigureFixtures("fig1", dir);
    // corrupt one panel: drop the se_2 column
    const bad = [
      "sigma_1,sigma_2,sigma_3,lambda_1,lambda_2,lambda_3,se_1,se_3,frobenius,n_reps,seed",
      "10,0,0,5,4,4,0.01,0.01,13,100,7",
    ].join("\n");
    writeFileSync(join(dir, "fig1_stein.csv"), bad);
    const out = join(dir, "fig1.svg");
    const rc = main(["--figure", "fig1", "--in", dir, "--out", out]);
    expect(rc).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects an empty grid without writing an image", () => {
    const dir = tempDir();
    writeSweepCsv(dir, "fig2_svs.csv", 3, 0, [], 5);
    writeSweepCsv(dir, "fig2_stein.csv", 3, 0, [0, 1], 5);
    const out = join(dir, "fig2.svg");
    expect(main(["--figure", "fig2", "--in", dir, "--out", out])).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects bad usage", () => {
    expect(main(["--figure", "fig9", "--in", ".", "--out", "x.svg"])).toBe(2);
    expect(main(["--in", "."])).toBe(2);
  });
});
