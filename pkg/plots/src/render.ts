/**
 * CLI: render a matshrink figure-sweep CSV set into a paper-style SVG.
 *
 *   node dist/render.js --figure fig1 --in results/ --out fig1.svg
 */

import { writeFileSync } from "node:fs";
import { FigureName, figurePanels } from "./figures.js";
import { renderFigureSvg } from "./svg.js";

function parseArgs(argv: string[]): { figure: FigureName; inDir: string; out: string } {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key?.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near '${key ?? ""}'`);
    }
    opts.set(key.slice(2), value);
  }
  const figure = opts.get("figure");
  const inDir = opts.get("in");
  const out = opts.get("out");
  if (!figure || !inDir || !out) {
    throw new Error("usage: render --figure fig1..fig4 --in <dir> --out <file.svg>");
  }
  if (!["fig1", "fig2", "fig3", "fig4"].includes(figure)) {
    throw new Error(`--figure must be one of fig1..fig4, got '${figure}'`);
  }
  return { figure: figure as FigureName, inDir, out };
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const panels = figurePanels(parsed.figure, parsed.inDir);
    writeFileSync(parsed.out, renderFigureSvg(panels));
    console.error(`wrote ${parsed.out}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const isDirectRun = process.argv[1]?.endsWith("render.js");
if (isDirectRun) {
  process.exit(main(process.argv.slice(2)));
}
