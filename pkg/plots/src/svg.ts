/**
 * Minimal SVG line-chart rendering: grayscale eigenvalue curves against a
 * swept singular value, with a dashed horizontal reference line.
 */

export interface Series {
  x: number[];
  y: number[];
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  /** dashed reference level (the minimax level n) */
  reference: number;
}

const PANEL_WIDTH = 360;
const PANEL_HEIGHT = 300;
const MARGIN = { top: 28, right: 16, bottom: 42, left: 52 };

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(Number(v.toFixed(12)));
  }
  return ticks;
}

function fmt(v: number): string {
  return Number(v.toFixed(6)).toString();
}

function renderPanel(panel: PanelSpec, offsetX: number): string {
  const innerW = PANEL_WIDTH - MARGIN.left - MARGIN.right;
  const innerH = PANEL_HEIGHT - MARGIN.top - MARGIN.bottom;
  const xs = panel.series.flatMap((s) => s.x);
  const ys = panel.series.flatMap((s) => s.y).concat([panel.reference, 0]);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys) * 1.05;
  const sx = (v: number) => offsetX + MARGIN.left + ((v - xLo) / (xHi - xLo || 1)) * innerW;
  const sy = (v: number) => MARGIN.top + innerH - ((v - yLo) / (yHi - yLo || 1)) * innerH;

  const parts: string[] = [];
  const axisX = offsetX + MARGIN.left;
  parts.push(
    `<rect x="${axisX}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#000" stroke-width="1"/>`,
  );
  for (const t of niceTicks(xLo, xHi)) {
    const x = sx(t);
    parts.push(`<line x1="${fmt(x)}" y1="${MARGIN.top + innerH}" x2="${fmt(x)}" y2="${MARGIN.top + innerH + 4}" stroke="#000"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${MARGIN.top + innerH + 16}" font-size="10" text-anchor="middle">${t}</text>`,
    );
  }
  for (const t of niceTicks(yLo, yHi)) {
    const y = sy(t);
    parts.push(`<line x1="${axisX - 4}" y1="${fmt(y)}" x2="${axisX}" y2="${fmt(y)}" stroke="#000"/>`);
    parts.push(
      `<text x="${axisX - 7}" y="${fmt(y + 3)}" font-size="10" text-anchor="end">${t}</text>`,
    );
  }
  // dashed reference line at the minimax level
  const refY = sy(panel.reference);
  parts.push(
    `<line class="reference" x1="${axisX}" y1="${fmt(refY)}" x2="${axisX + innerW}" y2="${fmt(refY)}" stroke="#000" stroke-width="1" stroke-dasharray="6 4"/>`,
  );
  for (const series of panel.series) {
    const points = series.x
      .map((x, i) => `${fmt(sx(x))},${fmt(sy(series.y[i]))}`)
      .join(" ");
    parts.push(
      `<polyline class="curve" fill="none" stroke="#000" stroke-width="1.6" points="${points}"/>`,
    );
  }
  parts.push(
    `<text x="${axisX + innerW / 2}" y="${MARGIN.top - 10}" font-size="12" text-anchor="middle">${panel.title}</text>`,
  );
  parts.push(
    `<text x="${axisX + innerW / 2}" y="${PANEL_HEIGHT - 8}" font-size="11" text-anchor="middle">${panel.xLabel}</text>`,
  );
  parts.push(
    `<text x="${offsetX + 14}" y="${MARGIN.top + innerH / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 ${offsetX + 14} ${MARGIN.top + innerH / 2})">${panel.yLabel}</text>`,
  );
  return parts.join("\n");
}

export function renderFigureSvg(panels: PanelSpec[]): string {
  const width = PANEL_WIDTH * panels.length;
  const body = panels.map((panel, i) => renderPanel(panel, i * PANEL_WIDTH)).join("\n");
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${PANEL_HEIGHT}" viewBox="0 0 ${width} ${PANEL_HEIGHT}">`,
    `<rect width="${width}" height="${PANEL_HEIGHT}" fill="#fff"/>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}
