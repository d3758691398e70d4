/**
 * Minimal static SVG line charts: one polyline per mode, left/bottom axes
 * with tick labels, and a legend. No smoothing, no interpolation beyond the
 * straight segments between plotted points.
 */

import { ModeSeries } from "./aggregate.js";

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
}

const COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 42, right: 24, bottom: 46, left: 58 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function lineChart(series: ModeSeries[], opts: ChartOptions): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const allX = series.flatMap((s) => s.steps);
  const allY = series.flatMap((s) => s.values);
  const xMin = Math.min(...allX);
  const xMax = Math.max(...allX);
  const yMin = Math.min(0, ...allY);
  const yMax = Math.max(...allY) * 1.05 || 1;

  const sx = (x: number) => MARGIN.left + ((x - xMin) / (xMax - xMin || 1)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yMin) / (yMax - yMin || 1)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15">${esc(opts.title)}</text>`);

  for (const t of niceTicks(yMin, yMax, 6)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${width - MARGIN.right}" y2="${y}" ` +
      `stroke="#ddd" stroke-width="0.6"/>`);
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y + 4}" text-anchor="end">${t}</text>`);
  }
  for (const t of niceTicks(xMin, xMax, 8)) {
    const x = sx(t);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top + plotH}" x2="${x}" y2="${MARGIN.top + plotH + 4}" ` +
      `stroke="#333"/>`);
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle">${t}</text>`);
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
    `y2="${MARGIN.top + plotH}" stroke="#333"/>`);
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${width - MARGIN.right}" ` +
    `y2="${MARGIN.top + plotH}" stroke="#333"/>`);
  parts.push(
    `<text x="${width / 2}" y="${height - 10}" text-anchor="middle">${esc(opts.xLabel)}</text>`);
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${esc(opts.yLabel)}</text>`);

  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const points = s.steps.map((x, j) => `${sx(x)},${sy(s.values[j])}`).join(" ");
    parts.push(
      `<polyline points="${points}" fill="none" stroke="${color}" stroke-width="1.8" ` +
      `data-mode="${esc(s.mode)}"/>`);
    const ly = MARGIN.top + 8 + i * 18;
    const lx = width - MARGIN.right - 130;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 22}" y2="${ly}" ` +
      `stroke="${color}" stroke-width="1.8"/>`);
    parts.push(`<text x="${lx + 28}" y="${ly + 4}">${esc(s.mode)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}
