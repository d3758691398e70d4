/**
 * Aggregation of metric rows into per-mode time series: plain means over
 * Monte Carlo runs at each step, no smoothing, so the plotted values equal
 * the CSV aggregation exactly.
 */

import { MetricRow } from "./csv.js";

export interface ModeSeries {
  mode: string;
  steps: number[];
  values: number[];
}

export class AggregationError extends Error {}

function meanByStep(rows: MetricRow[], value: (r: MetricRow) => number): Map<number, number> {
  const sums = new Map<number, { total: number; count: number }>();
  for (const r of rows) {
    const acc = sums.get(r.step) ?? { total: 0, count: 0 };
    acc.total += value(r);
    acc.count += 1;
    sums.set(r.step, acc);
  }
  const out = new Map<number, number>();
  for (const [step, acc] of sums) out.set(step, acc.total / acc.count);
  return out;
}

function groupByMode(rows: MetricRow[], value: (r: MetricRow) => number,
                     modes?: string[]): ModeSeries[] {
  const wanted = modes ?? [...new Set(rows.map((r) => r.mode))].sort();
  const series: ModeSeries[] = [];
  for (const mode of wanted) {
    const sub = rows.filter((r) => r.mode === mode);
    if (sub.length === 0) continue;
    const means = meanByStep(sub, value);
    const steps = [...means.keys()].sort((a, b) => a - b);
    series.push({ mode, steps, values: steps.map((s) => means.get(s)!) });
  }
  return series;
}

/** Mean GOSPA of one map type per (mode, step). */
export function gospaSeries(rows: MetricRow[], mapType: string,
                            modes?: string[]): ModeSeries[] {
  const filtered = rows.filter((r) => r.map_type === mapType);
  if (filtered.length === 0) {
    const seen = [...new Set(rows.map((r) => r.map_type))].sort();
    throw new AggregationError(
      `no rows with map_type=${mapType} (csv contains: ${seen.join(", ") || "none"})`);
  }
  return groupByMode(filtered, (r) => r.gospa, modes);
}

/**
 * Mean location RMSE per (mode, step). The rmse_loc value is repeated on
 * each map-type row of a (step, run), so restricting to one map type keeps
 * the mean identical while avoiding triple counting.
 */
export function rmseSeries(rows: MetricRow[], modes?: string[]): ModeSeries[] {
  if (rows.length === 0) {
    throw new AggregationError("no rows in metrics csv");
  }
  const firstType = [...new Set(rows.map((r) => r.map_type))].sort()[0];
  const filtered = rows.filter((r) => r.map_type === firstType);
  return groupByMode(filtered, (r) => r.rmse_loc, modes);
}
