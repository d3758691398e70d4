/**
 * Reader for the simulator's metrics.csv.
 *
 * Expected header (exact):
 *   step,mode,run,map_type,gospa,gospa_loc,gospa_miss,gospa_false,rmse_loc
 */

export interface MetricRow {
  step: number;
  mode: string;
  run: number;
  map_type: string;
  gospa: number;
  gospa_loc: number;
  gospa_miss: number;
  gospa_false: number;
  rmse_loc: number;
}

export const REQUIRED_COLUMNS = [
  "step",
  "mode",
  "run",
  "map_type",
  "gospa",
  "gospa_loc",
  "gospa_miss",
  "gospa_false",
  "rmse_loc",
] as const;

export class CsvError extends Error {}

/** Parse metrics.csv text into typed rows; throws CsvError on schema problems. */
export function parseMetricsCsv(text: string): MetricRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError("metrics csv is empty");
  }
  const header = lines[0].split(",");
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new CsvError(`metrics csv is missing columns: ${missing.join(", ")}`);
  }
  const idx = Object.fromEntries(REQUIRED_COLUMNS.map((c) => [c, header.indexOf(c)]));

  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length < header.length) {
      throw new CsvError(`row ${i + 2}: expected ${header.length} cells, got ${cells.length}`);
    }
    const num = (col: string): number => {
      const v = Number(cells[idx[col]]);
      if (!Number.isFinite(v)) {
        throw new CsvError(`row ${i + 2}: column ${col} is not a number: ${cells[idx[col]]}`);
      }
      return v;
    };
    return {
      step: num("step"),
      mode: cells[idx.mode],
      run: num("run"),
      map_type: cells[idx.map_type],
      gospa: num("gospa"),
      gospa_loc: num("gospa_loc"),
      gospa_miss: num("gospa_miss"),
      gospa_false: num("gospa_false"),
      rmse_loc: num("rmse_loc"),
    };
  });
}
