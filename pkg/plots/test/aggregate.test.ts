import { describe, expect, it } from "vitest";
import { AggregationError, gospaSeries, rmseSeries } from "../src/aggregate.js";
import { parseMetricsCsv } from "../src/csv.js";

// Two runs, two steps, two modes, two map types; numbers chosen so the
// hand-computed means are exact in binary.
const HEADER = "step,mode,run,map_type,gospa,gospa_loc,gospa_miss,gospa_false,rmse_loc";
const FIXTURE = [
  HEADER,
  "1,baseline,0,VS,10.0,1.0,9.0,0.0,0.5",
  "1,baseline,0,VA,4.0,1.0,3.0,0.0,0.5",
  "1,baseline,1,VS,14.0,2.0,12.0,0.0,0.75",
  "1,baseline,1,VA,6.0,2.0,4.0,0.0,0.75",
  "2,baseline,0,VS,8.0,1.0,7.0,0.0,0.25",
  "2,baseline,0,VA,2.0,1.0,1.0,0.0,0.25",
  "2,baseline,1,VS,12.0,2.0,10.0,0.0,0.5",
  "2,baseline,1,VA,4.0,2.0,2.0,0.0,0.5",
  "1,full,0,VS,2.0,1.0,1.0,0.0,0.25",
  "1,full,0,VA,1.0,0.5,0.5,0.0,0.25",
  "1,full,1,VS,4.0,2.0,2.0,0.0,0.5",
  "1,full,1,VA,3.0,1.5,1.5,0.0,0.5",
  "2,full,0,VS,1.0,0.5,0.5,0.0,0.125",
  "2,full,0,VA,0.5,0.25,0.25,0.0,0.125",
  "2,full,1,VS,3.0,1.5,1.5,0.0,0.375",
  "2,full,1,VA,1.5,0.75,0.75,0.0,0.375",
].join("\n");

describe("gospaSeries", () => {
  it("computes exact per-step means over runs", () => {
    const rows = parseMetricsCsv(FIXTURE);
    const series = gospaSeries(rows, "VS");
    const baseline = series.find((s) => s.mode === "baseline")!;
    // step 1: (10 + 14)/2 = 12; step 2: (8 + 12)/2 = 10 — exact.
    expect(baseline.steps).toEqual([1, 2]);
    expect(baseline.values).toEqual([12.0, 10.0]);
    const full = series.find((s) => s.mode === "full")!;
    expect(full.values).toEqual([3.0, 2.0]);
  });

  it("produces one series per mode", () => {
    const rows = parseMetricsCsv(FIXTURE + "\n1,cm1,0,VS,7.0,1.0,6.0,0.0,0.5");
    const series = gospaSeries(rows, "VS");
    expect(series.map((s) => s.mode)).toEqual(["baseline", "cm1", "full"]);
  });

  it("fails loudly when the map-type filter matches nothing", () => {
    const rows = parseMetricsCsv(FIXTURE);
    expect(() => gospaSeries(rows, "SP")).toThrowError(AggregationError);
    expect(() => gospaSeries(rows, "SP")).toThrowError(/map_type=SP/);
  });

  it("honours an explicit mode selection and order", () => {
    const rows = parseMetricsCsv(FIXTURE);
    const series = gospaSeries(rows, "VS", ["full", "baseline"]);
    expect(series.map((s) => s.mode)).toEqual(["full", "baseline"]);
  });
});

describe("rmseSeries", () => {
  it("computes exact per-step means over runs", () => {
    const rows = parseMetricsCsv(FIXTURE);
    const series = rmseSeries(rows);
    const baseline = series.find((s) => s.mode === "baseline")!;
    // step 1: (0.5 + 0.75)/2 = 0.625; step 2: (0.25 + 0.5)/2 = 0.375.
    expect(baseline.values).toEqual([0.625, 0.375]);
  });

  it("is independent of which map type carries the repeated value", () => {
    const rows = parseMetricsCsv(FIXTURE);
    const viaVa = rmseSeries(rows.filter((r) => r.map_type === "VA"));
    const viaVs = rmseSeries(rows.filter((r) => r.map_type === "VS"));
    expect(viaVa.map((s) => s.values)).toEqual(viaVs.map((s) => s.values));
  });

  it("fails on empty input", () => {
    expect(() => rmseSeries([])).toThrowError(AggregationError);
  });
});
