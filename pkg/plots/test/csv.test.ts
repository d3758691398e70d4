import { describe, expect, it } from "vitest";
import { CsvError, parseMetricsCsv } from "../src/csv.js";

const HEADER = "step,mode,run,map_type,gospa,gospa_loc,gospa_miss,gospa_false,rmse_loc";

describe("parseMetricsCsv", () => {
  it("parses well-formed rows", () => {
    const rows = parseMetricsCsv(`${HEADER}\n3,full,1,VS,1.5,0.5,1.0,0.0,0.25`);
    expect(rows).toHaveLength(1);
    expect(rows[0]).toEqual({
      step: 3, mode: "full", run: 1, map_type: "VS",
      gospa: 1.5, gospa_loc: 0.5, gospa_miss: 1.0, gospa_false: 0.0,
      rmse_loc: 0.25,
    });
  });

  it("names the missing columns", () => {
    expect(() => parseMetricsCsv("step,mode,run\n1,full,0"))
      .toThrowError(/map_type/);
  });

  it("rejects non-numeric metric cells", () => {
    expect(() => parseMetricsCsv(`${HEADER}\n1,full,0,VS,oops,0,0,0,0`))
      .toThrowError(CsvError);
  });

  it("rejects empty input", () => {
    expect(() => parseMetricsCsv("")).toThrowError(CsvError);
  });
});
