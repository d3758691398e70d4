import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { main } from "../src/cli.js";

const HEADER = "step,mode,run,map_type,gospa,gospa_loc,gospa_miss,gospa_false,rmse_loc";
const ROWS = [
  "1,baseline,0,VS,10.0,1.0,9.0,0.0,0.5",
  "2,baseline,0,VS,8.0,1.0,7.0,0.0,0.25",
  "1,cm1,0,VS,6.0,1.0,5.0,0.0,0.4",
  "2,cm1,0,VS,5.0,1.0,4.0,0.0,0.2",
  "1,full,0,VS,2.0,1.0,1.0,0.0,0.25",
  "2,full,0,VS,1.0,0.5,0.5,0.0,0.125",
];

function fixtureDir(): string {
  const dir = mkdtempSync(join(tmpdir(), "coopslam-plots-"));
  writeFileSync(join(dir, "metrics.csv"), [HEADER, ...ROWS].join("\n"));
  return dir;
}

describe("cli", () => {
  it("renders a gospa figure with one polyline per mode", () => {
    const dir = fixtureDir();
    const out = join(dir, "vs.svg");
    const code = main(["gospa", "--csv", join(dir, "metrics.csv"),
                       "--map-type", "VS", "--out", out]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("<svg");
    expect(svg.match(/<polyline/g)).toHaveLength(3);
    expect(svg).toContain('data-mode="baseline"');
    expect(svg).toContain('data-mode="cm1"');
    expect(svg).toContain('data-mode="full"');
  });

  it("renders an rmse figure", () => {
    const dir = fixtureDir();
    const out = join(dir, "rmse.svg");
    const code = main(["rmse", "--csv", join(dir, "metrics.csv"), "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("Vehicle location RMSE");
  });

  it("fails with a diagnostic instead of an empty image when the filter is empty", () => {
    const dir = fixtureDir();
    const out = join(dir, "sp.svg");
    const code = main(["gospa", "--csv", join(dir, "metrics.csv"),
                       "--map-type", "SP", "--out", out]);
    expect(code).toBe(1);
    expect(() => readFileSync(out, "utf-8")).toThrow();
  });

  it("fails on schema violations", () => {
    const dir = fixtureDir();
    writeFileSync(join(dir, "bad.csv"), "step,mode\n1,full");
    const code = main(["gospa", "--csv", join(dir, "bad.csv"),
                       "--map-type", "VS", "--out", join(dir, "x.svg")]);
    expect(code).toBe(1);
  });

  it("rejects unknown commands and missing flags", () => {
    expect(main(["scatter"])).toBe(2);
    expect(main(["gospa", "--csv", "x.csv"])).toBe(2);
  });
});
