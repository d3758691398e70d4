#!/usr/bin/env node
/**
 * Figure generator for simulator metrics.
 *
 * Usage:
 *   coopslam-plot gospa --csv out/metrics.csv --map-type VS --out vs_gospa.svg
 *   coopslam-plot rmse  --csv out/metrics.csv --out rmse.svg
 *
 * Optional: --modes baseline,full to restrict/reorder the overlaid modes.
 */

import { readFileSync, writeFileSync } from "fs";
import { AggregationError, gospaSeries, rmseSeries } from "./aggregate.js";
import { CsvError, parseMetricsCsv } from "./csv.js";
import { lineChart } from "./svg.js";

interface Args {
  command: string;
  csv?: string;
  mapType?: string;
  out?: string;
  modes?: string[];
}

function parseArgs(argv: string[]): Args {
  const [command, ...rest] = argv;
  const args: Args = { command };
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    switch (flag) {
      case "--csv": args.csv = value; break;
      case "--map-type": args.mapType = value; break;
      case "--out": args.out = value; break;
      case "--modes": args.modes = value.split(","); break;
      default: throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  if (args.command !== "gospa" && args.command !== "rmse") {
    console.error("usage: coopslam-plot gospa|rmse --csv <path> [--map-type <t>] --out <path>");
    return 2;
  }
  if (!args.csv || !args.out || (args.command === "gospa" && !args.mapType)) {
    console.error(`${args.command}: --csv and --out are required` +
      (args.command === "gospa" ? ", plus --map-type" : ""));
    return 2;
  }

  try {
    const rows = parseMetricsCsv(readFileSync(args.csv, "utf-8"));
    const series = args.command === "gospa"
      ? gospaSeries(rows, args.mapType!, args.modes)
      : rmseSeries(rows, args.modes);
    const svg = args.command === "gospa"
      ? lineChart(series, {
          title: `Average GOSPA, ${args.mapType} map`,
          xLabel: "time step",
          yLabel: "GOSPA [m]",
        })
      : lineChart(series, {
          title: "Vehicle location RMSE",
          xLabel: "time step",
          yLabel: "RMSE [m]",
        });
    writeFileSync(args.out, svg);
    console.log(`wrote ${args.out} (${series.length} mode series)`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof AggregationError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
