#!/usr/bin/env node
/** plot compare <runs.csv> <outdir> | plot sweep <runs.csv> <outdir> */

import { plotCompare, plotSweep } from "./charts.js";

function main(argv: string[]): number {
  const [mode, csvPath, outDir] = argv;
  if (!mode || !csvPath || !outDir || !["compare", "sweep"].includes(mode)) {
    console.error("usage: plot <compare|sweep> <runs.csv> <outdir>");
    return 2;
  }
  try {
    const files = mode === "compare" ? plotCompare(csvPath, outDir) : plotSweep(csvPath, outDir);
    console.log(`wrote ${files.length} files to ${outDir}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
