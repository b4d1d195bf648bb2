/** File-producing entry points: six chart files per command plus a values
 * sidecar recording exactly the numbers that were plotted. */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { METRICS, Metric, parseRunsCsv } from "./csv.js";
import { Chart, compareChart, sweepChart } from "./draw.js";
import { GroupStat, sig6, summarize } from "./stats.js";
import { toPng } from "./png.js";
import { toSvg } from "./svg.js";

function sidecar(metric: Metric, stats: GroupStat[]): string {
  const lines = ["metric,scheduler,users,runs,mean,std"];
  for (const g of stats) {
    lines.push(
      `${metric},${g.scheduler},${g.users},${g.runs},${sig6(g.mean[metric])},${sig6(g.std[metric])}`,
    );
  }
  return lines.join("\n") + "\n";
}

function emit(outDir: string, name: string, chart: Chart, metric: Metric,
              stats: GroupStat[]): string[] {
  const svgPath = join(outDir, `${name}.svg`);
  const pngPath = join(outDir, `${name}.png`);
  const valPath = join(outDir, `${name}.values.txt`);
  writeFileSync(svgPath, toSvg(chart));
  writeFileSync(pngPath, toPng(chart));
  writeFileSync(valPath, sidecar(metric, stats));
  return [svgPath, pngPath, valPath];
}

export function plotCompare(csvPath: string, outDir: string): string[] {
  const rows = parseRunsCsv(readFileSync(csvPath, "utf-8"));
  const stats = summarize(rows);
  mkdirSync(outDir, { recursive: true });
  const files: string[] = [];
  for (const metric of METRICS) {
    files.push(...emit(outDir, `${metric}_compare`, compareChart(metric, stats), metric, stats));
  }
  return files;
}

export function plotSweep(csvPath: string, outDir: string): string[] {
  const rows = parseRunsCsv(readFileSync(csvPath, "utf-8"));
  const stats = summarize(rows);
  mkdirSync(outDir, { recursive: true });
  const files: string[] = [];
  for (const metric of METRICS) {
    files.push(...emit(outDir, `${metric}_sweep`, sweepChart(metric, stats), metric, stats));
  }
  return files;
}
