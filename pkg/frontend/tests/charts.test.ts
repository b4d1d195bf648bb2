import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { METRICS, parseRunsCsv } from "../src/csv.js";
import { compareChart, sweepChart } from "../src/draw.js";
import { plotCompare, plotSweep } from "../src/charts.js";
import { summarize } from "../src/stats.js";
import { toSvg } from "../src/svg.js";
import { toPng } from "../src/png.js";

const COMPARE_FIXTURE = join(__dirname, "..", "fixtures", "compare.csv");
const SWEEP_FIXTURE = join(__dirname, "..", "fixtures", "sweep.csv");

describe("plotCompare", () => {
  it("emits six charts in both formats plus sidecars", () => {
    const out = mkdtempSync(join(tmpdir(), "charts-"));
    const files = plotCompare(COMPARE_FIXTURE, out);
    expect(files).toHaveLength(18);
    const names = readdirSync(out).sort();
    for (const metric of METRICS) {
      expect(names).toContain(`${metric}_compare.svg`);
      expect(names).toContain(`${metric}_compare.png`);
      expect(names).toContain(`${metric}_compare.values.txt`);
    }
  });

  it("sidecar values equal the summary to six significant digits", () => {
    const out = mkdtempSync(join(tmpdir(), "charts-"));
    plotCompare(COMPARE_FIXTURE, out);
    const stats = summarize(parseRunsCsv(readFileSync(COMPARE_FIXTURE, "utf-8")));
    for (const metric of METRICS) {
      const lines = readFileSync(join(out, `${metric}_compare.values.txt`), "utf-8")
        .trim().split("\n").slice(1);
      expect(lines).toHaveLength(stats.length);
      for (const [i, line] of lines.entries()) {
        const [m, sched, users, runs, mean, std] = line.split(",");
        expect(m).toBe(metric);
        expect(sched).toBe(stats[i].scheduler);
        expect(Number(users)).toBe(stats[i].users);
        expect(Number(runs)).toBe(stats[i].runs);
        const wantMean = stats[i].mean[metric];
        const wantStd = stats[i].std[metric];
        expect(Math.abs(Number(mean) - wantMean))
          .toBeLessThanOrEqual(Math.abs(wantMean) * 1e-5 + 1e-12);
        expect(Math.abs(Number(std) - wantStd))
          .toBeLessThanOrEqual(Math.abs(wantStd) * 1e-5 + 1e-12);
      }
    }
  });

  it("draws one bar per scheduler group", () => {
    const rows = parseRunsCsv(readFileSync(COMPARE_FIXTURE, "utf-8"));
    const stats = summarize(rows);
    const svg = toSvg(compareChart("sla_violations", stats));
    // background + bars (+ possible legend swatches): count fill rects of palette colors
    const bars = (svg.match(/<rect [^>]*fill="#(?!ffffff)/g) ?? []).length;
    expect(bars).toBe(stats.length);
  });

  it("is byte-deterministic", () => {
    const a = mkdtempSync(join(tmpdir(), "charts-a-"));
    const b = mkdtempSync(join(tmpdir(), "charts-b-"));
    plotCompare(COMPARE_FIXTURE, a);
    plotCompare(COMPARE_FIXTURE, b);
    for (const name of readdirSync(a)) {
      expect(readFileSync(join(a, name))).toEqual(readFileSync(join(b, name)));
    }
  });
});

describe("plotSweep", () => {
  it("emits six chart files with one series per scheduler", () => {
    const out = mkdtempSync(join(tmpdir(), "sweep-"));
    const files = plotSweep(SWEEP_FIXTURE, out);
    expect(files).toHaveLength(18);
    const rows = parseRunsCsv(readFileSync(SWEEP_FIXTURE, "utf-8"));
    const schedulers = new Set(rows.map((r) => r.scheduler));
    const users = new Set(rows.map((r) => r.users));
    const sidecar = readFileSync(join(out, "energy_j_sweep.values.txt"), "utf-8")
      .trim().split("\n").slice(1);
    expect(sidecar).toHaveLength(schedulers.size * users.size);
  });

  it("renders valid PNG signatures", () => {
    const rows = parseRunsCsv(readFileSync(SWEEP_FIXTURE, "utf-8"));
    const png = toPng(sweepChart("avg_response_ms", summarize(rows)));
    expect([...png.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    expect(png.includes(Buffer.from("IHDR"))).toBe(true);
    expect(png.includes(Buffer.from("IEND"))).toBe(true);
  });

  it("propagates parse errors", () => {
    const out = mkdtempSync(join(tmpdir(), "sweep-"));
    expect(() => plotSweep(COMPARE_FIXTURE + ".missing", out)).toThrow();
  });
});
