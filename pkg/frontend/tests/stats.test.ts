import { describe, expect, it } from "vitest";
import { METRICS, parseRunsCsv } from "../src/csv.js";
import { sig6, summarize } from "../src/stats.js";

const HEADER =
  "scheduler,seed,users,tasks_released,tasks_completed,sla_violations," +
  "avg_response_ms,energy_j,migrations,avg_migration_time_ms,avg_schedule_time_ms";

function row(sched: string, seed: number, users: number, sla: number): string {
  return `${sched},${seed},${users},100,90,${sla},10.5,20.25,3,5.5,1.25`;
}

describe("csv parsing", () => {
  it("parses well-formed runs", () => {
    const rows = parseRunsCsv([HEADER, row("mmct", 1, 10, 7)].join("\n"));
    expect(rows).toHaveLength(1);
    expect(rows[0].scheduler).toBe("mmct");
    expect(rows[0].values.sla_violations).toBe(7);
    expect(rows[0].values.avg_schedule_time_ms).toBe(1.25);
  });

  it("rejects a missing metric column", () => {
    const bad = HEADER.replace(",energy_j", "");
    expect(() => parseRunsCsv([bad, "x,1,1,1,1,1,1,1,1,1"].join("\n")))
      .toThrow(/missing column energy_j/);
  });

  it("rejects header-only input", () => {
    expect(() => parseRunsCsv(HEADER)).toThrow(/no data rows/);
  });

  it("rejects non-numeric users", () => {
    expect(() => parseRunsCsv([HEADER, row("m", 1, NaN, 1).replace("NaN", "many")].join("\n")))
      .toThrow(/non-numeric users/);
  });
});

describe("summary statistics", () => {
  it("computes mean and population stddev", () => {
    const rows = parseRunsCsv([HEADER, row("a", 1, 10, 1), row("a", 2, 10, 3)].join("\n"));
    const [g] = summarize(rows);
    expect(g.runs).toBe(2);
    expect(g.mean.sla_violations).toBe(2);
    expect(g.std.sla_violations).toBe(1); // population, not sample
  });

  it("groups by scheduler and user count, sorted", () => {
    const rows = parseRunsCsv([
      HEADER,
      row("b", 1, 20, 5),
      row("a", 1, 10, 2),
      row("b", 1, 10, 4),
    ].join("\n"));
    const groups = summarize(rows);
    expect(groups.map((g) => `${g.scheduler}/${g.users}`)).toEqual(["a/10", "b/10", "b/20"]);
  });

  it("single run has zero spread", () => {
    const [g] = summarize(parseRunsCsv([HEADER, row("a", 1, 10, 4)].join("\n")));
    for (const m of METRICS) {
      expect(g.std[m]).toBe(0);
    }
  });
});

describe("six significant digits", () => {
  it("matches the summary precision contract", () => {
    expect(sig6(987.654321)).toBe("987.654");
    expect(sig6(0.0123456789)).toBe("0.0123457");
    expect(sig6(1234567)).toBe("1234570");
    expect(sig6(0)).toBe("0");
    expect(Number(sig6(22.6899))).toBeCloseTo(22.6899, 4);
  });
});
