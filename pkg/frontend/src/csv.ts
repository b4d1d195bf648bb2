/** Parsing for the benchmark runs CSV (the sole coupling to the simulator). */

export const METRICS = [
  "sla_violations",
  "avg_response_ms",
  "energy_j",
  "migrations",
  "avg_migration_time_ms",
  "avg_schedule_time_ms",
] as const;

export type Metric = (typeof METRICS)[number];

export interface RunRow {
  scheduler: string;
  seed: number;
  users: number;
  values: Record<Metric, number>;
}

export function parseRunsCsv(text: string): RunRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV: no header");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const col = new Map(header.map((h, i) => [h, i]));
  for (const required of ["scheduler", "seed", "users", ...METRICS]) {
    if (!col.has(required)) {
      throw new Error(`missing column ${required}`);
    }
  }
  if (lines.length === 1) {
    throw new Error("no data rows");
  }
  const rows: RunRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    const users = Number(parts[col.get("users")!]);
    if (!Number.isFinite(users)) {
      throw new Error(`non-numeric users value '${parts[col.get("users")!]}'`);
    }
    const values = {} as Record<Metric, number>;
    for (const m of METRICS) {
      const raw = parts[col.get(m)!];
      const v = Number(raw);
      if (!Number.isFinite(v)) {
        throw new Error(`non-numeric value '${raw}' in column ${m}`);
      }
      values[m] = v;
    }
    rows.push({
      scheduler: parts[col.get("scheduler")!],
      seed: Number(parts[col.get("seed")!]),
      users,
      values,
    });
  }
  return rows;
}
