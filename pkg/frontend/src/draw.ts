/** Chart layout as a backend-neutral command list, rendered to SVG and PNG. */

import { Metric } from "./csv.js";
import { GroupStat, sig6 } from "./stats.js";

export type Cmd =
  | { kind: "rect"; x: number; y: number; w: number; h: number; color: string }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: string }
  | { kind: "text"; x: number; y: number; s: string; size: number; color: string; anchor: "start" | "middle" | "end" };

export interface Chart {
  width: number;
  height: number;
  cmds: Cmd[];
}

export const PALETTE = ["#4472c4", "#ed7d31", "#70ad47", "#ffc000", "#9e480e", "#5b9bd5"];

const W = 640;
const H = 420;
const MARGIN = { left: 70, right: 20, top: 40, bottom: 60 };

function niceTicks(maxValue: number, n = 5): number[] {
  if (maxValue <= 0) {
    return [0, 1];
  }
  const rawStep = maxValue / n;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 2.5, 5, 10].map((c) => c * mag);
  const step = candidates.find((c) => c >= rawStep) ?? 10 * mag;
  const ticks: number[] = [];
  for (let v = 0; v <= maxValue + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function frame(cmds: Cmd[], title: string, yMax: number): { x0: number; y0: number; plotW: number; plotH: number; scaleY: (v: number) => number } {
  const x0 = MARGIN.left;
  const y0 = MARGIN.top;
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  cmds.push({ kind: "rect", x: 0, y: 0, w: W, h: H, color: "#ffffff" });
  cmds.push({ kind: "text", x: W / 2, y: 22, s: title, size: 14, color: "#202020", anchor: "middle" });
  const ticks = niceTicks(yMax);
  const top = ticks[ticks.length - 1];
  const scaleY = (v: number) => y0 + plotH - (v / top) * plotH;
  for (const t of ticks) {
    const y = scaleY(t);
    cmds.push({ kind: "line", x1: x0, y1: y, x2: x0 + plotW, y2: y, color: "#e0e0e0" });
    cmds.push({ kind: "text", x: x0 - 6, y: y + 4, s: sig6(t), size: 10, color: "#404040", anchor: "end" });
  }
  cmds.push({ kind: "line", x1: x0, y1: y0, x2: x0, y2: y0 + plotH, color: "#404040" });
  cmds.push({ kind: "line", x1: x0, y1: y0 + plotH, x2: x0 + plotW, y2: y0 + plotH, color: "#404040" });
  return { x0, y0, plotW, plotH, scaleY };
}

function whisker(cmds: Cmd[], cx: number, yLo: number, yHi: number, cap: number): void {
  cmds.push({ kind: "line", x1: cx, y1: yLo, x2: cx, y2: yHi, color: "#303030" });
  cmds.push({ kind: "line", x1: cx - cap, y1: yLo, x2: cx + cap, y2: yLo, color: "#303030" });
  cmds.push({ kind: "line", x1: cx - cap, y1: yHi, x2: cx + cap, y2: yHi, color: "#303030" });
}

/** Grouped bars: one bar per scheduler (per user count when several). */
export function compareChart(metric: Metric, stats: GroupStat[]): Chart {
  const cmds: Cmd[] = [];
  const yMax = Math.max(...stats.map((g) => g.mean[metric] + g.std[metric]), 1e-12);
  const multiUsers = new Set(stats.map((g) => g.users)).size > 1;
  const { x0, y0, plotW, plotH, scaleY } = frame(cmds, `${metric} by scheduler`, yMax * 1.05);
  const n = stats.length;
  const slot = plotW / n;
  const barW = Math.min(slot * 0.6, 80);
  const schedulers = [...new Set(stats.map((g) => g.scheduler))].sort();
  stats.forEach((g, i) => {
    const cx = x0 + slot * (i + 0.5);
    const yTop = scaleY(g.mean[metric]);
    const color = PALETTE[schedulers.indexOf(g.scheduler) % PALETTE.length];
    cmds.push({ kind: "rect", x: cx - barW / 2, y: yTop, w: barW, h: y0 + plotH - yTop, color });
    if (g.std[metric] > 0) {
      whisker(cmds, cx, scaleY(Math.max(g.mean[metric] - g.std[metric], 0)), scaleY(g.mean[metric] + g.std[metric]), barW * 0.25);
    }
    const label = multiUsers ? `${g.scheduler}/${g.users}` : g.scheduler;
    cmds.push({ kind: "text", x: cx, y: y0 + plotH + 16, s: label, size: 10, color: "#202020", anchor: "middle" });
  });
  cmds.push({ kind: "text", x: W / 2, y: H - 12, s: "scheduler", size: 11, color: "#202020", anchor: "middle" });
  return { width: W, height: H, cmds };
}

/** One line per scheduler across user counts. */
export function sweepChart(metric: Metric, stats: GroupStat[]): Chart {
  const cmds: Cmd[] = [];
  const users = [...new Set(stats.map((g) => g.users))].sort((a, b) => a - b);
  const schedulers = [...new Set(stats.map((g) => g.scheduler))].sort();
  const yMax = Math.max(...stats.map((g) => g.mean[metric] + g.std[metric]), 1e-12);
  const { x0, y0, plotW, plotH, scaleY } = frame(cmds, `${metric} vs users`, yMax * 1.05);
  const uMin = users[0];
  const uMax = users[users.length - 1];
  const scaleX = (u: number) =>
    users.length === 1 ? x0 + plotW / 2 : x0 + ((u - uMin) / (uMax - uMin)) * plotW;
  for (const u of users) {
    cmds.push({ kind: "text", x: scaleX(u), y: y0 + plotH + 16, s: String(u), size: 10, color: "#202020", anchor: "middle" });
  }
  cmds.push({ kind: "text", x: W / 2, y: H - 12, s: "users", size: 11, color: "#202020", anchor: "middle" });
  schedulers.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    const series = users
      .map((u) => stats.find((g) => g.scheduler === s && g.users === u))
      .filter((g): g is GroupStat => g !== undefined);
    for (let i = 1; i < series.length; i++) {
      cmds.push({
        kind: "line",
        x1: scaleX(series[i - 1].users), y1: scaleY(series[i - 1].mean[metric]),
        x2: scaleX(series[i].users), y2: scaleY(series[i].mean[metric]),
        color,
      });
    }
    for (const g of series) {
      const cx = scaleX(g.users);
      cmds.push({ kind: "rect", x: cx - 3, y: scaleY(g.mean[metric]) - 3, w: 6, h: 6, color });
      if (g.std[metric] > 0) {
        whisker(cmds, cx, scaleY(Math.max(g.mean[metric] - g.std[metric], 0)), scaleY(g.mean[metric] + g.std[metric]), 4);
      }
    }
    // legend
    const ly = y0 + 8 + si * 16;
    cmds.push({ kind: "rect", x: x0 + plotW - 130, y: ly - 8, w: 10, h: 10, color });
    cmds.push({ kind: "text", x: x0 + plotW - 114, y: ly + 1, s: s, size: 10, color: "#202020", anchor: "start" });
  });
  return { width: W, height: H, cmds };
}
