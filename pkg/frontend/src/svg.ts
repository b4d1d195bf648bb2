/** Vector backend: the command list as a standalone SVG document. */

import { Chart, Cmd } from "./draw.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function render(cmd: Cmd): string {
  switch (cmd.kind) {
    case "rect":
      return `<rect x="${cmd.x.toFixed(2)}" y="${cmd.y.toFixed(2)}" width="${cmd.w.toFixed(2)}" height="${cmd.h.toFixed(2)}" fill="${cmd.color}"/>`;
    case "line":
      return `<line x1="${cmd.x1.toFixed(2)}" y1="${cmd.y1.toFixed(2)}" x2="${cmd.x2.toFixed(2)}" y2="${cmd.y2.toFixed(2)}" stroke="${cmd.color}" stroke-width="1"/>`;
    case "text":
      return `<text x="${cmd.x.toFixed(2)}" y="${cmd.y.toFixed(2)}" font-size="${cmd.size}" font-family="sans-serif" fill="${cmd.color}" text-anchor="${cmd.anchor}">${esc(cmd.s)}</text>`;
  }
}

export function toSvg(chart: Chart): string {
  const body = chart.cmds.map(render).join("\n  ");
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${chart.width}" height="${chart.height}" viewBox="0 0 ${chart.width} ${chart.height}">\n  ${body}\n</svg>\n`;
}
