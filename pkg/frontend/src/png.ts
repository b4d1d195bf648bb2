/** Raster backend: a dependency-free rasterizer plus PNG encoder.
 *
 * Shapes render exactly; labels use a built-in 5x7 bitmap font (lowercase
 * plus digits), which keeps the raster output self-contained.
 */

import { deflateSync } from "node:zlib";
import { Chart, Cmd } from "./draw.js";

const FONT: Record<string, string[]> = {
  "0": [" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "],
  "1": ["  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "],
  "2": [" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"],
  "3": [" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "],
  "4": ["   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "],
  "5": ["#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "],
  "6": [" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "],
  "7": ["#####", "    #", "   # ", "  #  ", "  #  ", "  #  ", "  #  "],
  "8": [" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "],
  "9": [" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "],
  a: ["     ", "     ", " ####", "#   #", "#   #", "#  ##", " ## #"],
  b: ["#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#### "],
  c: ["     ", "     ", " ####", "#    ", "#    ", "#    ", " ####"],
  d: ["    #", "    #", " ####", "#   #", "#   #", "#   #", " ####"],
  e: ["     ", "     ", " ### ", "#   #", "#####", "#    ", " ####"],
  f: ["  ## ", " #   ", "#### ", " #   ", " #   ", " #   ", " #   "],
  g: ["     ", " ####", "#   #", "#   #", " ####", "    #", " ### "],
  h: ["#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#   #"],
  i: ["  #  ", "     ", " ##  ", "  #  ", "  #  ", "  #  ", " ### "],
  j: ["   # ", "     ", "  ## ", "   # ", "   # ", "#  # ", " ##  "],
  k: ["#    ", "#    ", "#  # ", "# #  ", "##   ", "# #  ", "#  # "],
  l: [" ##  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "],
  m: ["     ", "     ", "## # ", "# # #", "# # #", "# # #", "# # #"],
  n: ["     ", "     ", "#### ", "#   #", "#   #", "#   #", "#   #"],
  o: ["     ", "     ", " ### ", "#   #", "#   #", "#   #", " ### "],
  p: ["     ", "     ", "#### ", "#   #", "#### ", "#    ", "#    "],
  q: ["     ", "     ", " ####", "#   #", " ####", "    #", "    #"],
  r: ["     ", "     ", "# ## ", "##   ", "#    ", "#    ", "#    "],
  s: ["     ", "     ", " ####", "#    ", " ### ", "    #", "#### "],
  t: [" #   ", " #   ", "#### ", " #   ", " #   ", " #   ", "  ## "],
  u: ["     ", "     ", "#   #", "#   #", "#   #", "#  ##", " ## #"],
  v: ["     ", "     ", "#   #", "#   #", "#   #", " # # ", "  #  "],
  w: ["     ", "     ", "#   #", "# # #", "# # #", "# # #", " # # "],
  x: ["     ", "     ", "#   #", " # # ", "  #  ", " # # ", "#   #"],
  y: ["     ", "     ", "#   #", "#   #", " ####", "    #", " ### "],
  z: ["     ", "     ", "#####", "   # ", "  #  ", " #   ", "#####"],
  ".": ["     ", "     ", "     ", "     ", "     ", " ##  ", " ##  "],
  ",": ["     ", "     ", "     ", "     ", "  ## ", "  #  ", " #   "],
  "-": ["     ", "     ", "     ", " ### ", "     ", "     ", "     "],
  _: ["     ", "     ", "     ", "     ", "     ", "     ", "#####"],
  "/": ["    #", "    #", "   # ", "  #  ", " #   ", "#    ", "#    "],
  "(": ["   # ", "  #  ", " #   ", " #   ", " #   ", "  #  ", "   # "],
  ")": [" #   ", "  #  ", "   # ", "   # ", "   # ", "  #  ", " #   "],
  ":": ["     ", "  #  ", "     ", "     ", "  #  ", "     ", "     "],
  "+": ["     ", "  #  ", "  #  ", "#####", "  #  ", "  #  ", "     "],
  "%": ["##   ", "##  #", "   # ", "  #  ", " #   ", "#  ##", "   ##"],
  " ": ["     ", "     ", "     ", "     ", "     ", "     ", "     "],
};

class Raster {
  readonly data: Uint8Array;

  constructor(readonly w: number, readonly h: number) {
    this.data = new Uint8Array(w * h * 4).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.w || y >= this.h) {
      return;
    }
    const o = (y * this.w + x) * 4;
    this.data[o] = rgb[0];
    this.data[o + 1] = rgb[1];
    this.data[o + 2] = rgb[2];
    this.data[o + 3] = 255;
  }

  rect(x: number, y: number, w: number, h: number, rgb: [number, number, number]): void {
    const x1 = Math.round(x);
    const y1 = Math.round(y);
    const x2 = Math.round(x + w);
    const y2 = Math.round(y + h);
    for (let yy = y1; yy < Math.max(y2, y1 + 1); yy++) {
      for (let xx = x1; xx < Math.max(x2, x1 + 1); xx++) {
        this.set(xx, yy, rgb);
      }
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, rgb: [number, number, number]): void {
    // Bresenham
    let x = Math.round(x1);
    let y = Math.round(y1);
    const ex = Math.round(x2);
    const ey = Math.round(y2);
    const dx = Math.abs(ex - x);
    const dy = -Math.abs(ey - y);
    const sx = x < ex ? 1 : -1;
    const sy = y < ey ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(x, y, rgb);
      if (x === ex && y === ey) {
        break;
      }
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }

  text(x: number, y: number, s: string, size: number, rgb: [number, number, number],
       anchor: "start" | "middle" | "end"): void {
    const scale = size >= 13 ? 2 : 1;
    const adv = 6 * scale;
    const text = s.toLowerCase();
    const width = text.length * adv - scale;
    let x0 = Math.round(x);
    if (anchor === "middle") {
      x0 -= Math.round(width / 2);
    } else if (anchor === "end") {
      x0 -= width;
    }
    const y0 = Math.round(y) - 7 * scale + scale; // y is the text baseline
    for (const ch of text) {
      const glyph = FONT[ch] ?? FONT[" "];
      for (let r = 0; r < 7; r++) {
        for (let c = 0; c < 5; c++) {
          if (glyph[r][c] === "#") {
            this.rect(x0 + c * scale, y0 + r * scale, scale, scale, rgb);
          }
        }
      }
      x0 += adv;
    }
  }
}

function hexColor(color: string): [number, number, number] {
  const h = color.replace("#", "");
  return [parseInt(h.slice(0, 2), 16), parseInt(h.slice(2, 4), 16), parseInt(h.slice(4, 6), 16)];
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of buf) {
    c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(data.length, 0);
  head.write(type, 4, "ascii");
  const crcInput = Buffer.concat([Buffer.from(type, "ascii"), Buffer.from(data)]);
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(crcInput), 0);
  return Buffer.concat([head, Buffer.from(data), tail]);
}

export function encodePng(raster: Raster): Buffer {
  const { w, h, data } = raster;
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(w, 0);
  ihdr.writeUInt32BE(h, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 6; // RGBA
  const rows = Buffer.alloc(h * (1 + w * 4));
  for (let y = 0; y < h; y++) {
    rows[y * (1 + w * 4)] = 0; // filter: none
    rows.set(data.subarray(y * w * 4, (y + 1) * w * 4), y * (1 + w * 4) + 1);
  }
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(rows, { level: 6 })),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function toPng(chart: Chart): Buffer {
  const raster = new Raster(chart.width, chart.height);
  for (const cmd of chart.cmds) {
    switch (cmd.kind) {
      case "rect":
        raster.rect(cmd.x, cmd.y, cmd.w, cmd.h, hexColor(cmd.color));
        break;
      case "line":
        raster.line(cmd.x1, cmd.y1, cmd.x2, cmd.y2, hexColor(cmd.color));
        break;
      case "text":
        raster.text(cmd.x, cmd.y, cmd.s, cmd.size, hexColor(cmd.color), cmd.anchor);
        break;
    }
  }
  return encodePng(raster);
}

export { Raster };
