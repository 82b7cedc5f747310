/**
 * Rendering of simulation frames: one panel per layer surface (free
 * surface left, internal surface right), diverging color scale symmetric
 * about each surface's rest value, refinement patch outlines drawn with a
 * distinct style per level, finest data painted last so it wins where
 * levels overlap.
 *
 * Every image embeds a tEXt chunk with the frame's patch boxes and the
 * per-level outline legend, so downstream tooling (and the golden tests)
 * can verify the overlay against the frame without decoding pixels.
 */

import { boxNx, boxNy, Frame, FramePatch, surface } from "./frame.js";
import { encodePng } from "./png.js";

export interface RenderOptions {
  /** pixels per finest-level cell */
  pixelsPerCell?: number;
  /** per-layer color scale (max |eta - rest|); computed from the frame if absent */
  scales?: number[];
}

export interface RenderResult {
  png: Buffer;
  metadata: PatchMetadata;
}

export interface PatchMetadata {
  formatVersion: number;
  time: number;
  numLayers: number;
  panels: number;
  legend: Record<number, string>;
  boxes: { level: number; lo_i: number; lo_j: number; hi_i: number; hi_j: number }[];
}

const DRY_COLOR: [number, number, number] = [210, 180, 140];
const MARGIN = 8;

const LEVEL_STYLES: [number, number, number][] = [
  [90, 90, 90],    // level 1: gray
  [0, 0, 0],       // level 2: black
  [200, 0, 200],   // level 3: magenta
  [0, 150, 0],     // level 4: green
  [255, 140, 0],   // level 5: orange
];

function levelStyle(level: number): [number, number, number] {
  return LEVEL_STYLES[(level - 1) % LEVEL_STYLES.length];
}

function styleName(rgb: [number, number, number]): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

/** Diverging blue-white-red map on t in [-1, 1]. */
function diverging(t: number): [number, number, number] {
  const s = Math.max(-1, Math.min(1, t));
  if (s < 0) {
    const w = 1 + s;
    return [Math.round(40 + 215 * w), Math.round(60 + 195 * w), 255];
  }
  const w = 1 - s;
  return [255, Math.round(60 + 195 * w), Math.round(40 + 215 * w)];
}

export function surfaceScales(frames: Frame[], floor = 1e-6): number[] {
  const numLayers = Math.max(...frames.map((f) => f.numLayers));
  const scales = new Array(numLayers).fill(floor);
  for (const frame of frames) {
    for (const p of frame.patches) {
      const count = p.bathy.length;
      for (let m = 0; m < frame.numLayers; m++) {
        const rest = frame.rest[m];
        for (let k = 0; k < count; k++) {
          if (p.h[m][k] > 1e-9) {
            const dev = Math.abs(surface(p, m, k) - rest);
            if (dev > scales[m]) scales[m] = dev;
          }
        }
      }
    }
  }
  return scales;
}

function finestFactors(frame: Frame, level: number): [number, number] {
  const finest = frame.levels[frame.levels.length - 1];
  const meta = frame.levels.find((lv) => lv.level === level);
  if (!meta) {
    throw new Error(`frame has no level ${level}`);
  }
  if (finest.nx % meta.nx || finest.ny % meta.ny) {
    throw new Error(`level ${level} grid does not divide the finest grid`);
  }
  return [finest.nx / meta.nx, finest.ny / meta.ny];
}

export function renderFrame(frame: Frame, options: RenderOptions = {}): RenderResult {
  const ppc = options.pixelsPerCell ?? 1;
  const scales = options.scales ?? surfaceScales([frame]);
  const finest = frame.levels[frame.levels.length - 1];
  const panelW = finest.nx * ppc;
  const panelH = finest.ny * ppc;
  const panels = frame.numLayers;
  const width = MARGIN + panels * (panelW + MARGIN);
  const height = 2 * MARGIN + panelH;
  const rgba = new Uint8Array(width * height * 4).fill(255);

  const put = (x: number, y: number, rgb: [number, number, number]) => {
    const k = (y * width + x) * 4;
    rgba[k] = rgb[0];
    rgba[k + 1] = rgb[1];
    rgba[k + 2] = rgb[2];
    rgba[k + 3] = 255;
  };

  const panelX = (m: number) => MARGIN + m * (panelW + MARGIN);
  // image rows grow downward; cell rows grow upward
  const cellRect = (p: FramePatch, fy: number, fx: number, j: number, i: number) => {
    const x0 = (p.box.loI + i) * fx * ppc;
    const yTop = panelH - (p.box.loJ + j + 1) * fy * ppc;
    return { x0, yTop, w: fx * ppc, h: fy * ppc };
  };

  const byLevel = [...frame.patches].sort((a, b) => a.level - b.level);
  for (let m = 0; m < panels; m++) {
    const ox = panelX(m);
    for (const p of byLevel) {
      const [fx, fy] = finestFactors(frame, p.level);
      const nx = boxNx(p.box);
      const ny = boxNy(p.box);
      for (let j = 0; j < ny; j++) {
        for (let i = 0; i < nx; i++) {
          const idx = j * nx + i;
          const dry = p.h[m][idx] <= 1e-9;
          const rgb = dry
            ? DRY_COLOR
            : diverging((surface(p, m, idx) - frame.rest[m]) / scales[m]);
          const r = cellRect(p, fy, fx, j, i);
          for (let dy = 0; dy < r.h; dy++) {
            for (let dx = 0; dx < r.w; dx++) {
              put(ox + r.x0 + dx, MARGIN + r.yTop + dy, rgb);
            }
          }
        }
      }
    }
    // patch outlines, coarse first so finer styles win at shared borders
    for (const p of byLevel) {
      const [fx, fy] = finestFactors(frame, p.level);
      const rgb = levelStyle(p.level);
      const x0 = ox + p.box.loI * fx * ppc;
      const x1 = ox + (p.box.hiI + 1) * fx * ppc - 1;
      const yTop = MARGIN + panelH - (p.box.hiJ + 1) * fy * ppc;
      const yBot = MARGIN + panelH - p.box.loJ * fy * ppc - 1;
      for (let x = x0; x <= x1; x++) {
        put(x, yTop, rgb);
        put(x, yBot, rgb);
      }
      for (let y = yTop; y <= yBot; y++) {
        put(x0, y, rgb);
        put(x1, y, rgb);
      }
    }
  }

  const legend: Record<number, string> = {};
  for (const p of frame.patches) {
    legend[p.level] = styleName(levelStyle(p.level));
  }
  const metadata: PatchMetadata = {
    formatVersion: frame.version,
    time: frame.time,
    numLayers: frame.numLayers,
    panels,
    legend,
    boxes: frame.patches.map((p) => ({
      level: p.level,
      lo_i: p.box.loI,
      lo_j: p.box.loJ,
      hi_i: p.box.hiI,
      hi_j: p.box.hiJ,
    })),
  };
  const png = encodePng(width, height, rgba, {
    "mlamr:patches": JSON.stringify(metadata),
  });
  return { png, metadata };
}
