#!/usr/bin/env node
/**
 * mlamr-plot: render simulation frames to PNG.
 *
 *   mlamr-plot FRAME [--out PATH]     one frame -> one image
 *   mlamr-plot DIR   [--out OUTDIR]   every frame in DIR, shared color scale
 *
 * Directory mode keeps the color scale consistent across all frames,
 * skips unreadable files with a warning, and exits nonzero if any were
 * skipped.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Frame, readFrame } from "./frame.js";
import { renderFrame, surfaceScales } from "./render.js";

function usage(): never {
  console.error("usage: mlamr-plot FRAME|DIR [--out PATH] [--pixels-per-cell N]");
  process.exit(2);
}

function isFrameFile(name: string): boolean {
  return /\.(bin|txt|frame)$/.test(name);
}

export function main(argv: string[]): number {
  let target: string | undefined;
  let out: string | undefined;
  let ppc = 1;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--out") {
      out = argv[++i];
    } else if (arg === "--pixels-per-cell") {
      ppc = parseInt(argv[++i], 10);
      if (!Number.isFinite(ppc) || ppc < 1) usage();
    } else if (arg.startsWith("-")) {
      usage();
    } else if (target === undefined) {
      target = arg;
    } else {
      usage();
    }
  }
  if (!target) usage();

  let stat: fs.Stats;
  try {
    stat = fs.statSync(target);
  } catch {
    console.error(`error: cannot open ${target}`);
    return 2;
  }

  if (stat.isFile()) {
    let frame: Frame;
    try {
      frame = readFrame(fs.readFileSync(target), target);
    } catch (err) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    const dest = out ?? target.replace(/\.[^.]+$/, "") + ".png";
    const { png } = renderFrame(frame, { pixelsPerCell: ppc });
    fs.writeFileSync(dest, png);
    console.log(`wrote ${dest}`);
    return 0;
  }

  const names = fs.readdirSync(target).filter(isFrameFile).sort();
  if (names.length === 0) {
    console.error(`error: no frame files in ${target}`);
    return 2;
  }
  const outDir = out ?? target;
  fs.mkdirSync(outDir, { recursive: true });

  const frames: (Frame | null)[] = [];
  let skipped = 0;
  for (const name of names) {
    try {
      frames.push(readFrame(fs.readFileSync(path.join(target, name)), name));
    } catch (err) {
      console.error(`warning: skipping ${name}: ${(err as Error).message}`);
      frames.push(null);
      skipped += 1;
    }
  }
  const readable = frames.filter((f): f is Frame => f !== null);
  if (readable.length === 0) {
    console.error("error: no readable frames");
    return 2;
  }
  const scales = surfaceScales(readable);
  for (let k = 0; k < names.length; k++) {
    const frame = frames[k];
    if (frame === null) continue;
    const dest = path.join(outDir, names[k].replace(/\.[^.]+$/, "") + ".png");
    const { png } = renderFrame(frame, { pixelsPerCell: ppc, scales });
    fs.writeFileSync(dest, png);
    console.log(`wrote ${dest}`);
  }
  return skipped ? 1 : 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
