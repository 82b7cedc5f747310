/**
 * Reader/writer for mlamr simulation frames.
 *
 * A frame is an ASCII header terminated by "end_header", then per-patch
 * payloads: little-endian float64 arrays in binary mode, or rows of
 * comma-separated hexfloat literals in text mode. Header floats are C99
 * hexfloat literals. Parsing and re-serializing a frame reproduces the
 * original file byte for byte.
 */

import { formatHexFloat, parseHexFloat } from "./hexfloat.js";

export const FORMAT_VERSION = 1;
const MAGIC_BINARY = "MLAMR FRAME";
const MAGIC_TEXT = "MLAMR FRAME-TEXT";

export class FrameFormatError extends Error {}

export interface IndexBox {
  loI: number;
  loJ: number;
  hiI: number;
  hiJ: number;
}

export function boxNx(box: IndexBox): number {
  return box.hiI - box.loI + 1;
}

export function boxNy(box: IndexBox): number {
  return box.hiJ - box.loJ + 1;
}

export interface LevelMeta {
  level: number;
  nx: number;
  ny: number;
  dx: number;
  dy: number;
}

export interface FramePatch {
  level: number;
  box: IndexBox;
  /** field arrays, row-major [j][i], each boxNy*boxNx long */
  bathy: Float64Array;
  h: Float64Array[];
  hu: Float64Array[];
  hv: Float64Array[];
}

export interface Frame {
  version: number;
  textMode: boolean;
  time: number;
  numLayers: number;
  domain: [number, number, number, number];
  rest: number[];
  levels: LevelMeta[];
  patches: FramePatch[];
}

function headerLines(frame: Frame): string[] {
  const magic = frame.textMode ? MAGIC_TEXT : MAGIC_BINARY;
  const lines = [
    `${magic} ${frame.version}`,
    `time ${formatHexFloat(frame.time)}`,
    `num_layers ${frame.numLayers}`,
    `num_levels ${frame.levels.length}`,
    `domain ${frame.domain.map(formatHexFloat).join(" ")}`,
    `rest ${frame.rest.map(formatHexFloat).join(" ")}`,
  ];
  for (const lv of frame.levels) {
    lines.push(
      `level ${lv.level} ${lv.nx} ${lv.ny} ${formatHexFloat(lv.dx)} ${formatHexFloat(lv.dy)}`,
    );
  }
  lines.push(`num_patches ${frame.patches.length}`);
  lines.push("end_header");
  return lines;
}

function* patchFields(p: FramePatch): Generator<Float64Array> {
  yield p.bathy;
  for (let m = 0; m < p.h.length; m++) {
    yield p.h[m];
    yield p.hu[m];
    yield p.hv[m];
  }
}

export function writeFrame(frame: Frame): Buffer {
  const chunks: Buffer[] = [
    Buffer.from(headerLines(frame).join("\n") + "\n", "ascii"),
  ];
  for (const p of frame.patches) {
    if (frame.textMode) {
      chunks.push(
        Buffer.from(
          `patch ${p.level} ${p.box.loI} ${p.box.loJ} ${p.box.hiI} ${p.box.hiJ}\n`,
          "ascii",
        ),
      );
      const nx = boxNx(p.box);
      for (const field of patchFields(p)) {
        for (let j = 0; j < boxNy(p.box); j++) {
          const row: string[] = [];
          for (let i = 0; i < nx; i++) {
            row.push(formatHexFloat(field[j * nx + i]));
          }
          chunks.push(Buffer.from(row.join(",") + "\n", "ascii"));
        }
      }
    } else {
      const head = Buffer.alloc(40);
      head.writeBigInt64LE(BigInt(p.level), 0);
      head.writeBigInt64LE(BigInt(p.box.loI), 8);
      head.writeBigInt64LE(BigInt(p.box.loJ), 16);
      head.writeBigInt64LE(BigInt(p.box.hiI), 24);
      head.writeBigInt64LE(BigInt(p.box.hiJ), 32);
      chunks.push(head);
      for (const field of patchFields(p)) {
        const buf = Buffer.alloc(field.length * 8);
        for (let k = 0; k < field.length; k++) {
          buf.writeDoubleLE(field[k], k * 8);
        }
        chunks.push(buf);
      }
    }
  }
  return Buffer.concat(chunks);
}

interface HeaderMeta {
  version: number;
  textMode: boolean;
  time: number;
  numLayers: number;
  numLevels: number;
  domain: [number, number, number, number];
  rest: number[];
  levels: LevelMeta[];
  numPatches: number;
}

function parseHeader(text: string, name: string): HeaderMeta {
  const lines = text.split("\n");
  const first = lines[0].split(" ");
  if (first.length !== 3 || first[0] !== "MLAMR") {
    throw new FrameFormatError(`${name}: not a frame file`);
  }
  const magic = `${first[0]} ${first[1]}`;
  if (magic !== MAGIC_BINARY && magic !== MAGIC_TEXT) {
    throw new FrameFormatError(`${name}: unknown magic ${magic}`);
  }
  const version = parseInt(first[2], 10);
  if (version !== FORMAT_VERSION) {
    throw new FrameFormatError(
      `${name}: format version ${version} not supported (expected ${FORMAT_VERSION})`,
    );
  }
  const meta: Partial<HeaderMeta> = {
    version,
    textMode: magic === MAGIC_TEXT,
    levels: [],
  };
  for (const line of lines.slice(1)) {
    if (!line) continue;
    const tok = line.split(" ");
    switch (tok[0]) {
      case "time":
        meta.time = parseHexFloat(tok[1]);
        break;
      case "num_layers":
        meta.numLayers = parseInt(tok[1], 10);
        break;
      case "num_levels":
        meta.numLevels = parseInt(tok[1], 10);
        break;
      case "domain":
        meta.domain = tok.slice(1, 5).map(parseHexFloat) as HeaderMeta["domain"];
        break;
      case "rest":
        meta.rest = tok.slice(1).map(parseHexFloat);
        break;
      case "level":
        meta.levels!.push({
          level: parseInt(tok[1], 10),
          nx: parseInt(tok[2], 10),
          ny: parseInt(tok[3], 10),
          dx: parseHexFloat(tok[4]),
          dy: parseHexFloat(tok[5]),
        });
        break;
      case "num_patches":
        meta.numPatches = parseInt(tok[1], 10);
        break;
      default:
        throw new FrameFormatError(`${name}: unknown header line "${line}"`);
    }
  }
  for (const key of ["time", "numLayers", "numLevels", "domain", "rest", "numPatches"]) {
    if ((meta as Record<string, unknown>)[key] === undefined) {
      throw new FrameFormatError(`${name}: incomplete header (missing ${key})`);
    }
  }
  if (meta.levels!.length !== meta.numLevels) {
    throw new FrameFormatError(`${name}: level count mismatch`);
  }
  return meta as HeaderMeta;
}

export function readFrame(blob: Buffer, name = "frame"): Frame {
  const marker = Buffer.from("end_header\n", "ascii");
  const pos = blob.indexOf(marker);
  if (pos < 0) {
    throw new FrameFormatError(`${name}: missing end_header`);
  }
  const meta = parseHeader(blob.subarray(0, pos).toString("ascii"), name);
  const body = blob.subarray(pos + marker.length);
  const nFields = 1 + 3 * meta.numLayers;
  const patches: FramePatch[] = [];

  if (meta.textMode) {
    const lines = body.toString("ascii").split("\n");
    let k = 0;
    for (let p = 0; p < meta.numPatches; p++) {
      const tok = lines[k].split(" ");
      if (tok[0] !== "patch") {
        throw new FrameFormatError(`${name}: expected patch line, got "${lines[k]}"`);
      }
      k += 1;
      const level = parseInt(tok[1], 10);
      const box: IndexBox = {
        loI: parseInt(tok[2], 10),
        loJ: parseInt(tok[3], 10),
        hiI: parseInt(tok[4], 10),
        hiJ: parseInt(tok[5], 10),
      };
      const count = boxNx(box) * boxNy(box);
      const fields: Float64Array[] = [];
      for (let f = 0; f < nFields; f++) {
        const arr = new Float64Array(count);
        for (let j = 0; j < boxNy(box); j++) {
          const cells = lines[k].split(",");
          if (cells.length !== boxNx(box)) {
            throw new FrameFormatError(`${name}: bad row width in patch ${p}`);
          }
          for (let i = 0; i < cells.length; i++) {
            arr[j * boxNx(box) + i] = parseHexFloat(cells[i]);
          }
          k += 1;
        }
        fields.push(arr);
      }
      const patch = assemblePatch(box, fields, meta.numLayers);
      patch.level = level;
      patches.push(patch);
    }
  } else {
    let off = 0;
    for (let p = 0; p < meta.numPatches; p++) {
      if (off + 40 > body.length) {
        throw new FrameFormatError(`${name}: truncated patch header`);
      }
      const level = Number(body.readBigInt64LE(off));
      const box: IndexBox = {
        loI: Number(body.readBigInt64LE(off + 8)),
        loJ: Number(body.readBigInt64LE(off + 16)),
        hiI: Number(body.readBigInt64LE(off + 24)),
        hiJ: Number(body.readBigInt64LE(off + 32)),
      };
      off += 40;
      const count = boxNx(box) * boxNy(box);
      const fields: Float64Array[] = [];
      for (let f = 0; f < nFields; f++) {
        if (off + count * 8 > body.length) {
          throw new FrameFormatError(`${name}: truncated patch payload`);
        }
        const arr = new Float64Array(count);
        for (let c = 0; c < count; c++) {
          arr[c] = body.readDoubleLE(off + c * 8);
        }
        off += count * 8;
        fields.push(arr);
      }
      const patch = assemblePatch(box, fields, meta.numLayers);
      patch.level = level;
      patches.push(patch);
    }
  }

  return {
    version: meta.version,
    textMode: meta.textMode,
    time: meta.time,
    numLayers: meta.numLayers,
    domain: meta.domain,
    rest: meta.rest,
    levels: meta.levels,
    patches,
  };
}

function assemblePatch(
  box: IndexBox,
  fields: Float64Array[],
  numLayers: number,
): FramePatch {
  const h: Float64Array[] = [];
  const hu: Float64Array[] = [];
  const hv: Float64Array[] = [];
  for (let m = 0; m < numLayers; m++) {
    h.push(fields[1 + 3 * m]);
    hu.push(fields[2 + 3 * m]);
    hv.push(fields[3 + 3 * m]);
  }
  return { level: 0, box, bathy: fields[0], h, hu, hv };
}

/** Per-layer surface elevation of one patch cell. */
export function surface(p: FramePatch, layer: number, idx: number): number {
  let eta = p.bathy[idx];
  for (let m = layer; m < p.h.length; m++) {
    eta += p.h[m][idx];
  }
  return eta;
}
