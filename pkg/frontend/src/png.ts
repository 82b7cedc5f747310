/**
 * Minimal PNG writer (8-bit RGBA, no interlacing) with tEXt metadata
 * chunks, plus a tEXt extractor used by the golden tests. Compression is
 * node's zlib; everything else is plain chunk plumbing.
 */

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

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

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const len = Buffer.alloc(4);
  len.writeUInt32BE(data.length, 0);
  const typeBuf = Buffer.from(type, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typeBuf, data), 0);
  return Buffer.concat([len, typeBuf, data, crc]);
}

export function encodePng(
  width: number,
  height: number,
  rgba: Uint8Array,
  textChunks: Record<string, string> = {},
): Buffer {
  if (rgba.length !== width * height * 4) {
    throw new Error("rgba buffer does not match dimensions");
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 6; // color type RGBA
  const stride = 1 + width * 4;
  const raw = Buffer.alloc(height * stride);
  for (let j = 0; j < height; j++) {
    raw[j * stride] = 0; // filter: none
    raw.set(rgba.subarray(j * width * 4, (j + 1) * width * 4), j * stride + 1);
  }
  const parts = [SIGNATURE, chunk("IHDR", ihdr)];
  for (const [key, value] of Object.entries(textChunks)) {
    parts.push(
      chunk("tEXt", Buffer.concat([
        Buffer.from(key, "latin1"),
        Buffer.from([0]),
        Buffer.from(value, "latin1"),
      ])),
    );
  }
  parts.push(chunk("IDAT", zlib.deflateSync(raw)));
  parts.push(chunk("IEND", Buffer.alloc(0)));
  return Buffer.concat(parts);
}

export function readTextChunks(png: Buffer): Record<string, string> {
  if (!png.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG file");
  }
  const out: Record<string, string> = {};
  let off = 8;
  while (off + 8 <= png.length) {
    const len = png.readUInt32BE(off);
    const type = png.subarray(off + 4, off + 8).toString("ascii");
    const data = png.subarray(off + 8, off + 8 + len);
    if (type === "tEXt") {
      const zero = data.indexOf(0);
      out[data.subarray(0, zero).toString("latin1")] = data
        .subarray(zero + 1)
        .toString("latin1");
    }
    off += 12 + len;
    if (type === "IEND") break;
  }
  return out;
}

export interface PngInfo {
  width: number;
  height: number;
}

export function readPngInfo(png: Buffer): PngInfo {
  if (!png.subarray(0, 8).equals(SIGNATURE)) {
    throw new Error("not a PNG file");
  }
  return { width: png.readUInt32BE(16), height: png.readUInt32BE(20) };
}
