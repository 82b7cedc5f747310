import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { readFrame, writeFrame, FrameFormatError } from "../src/frame.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const FIXTURES = path.join(HERE, "..", "..", "tests", "fixtures", "frames");

const fixtureFiles = fs.readdirSync(FIXTURES).sort();

describe("fixture round trips", () => {
  it("has the shipped demo frames", () => {
    expect(fixtureFiles).toContain("shelf_small_frame0000.bin");
    expect(fixtureFiles).toContain("shelf_small_frame0002.bin");
  });

  for (const name of fixtureFiles) {
    it(`round-trips ${name} byte-exactly`, () => {
      const blob = fs.readFileSync(path.join(FIXTURES, name));
      const frame = readFrame(blob, name);
      expect(writeFrame(frame).equals(blob)).toBe(true);
    });
  }
});

describe("frame contents", () => {
  it("reads the shelf demo geometry", () => {
    const frame = readFrame(
      fs.readFileSync(path.join(FIXTURES, "shelf_small_frame0000.bin")),
    );
    expect(frame.numLayers).toBe(2);
    expect(frame.levels.length).toBe(3);
    expect(frame.domain[1]).toBe(4.0);
    expect(frame.rest).toEqual([0.0, -0.6]);
    const levels = new Set(frame.patches.map((p) => p.level));
    expect(levels.has(1)).toBe(true);
    expect(levels.size).toBeGreaterThan(1);
  });

  it("text and binary encodings carry identical data", () => {
    const bin = readFrame(
      fs.readFileSync(path.join(FIXTURES, "shelf_small_frame0000.bin")),
    );
    const txt = readFrame(
      fs.readFileSync(path.join(FIXTURES, "shelf_small_frame0000.txt")),
    );
    expect(txt.textMode).toBe(true);
    expect(txt.patches.length).toBe(bin.patches.length);
    for (let k = 0; k < bin.patches.length; k++) {
      expect(Array.from(txt.patches[k].h[0])).toEqual(
        Array.from(bin.patches[k].h[0]),
      );
    }
  });

  it("rejects unsupported versions", () => {
    const blob = fs.readFileSync(path.join(FIXTURES, "single_layer.bin"));
    const bad = Buffer.from(blob);
    bad.set(Buffer.from("MLAMR FRAME 9", "ascii"), 0);
    expect(() => readFrame(bad)).toThrow(FrameFormatError);
    expect(() => readFrame(bad)).toThrow(/version/);
  });

  it("rejects truncated payloads", () => {
    const blob = fs.readFileSync(path.join(FIXTURES, "single_layer.bin"));
    expect(() => readFrame(blob.subarray(0, blob.length - 32))).toThrow(
      FrameFormatError,
    );
  });

  it("rejects non-frame files", () => {
    expect(() => readFrame(Buffer.from("not a frame at all\n"))).toThrow(
      FrameFormatError,
    );
  });
});
