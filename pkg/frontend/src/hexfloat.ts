/**
 * C99 hexadecimal float literals in the exact canonical form the frame
 * writer emits (CPython's float.hex): sign, "0x1." or "0x0.", 13 mantissa
 * hex digits (a single "0" for zero), "p", explicitly signed decimal
 * exponent. Encoding and decoding go through the raw float64 bits, so the
 * round trip is exact for every finite value.
 */

export function formatHexFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot format non-finite value ${x}`);
  }
  const view = new DataView(new ArrayBuffer(8));
  view.setFloat64(0, x, false);
  const hi = view.getUint32(0, false);
  const lo = view.getUint32(4, false);
  const sign = hi >>> 31 ? "-" : "";
  const expBits = (hi >>> 20) & 0x7ff;
  const mantissa =
    ((hi & 0xfffff) >>> 0).toString(16).padStart(5, "0") +
    lo.toString(16).padStart(8, "0");
  if (expBits === 0) {
    if ((hi & 0xfffff) === 0 && lo === 0) {
      return `${sign}0x0.0p+0`;
    }
    return `${sign}0x0.${mantissa}p-1022`;
  }
  const exp = expBits - 1023;
  return `${sign}0x1.${mantissa}p${exp >= 0 ? "+" : ""}${exp}`;
}

const HEX_RE = /^(-?)0x([01])\.([0-9a-fA-F]+)p([+-]?\d+)$/;

export function parseHexFloat(text: string): number {
  const m = HEX_RE.exec(text.trim());
  if (!m) {
    throw new Error(`not a hexadecimal float literal: ${text}`);
  }
  const [, signStr, intDigit, mantStr, expStr] = m;
  if (mantStr.length > 13) {
    throw new Error(`mantissa too long in ${text}`);
  }
  const mantBits = BigInt(`0x${mantStr.padEnd(13, "0")}`);
  const exp = parseInt(expStr, 10);
  let bits: bigint;
  if (intDigit === "1") {
    const expBits = BigInt(exp + 1023);
    if (expBits < 1n || expBits > 2046n) {
      throw new Error(`exponent out of range in ${text}`);
    }
    bits = (expBits << 52n) | mantBits;
  } else {
    if (mantBits === 0n) {
      bits = 0n;
    } else {
      if (exp !== -1022) {
        throw new Error(`subnormal must carry p-1022, got ${text}`);
      }
      bits = mantBits;
    }
  }
  if (signStr === "-") {
    bits |= 1n << 63n;
  }
  const view = new DataView(new ArrayBuffer(8));
  view.setBigUint64(0, bits, false);
  return view.getFloat64(0, false);
}
