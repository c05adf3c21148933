import { describe, expect, it } from "vitest";

import {
  DataError,
  FormatError,
  SQF_HEADER_BYTES,
  VQF_HEADER_BYTES,
  bitsPerCode,
  decodeSq,
  decodeVq,
  gather,
  parseSqf,
  parseVqf,
  unpackCodes,
} from "../src/index.js";

function sqfBytes(
  k: number,
  n: number,
  d: number,
  eMin: number,
  eMax: number,
  payload: number[],
): Uint8Array {
  const out = new Uint8Array(SQF_HEADER_BYTES + payload.length);
  const view = new DataView(out.buffer);
  for (const [i, c] of [..."SQF1"].entries()) view.setUint8(i, c.charCodeAt(0));
  view.setUint32(8, 1, true);
  view.setUint32(12, k, true);
  view.setBigUint64(16, BigInt(n), true);
  view.setBigUint64(24, BigInt(d), true);
  view.setFloat64(32, eMin, true);
  view.setFloat64(40, eMax, true);
  view.setFloat64(48, 0, true);
  out.set(payload, SQF_HEADER_BYTES);
  return out;
}

function vqfBytes(spec: {
  metric: number;
  layout: number;
  width: number;
  length: number;
  n: number;
  d: number;
  codebooks: number[][];
  codePayload: number[];
}): Uint8Array {
  const tables = spec.codebooks.flat();
  const out = new Uint8Array(
    VQF_HEADER_BYTES + tables.length * 4 + spec.codePayload.length,
  );
  const view = new DataView(out.buffer);
  for (const [i, c] of [..."VQF1"].entries()) view.setUint8(i, c.charCodeAt(0));
  view.setUint32(8, 1, true);
  view.setUint8(12, spec.metric);
  view.setUint8(13, spec.layout);
  view.setUint32(16, spec.width, true);
  view.setUint32(20, spec.length, true);
  view.setUint32(24, Math.ceil(spec.d / spec.width), true);
  view.setBigUint64(28, BigInt(spec.n), true);
  view.setBigUint64(36, BigInt(spec.d), true);
  tables.forEach((value, i) => {
    view.setFloat32(VQF_HEADER_BYTES + i * 4, value, true);
  });
  out.set(spec.codePayload, VQF_HEADER_BYTES + tables.length * 4);
  return out;
}

describe("bit unpacking", () => {
  it("reads MSB-first codes at arbitrary offsets", () => {
    // bits: 11 10 01 00 -> 0xE4
    const payload = Uint8Array.from([0xe4]);
    expect(Array.from(unpackCodes(payload, 2, 4))).toEqual([3, 2, 1, 0]);
    expect(Array.from(unpackCodes(payload, 2, 2, 4))).toEqual([1, 0]);
    expect(Array.from(unpackCodes(payload, 1, 3, 1))).toEqual([1, 1, 0]);
    expect(() => unpackCodes(payload, 2, 5)).toThrow(/too short/);
  });
});

describe("scalar codec decoding", () => {
  // k=2, range [0, 2]: buckets are one exponent wide, midpoints 2^0.5
  // and 2^1.5 on each side of zero
  const bytes = sqfBytes(2, 2, 2, 0, 2, [0xe4]);

  it("parses the header", () => {
    const codec = parseSqf(bytes);
    expect([codec.k, codec.n, codec.d]).toEqual([2, 2, 2]);
    expect([codec.eMin, codec.eMax]).toEqual([0, 2]);
  });

  it("reconstructs signed bucket midpoints", () => {
    const got = Array.from(decodeSq(parseSqf(bytes)).values);
    const mid = (e: number) => Math.fround(Math.pow(2, e));
    expect(got).toEqual([mid(1.5), mid(0.5), -mid(0.5), -mid(1.5)]);
    expect(got[0]).toBeCloseTo(2 * Math.SQRT2, 6);
    expect(got[1]).toBeCloseTo(Math.SQRT2, 6);
  });

  it("gathers rows in any order with repeats", () => {
    const codec = parseSqf(bytes);
    const full = decodeSq(codec);
    const sub = gather(codec, [1, 0, 1]);
    expect(Array.from(sub.values)).toEqual([
      ...Array.from(full.values.subarray(2, 4)),
      ...Array.from(full.values.subarray(0, 2)),
      ...Array.from(full.values.subarray(2, 4)),
    ]);
    expect(() => decodeSq(codec, [2])).toThrow(DataError);
    expect(() => decodeSq(codec, [-1])).toThrow(/out of range/);
  });

  it("rejects corrupted files", () => {
    expect(() => parseSqf(bytes.subarray(0, 20))).toThrow(FormatError);
    expect(() => parseSqf(bytes.subarray(0, bytes.length - 1))).toThrow(
      /expected/,
    );
    const wrong = bytes.slice();
    wrong[0] = 0x58;
    expect(() => parseSqf(wrong)).toThrow(/not an SQF1/);
  });
});

describe("vector codec decoding", () => {
  it("computes code widths without float logs", () => {
    expect(bitsPerCode(2)).toBe(1);
    expect(bitsPerCode(3)).toBe(2);
    expect(bitsPerCode(2048)).toBe(11);
    expect(bitsPerCode(65536)).toBe(16);
  });

  it("looks up parts with a narrower tail", () => {
    // codes per row: [0,1] and [1,0] -> bits 0110 -> 0x60
    const bytes = vqfBytes({
      metric: 0,
      layout: 0,
      width: 2,
      length: 2,
      n: 2,
      d: 3,
      codebooks: [[1, 2, 3, 4], [5, 6]],
      codePayload: [0x60],
    });
    const codec = parseVqf(bytes);
    expect(codec.partWidths).toEqual([2, 1]);
    expect(Array.from(decodeVq(codec).values)).toEqual([1, 2, 6, 3, 4, 5]);
    const sub = gather(codec, [1, 1, 0]);
    expect(Array.from(sub.values)).toEqual([3, 4, 5, 3, 4, 5, 1, 2, 6]);
  });

  it("reads byte-aligned codes", () => {
    const bytes = vqfBytes({
      metric: 1,
      layout: 1,
      width: 1,
      length: 3, // 2 bits -> one byte per code
      n: 2,
      d: 1,
      codebooks: [[0.5, -0.5, 2]],
      codePayload: [2, 0],
    });
    const got = decodeVq(parseVqf(bytes));
    expect(Array.from(got.values)).toEqual([2, 0.5]);
  });

  it("refuses to decode a fit-only file and bad rows", () => {
    const fitOnly = vqfBytes({
      metric: 0,
      layout: 0,
      width: 1,
      length: 2,
      n: 0,
      d: 1,
      codebooks: [[1, 2]],
      codePayload: [],
    });
    const codec = parseVqf(fitOnly);
    expect(codec.codes).toBeNull();
    expect(() => decodeVq(codec)).toThrow(/no codes/);

    const bytes = vqfBytes({
      metric: 0,
      layout: 0,
      width: 1,
      length: 2,
      n: 2,
      d: 1,
      codebooks: [[1, 2]],
      codePayload: [0x40],
    });
    expect(() => decodeVq(parseVqf(bytes), [5])).toThrow(/out of range/);
  });

  it("rejects corrupted files", () => {
    const bytes = vqfBytes({
      metric: 0,
      layout: 0,
      width: 1,
      length: 2,
      n: 2,
      d: 1,
      codebooks: [[1, 2]],
      codePayload: [0x40],
    });
    const wrong = bytes.slice();
    wrong[0] = 0x58;
    expect(() => parseVqf(wrong)).toThrow(/not a VQF1/);
    expect(() => parseVqf(bytes.subarray(0, 30))).toThrow(FormatError);
    expect(() => parseVqf(bytes.subarray(0, bytes.length - 1))).toThrow(
      /size mismatch/,
    );
  });
});
