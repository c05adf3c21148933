/**
 * Log-domain scalar codec file format (magic "SQF1").
 *
 * Layout: 56-byte little-endian header
 *   8s magic | u32 version | u32 k | u64 n | u64 d | f64 e_min | f64 e_max
 *   | f64 clip_tail_fraction
 * followed by MSB-first bit-packed k-bit codes, row-major.
 *
 * Code q of a d-column row r sits at bit (r*d + column)*k. Codes at or
 * above half = 2^(k-1) are non-negative values, below are negative;
 * reconstruction returns the log-domain bucket midpoint with the sign
 * applied.
 */

import { unpackCodes } from "./bits.js";
import { DataError, FormatError } from "./errors.js";
import { FeatureMatrix, readU64 } from "./fmat.js";

export const SQF_MAGIC = "SQF1\0\0\0\0";
export const SQF_VERSION = 1;
export const SQF_HEADER_BYTES = 56;

export interface SqCodec {
  k: number;
  n: number;
  d: number;
  eMin: number;
  eMax: number;
  clipTailFraction: number;
  /** Bit-packed codes, ceil(n*d*k/8) bytes. */
  payload: Uint8Array;
}

export function parseSqf(bytes: Uint8Array): SqCodec {
  if (bytes.length < SQF_HEADER_BYTES) {
    throw new FormatError("truncated SQF1 header");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let magic = "";
  for (let i = 0; i < 8; i++) magic += String.fromCharCode(view.getUint8(i));
  if (magic !== SQF_MAGIC) {
    throw new FormatError("not an SQF1 file");
  }
  const version = view.getUint32(8, true);
  if (version !== SQF_VERSION) {
    throw new FormatError(`unsupported SQF1 version ${version}`);
  }
  const k = view.getUint32(12, true);
  if (k < 1 || k > 8) {
    throw new FormatError(`k must be in [1, 8], got ${k}`);
  }
  const n = readU64(view, 16);
  const d = readU64(view, 24);
  const eMin = view.getFloat64(32, true);
  const eMax = view.getFloat64(40, true);
  const clipTailFraction = view.getFloat64(48, true);
  const expect = SQF_HEADER_BYTES + Math.ceil((n * d * k) / 8);
  if (bytes.length !== expect) {
    throw new FormatError(`expected ${expect} bytes, found ${bytes.length}`);
  }
  return {
    k,
    n,
    d,
    eMin,
    eMax,
    clipTailFraction,
    payload: bytes.subarray(SQF_HEADER_BYTES),
  };
}

/**
 * Reconstruct bucket midpoints for the given rows (all rows when
 * omitted). Row ids may repeat and appear in any order.
 */
export function decodeSq(codec: SqCodec, rows?: readonly number[]): FeatureMatrix {
  const { k, d, eMin, eMax } = codec;
  const rowIds = rows ?? allRows(codec.n);
  const values = new Float32Array(rowIds.length * d);
  const half = 1 << (k - 1);
  const scale = (eMax - eMin) / half;
  for (let out = 0; out < rowIds.length; out++) {
    const row = rowIds[out]!;
    if (!Number.isInteger(row) || row < 0 || row >= codec.n) {
      throw new DataError(`row id ${row} out of range [0, ${codec.n})`);
    }
    const codes = unpackCodes(codec.payload, k, d, row * d * k);
    for (let col = 0; col < d; col++) {
      const q = codes[col]!;
      const step = q >= half ? q - half + 0.5 : half - 0.5 - q;
      const magnitude = Math.pow(2, step * scale + eMin);
      values[out * d + col] = q >= half ? magnitude : -magnitude;
    }
  }
  return { n: rowIds.length, d, elemBits: 32, values };
}

function allRows(n: number): number[] {
  const ids = new Array<number>(n);
  for (let i = 0; i < n; i++) ids[i] = i;
  return ids;
}
