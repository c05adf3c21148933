/**
 * Dense feature-matrix file format (magic "FMAT1").
 *
 * Layout: 32-byte little-endian header
 *   8s magic | u32 version | u32 elem_bits | u64 n | u64 d
 * followed by the row-major float payload.
 */

import { DataError, FormatError } from "./errors.js";

export const FMAT_MAGIC = "FMAT1\0\0\0";
export const FMAT_VERSION = 1;
export const FMAT_HEADER_BYTES = 32;

export interface FeatureMatrix {
  n: number;
  d: number;
  elemBits: 32 | 64;
  /** Row-major, length n*d. */
  values: Float32Array | Float64Array;
}

export function matrixFrom(
  values: Float32Array | Float64Array,
  n: number,
  d: number,
): FeatureMatrix {
  if (n < 1 || d < 1 || values.length !== n * d) {
    throw new DataError(`expected ${n}x${d} values, got ${values.length}`);
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new DataError(
        `non-finite feature value at (${Math.floor(i / d)}, ${i % d})`,
      );
    }
  }
  const elemBits = values instanceof Float64Array ? 64 : 32;
  return { n, d, elemBits, values };
}

function readMagic(view: DataView, offset: number, length: number): string {
  let out = "";
  for (let i = 0; i < length; i++) {
    out += String.fromCharCode(view.getUint8(offset + i));
  }
  return out;
}

function writeMagic(view: DataView, offset: number, magic: string): void {
  for (let i = 0; i < magic.length; i++) {
    view.setUint8(offset + i, magic.charCodeAt(i));
  }
}

/** Read a u64 header field that must fit a JS safe integer. */
export function readU64(view: DataView, offset: number): number {
  const big = view.getBigUint64(offset, true);
  if (big > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new FormatError(`header count ${big} too large`);
  }
  return Number(big);
}

export function encodeFmat(matrix: FeatureMatrix): Uint8Array {
  const bytesPerElem = matrix.elemBits / 8;
  const out = new Uint8Array(FMAT_HEADER_BYTES + matrix.n * matrix.d * bytesPerElem);
  const view = new DataView(out.buffer);
  writeMagic(view, 0, FMAT_MAGIC);
  view.setUint32(8, FMAT_VERSION, true);
  view.setUint32(12, matrix.elemBits, true);
  view.setBigUint64(16, BigInt(matrix.n), true);
  view.setBigUint64(24, BigInt(matrix.d), true);
  for (let i = 0; i < matrix.values.length; i++) {
    const value = matrix.values[i]!;
    if (matrix.elemBits === 32) {
      view.setFloat32(FMAT_HEADER_BYTES + i * 4, value, true);
    } else {
      view.setFloat64(FMAT_HEADER_BYTES + i * 8, value, true);
    }
  }
  return out;
}

export function decodeFmat(bytes: Uint8Array): FeatureMatrix {
  if (bytes.length < FMAT_HEADER_BYTES) {
    throw new FormatError("truncated FMAT1 header");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (readMagic(view, 0, 8) !== FMAT_MAGIC) {
    throw new FormatError("not an FMAT1 file");
  }
  const version = view.getUint32(8, true);
  if (version !== FMAT_VERSION) {
    throw new FormatError(`unsupported FMAT1 version ${version}`);
  }
  const elemBits = view.getUint32(12, true);
  if (elemBits !== 32 && elemBits !== 64) {
    throw new FormatError(`elem_bits must be 32 or 64, got ${elemBits}`);
  }
  const n = readU64(view, 16);
  const d = readU64(view, 24);
  const expect = FMAT_HEADER_BYTES + n * d * (elemBits / 8);
  if (bytes.length !== expect) {
    throw new FormatError(`expected ${expect} bytes, found ${bytes.length}`);
  }
  const values =
    elemBits === 32 ? new Float32Array(n * d) : new Float64Array(n * d);
  for (let i = 0; i < values.length; i++) {
    values[i] =
      elemBits === 32
        ? view.getFloat32(FMAT_HEADER_BYTES + i * 4, true)
        : view.getFloat64(FMAT_HEADER_BYTES + i * 8, true);
  }
  return { n, d, elemBits: elemBits as 32 | 64, values };
}
