/**
 * Sub-vector codebook codec file format (magic "VQF1").
 *
 * Layout: 44-byte little-endian header
 *   8s magic | u32 version | u8 metric | u8 layout | u16 pad | u32 width
 *   | u32 length | u32 num_parts | u64 n | u64 d
 * followed by one float32 codebook of `length` entries per part (part p
 * covers columns [p*width, min((p+1)*width, d))), then, when n > 0, the
 * per-row codes for every part: MSB-first bit-packed at
 * ceil(log2(length)) bits each for the packed layout, or one u8/u16 per
 * code for the byte-aligned layout.
 */

import { unpackCodes } from "./bits.js";
import { DataError, FormatError } from "./errors.js";
import { FeatureMatrix, readU64 } from "./fmat.js";

export const VQF_MAGIC = "VQF1\0\0\0\0";
export const VQF_VERSION = 1;
export const VQF_HEADER_BYTES = 44;

export const METRICS = ["euclidean", "cosine"] as const;
export const CODE_LAYOUTS = ["packed", "byte_aligned"] as const;

export type Metric = (typeof METRICS)[number];
export type CodeLayout = (typeof CODE_LAYOUTS)[number];

export interface VqCodec {
  metric: Metric;
  codeLayout: CodeLayout;
  width: number;
  length: number;
  n: number;
  d: number;
  /** One (length * partWidth) float32 table per part. */
  codebooks: Float32Array[];
  /** Column widths of the parts; the last may be narrower. */
  partWidths: number[];
  /** Row-major (n * numParts) codebook indices; null for fit-only files. */
  codes: Int32Array | null;
}

export function bitsPerCode(length: number): number {
  return Math.max(1, 32 - Math.clz32(length - 1));
}

export function parseVqf(bytes: Uint8Array): VqCodec {
  if (bytes.length < VQF_HEADER_BYTES) {
    throw new FormatError("truncated VQF1 header");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let magic = "";
  for (let i = 0; i < 8; i++) magic += String.fromCharCode(view.getUint8(i));
  if (magic !== VQF_MAGIC) {
    throw new FormatError("not a VQF1 file");
  }
  const version = view.getUint32(8, true);
  if (version !== VQF_VERSION) {
    throw new FormatError(`unsupported VQF1 version ${version}`);
  }
  const metricId = view.getUint8(12);
  const layoutId = view.getUint8(13);
  if (metricId >= METRICS.length || layoutId >= CODE_LAYOUTS.length) {
    throw new FormatError("unknown metric or layout id");
  }
  const width = view.getUint32(16, true);
  const length = view.getUint32(20, true);
  const numParts = view.getUint32(24, true);
  const n = readU64(view, 28);
  const d = readU64(view, 36);
  if (width < 1 || length < 2 || Math.ceil(d / width) !== numParts) {
    throw new FormatError("num_parts inconsistent with width and d");
  }

  const codebooks: Float32Array[] = [];
  const partWidths: number[] = [];
  let offset = VQF_HEADER_BYTES;
  for (let lo = 0; lo < d; lo += width) {
    const partWidth = Math.min(lo + width, d) - lo;
    const count = length * partWidth;
    if (offset + count * 4 > bytes.length) {
      throw new FormatError("truncated codebooks");
    }
    const table = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      table[i] = view.getFloat32(offset + i * 4, true);
    }
    codebooks.push(table);
    partWidths.push(partWidth);
    offset += count * 4;
  }

  let codes: Int32Array | null = null;
  if (n > 0) {
    const bits = bitsPerCode(length);
    const total = n * numParts;
    if (codeLayoutOf(layoutId) === "packed") {
      const nbytes = Math.ceil((total * bits) / 8);
      if (bytes.length - offset !== nbytes) {
        throw new FormatError("code payload size mismatch");
      }
      codes = unpackCodes(bytes.subarray(offset), bits, total);
    } else {
      const step = Math.ceil(bits / 8);
      if (bytes.length - offset !== total * step) {
        throw new FormatError("code payload size mismatch");
      }
      codes = new Int32Array(total);
      for (let i = 0; i < total; i++) {
        codes[i] =
          step === 1
            ? view.getUint8(offset + i)
            : view.getUint16(offset + i * 2, true);
      }
    }
  } else if (bytes.length !== offset) {
    throw new FormatError("unexpected bytes after codebooks");
  }

  return {
    metric: METRICS[metricId]!,
    codeLayout: codeLayoutOf(layoutId),
    width,
    length,
    n,
    d,
    codebooks,
    partWidths,
    codes,
  };
}

function codeLayoutOf(id: number): CodeLayout {
  return CODE_LAYOUTS[id]!;
}

/**
 * Reconstruct rows by codebook lookup (all rows when omitted). Row ids
 * may repeat and appear in any order.
 */
export function decodeVq(codec: VqCodec, rows?: readonly number[]): FeatureMatrix {
  if (codec.codes === null) {
    throw new DataError("codec has no codes; encode before decoding");
  }
  const { d, codebooks, partWidths } = codec;
  const numParts = codebooks.length;
  const rowIds = rows ?? allRows(codec.n);
  const values = new Float32Array(rowIds.length * d);
  for (let out = 0; out < rowIds.length; out++) {
    const row = rowIds[out]!;
    if (!Number.isInteger(row) || row < 0 || row >= codec.n) {
      throw new DataError(`row id ${row} out of range [0, ${codec.n})`);
    }
    let col = 0;
    for (let part = 0; part < numParts; part++) {
      const code = codec.codes[row * numParts + part]!;
      const table = codebooks[part]!;
      const partWidth = partWidths[part]!;
      for (let j = 0; j < partWidth; j++, col++) {
        values[out * d + col] = table[code * partWidth + j]!;
      }
    }
  }
  return { n: rowIds.length, d, elemBits: 32, values };
}

function allRows(n: number): number[] {
  const ids = new Array<number>(n);
  for (let i = 0; i < n; i++) ids[i] = i;
  return ids;
}
