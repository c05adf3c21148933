/** MSB-first bitstream reading for packed code payloads. */

import { DataError } from "./errors.js";

/**
 * Read `count` unsigned integers of `bits` bits each from an MSB-first
 * bitstream, starting at bit offset `startBit`.
 */
export function unpackCodes(
  payload: Uint8Array,
  bits: number,
  count: number,
  startBit = 0,
): Int32Array {
  if (bits < 1 || bits > 31) {
    throw new DataError(`code width must be in [1, 31], got ${bits}`);
  }
  const need = startBit + count * bits;
  if (need > payload.length * 8) {
    throw new DataError(
      `bitstream too short: need ${need} bits, have ${payload.length * 8}`,
    );
  }
  const out = new Int32Array(count);
  let bit = startBit;
  for (let i = 0; i < count; i++) {
    let code = 0;
    for (let b = 0; b < bits; b++, bit++) {
      const byte = payload[bit >> 3]!;
      code = (code << 1) | ((byte >> (7 - (bit & 7))) & 1);
    }
    out[i] = code;
  }
  return out;
}
