/** Batched row-subset decoding over either codec. */

import { FeatureMatrix } from "./fmat.js";
import { SqCodec, decodeSq } from "./sq.js";
import { VqCodec, decodeVq } from "./vq.js";

function isVq(codec: SqCodec | VqCodec): codec is VqCodec {
  return "codebooks" in codec;
}

/**
 * Decode only the requested rows, without materializing the full
 * matrix. Ids may repeat and appear in any order; the result holds one
 * output row per id, in the given order.
 */
export function gather(
  codec: SqCodec | VqCodec,
  rows: readonly number[],
): FeatureMatrix {
  return isVq(codec) ? decodeVq(codec, rows) : decodeSq(codec, rows);
}
