export { DataError, FormatError } from "./errors.js";
export {
  FMAT_HEADER_BYTES,
  FMAT_MAGIC,
  FMAT_VERSION,
  decodeFmat,
  encodeFmat,
  matrixFrom,
  type FeatureMatrix,
} from "./fmat.js";
export { unpackCodes } from "./bits.js";
export {
  SQF_HEADER_BYTES,
  SQF_MAGIC,
  SQF_VERSION,
  decodeSq,
  parseSqf,
  type SqCodec,
} from "./sq.js";
export {
  CODE_LAYOUTS,
  METRICS,
  VQF_HEADER_BYTES,
  VQF_MAGIC,
  VQF_VERSION,
  bitsPerCode,
  decodeVq,
  parseVqf,
  type CodeLayout,
  type Metric,
  type VqCodec,
} from "./vq.js";
export {
  encodeSq,
  encodeVq,
  featgrindBin,
  fitSq,
  fitVq,
  type SqFitOptions,
  type SqParams,
  type VqFitOptions,
} from "./cli.js";
export { gather } from "./gather.js";
