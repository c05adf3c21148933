/**
 * Fit and encode by delegating to the `featgrind` CLI over its file
 * formats; the resulting bytes are exactly what the CLI writes, so the
 * binding inherits its bit-reproducibility for a fixed seed.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { DataError } from "./errors.js";
import { FeatureMatrix, encodeFmat } from "./fmat.js";
import { SqCodec, parseSqf } from "./sq.js";
import { CodeLayout, Metric, VqCodec, parseVqf } from "./vq.js";

/** CLI executable; override with FEATGRIND_BIN when not on PATH. */
export function featgrindBin(): string {
  return process.env.FEATGRIND_BIN ?? "featgrind";
}

export interface SqParams {
  k: number;
  e_min: number;
  e_max: number;
  clip_tail_fraction: number;
}

export interface SqFitOptions {
  k: number;
  clipTailFraction?: number;
}

export interface VqFitOptions {
  width: number;
  length: number;
  metric?: Metric;
  codeLayout?: CodeLayout;
  sampleFraction?: number;
  maxIters?: number;
  tol?: number;
  restarts?: number;
  seed?: number;
}

function run(args: string[], cwd: string): void {
  execFileSync(featgrindBin(), args, { cwd, stdio: ["ignore", "pipe", "pipe"] });
}

function withWorkdir<T>(job: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "featgrind-"));
  try {
    return job(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Fit scalar quantizer parameters for a matrix. */
export function fitSq(matrix: FeatureMatrix, options: SqFitOptions): SqParams {
  return withWorkdir((dir) => {
    writeFileSync(join(dir, "f.fmat"), encodeFmat(matrix));
    const args = ["sq", "fit", "--features", "f.fmat", "--k",
                  String(options.k), "--out", "p.json"];
    if (options.clipTailFraction !== undefined) {
      args.push("--clip", String(options.clipTailFraction));
    }
    run(args, dir);
    const doc = JSON.parse(readFileSync(join(dir, "p.json"), "utf8"));
    return doc.params as SqParams;
  });
}

/** Quantize a matrix; returns the parsed codec and the raw file bytes. */
export function encodeSq(
  matrix: FeatureMatrix,
  options: SqFitOptions,
): { codec: SqCodec; bytes: Uint8Array } {
  return withWorkdir((dir) => {
    writeFileSync(join(dir, "f.fmat"), encodeFmat(matrix));
    const args = ["sq", "encode", "--features", "f.fmat", "--k",
                  String(options.k), "--out", "f.sqf"];
    if (options.clipTailFraction !== undefined) {
      args.push("--clip", String(options.clipTailFraction));
    }
    run(args, dir);
    const bytes = new Uint8Array(readFileSync(join(dir, "f.sqf")));
    return { codec: parseSqf(bytes), bytes };
  });
}

function vqArgs(options: VqFitOptions): string[] {
  if (!Number.isInteger(options.width) || !Number.isInteger(options.length)) {
    throw new DataError("width and length must be integers");
  }
  const args = ["--width", String(options.width), "--length",
                String(options.length)];
  if (options.metric !== undefined) args.push("--metric", options.metric);
  if (options.codeLayout !== undefined) args.push("--layout", options.codeLayout);
  if (options.sampleFraction !== undefined) {
    args.push("--sample-fraction", String(options.sampleFraction));
  }
  if (options.maxIters !== undefined) args.push("--max-iters", String(options.maxIters));
  if (options.tol !== undefined) args.push("--tol", String(options.tol));
  if (options.restarts !== undefined) args.push("--restarts", String(options.restarts));
  return args;
}

function seedArgs(seed?: number): string[] {
  return seed === undefined ? [] : ["--seed", String(seed)];
}

/** Fit codebooks only; returns the parsed codec and the raw file bytes. */
export function fitVq(
  matrix: FeatureMatrix,
  options: VqFitOptions,
): { codec: VqCodec; bytes: Uint8Array } {
  return withWorkdir((dir) => {
    writeFileSync(join(dir, "f.fmat"), encodeFmat(matrix));
    run([...seedArgs(options.seed), "vq", "fit", "--features", "f.fmat",
         ...vqArgs(options), "--out", "book.vqf"], dir);
    const bytes = new Uint8Array(readFileSync(join(dir, "book.vqf")));
    return { codec: parseVqf(bytes), bytes };
  });
}

/** Fit and encode a matrix; returns the parsed codec and the raw bytes. */
export function encodeVq(
  matrix: FeatureMatrix,
  options: VqFitOptions,
): { codec: VqCodec; bytes: Uint8Array } {
  return withWorkdir((dir) => {
    writeFileSync(join(dir, "f.fmat"), encodeFmat(matrix));
    run([...seedArgs(options.seed), "vq", "encode", "--features", "f.fmat",
         ...vqArgs(options), "--out", "f.vqf"], dir);
    const bytes = new Uint8Array(readFileSync(join(dir, "f.vqf")));
    return { codec: parseVqf(bytes), bytes };
  });
}
