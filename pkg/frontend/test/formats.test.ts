import { describe, expect, it } from "vitest";

import {
  FMAT_HEADER_BYTES,
  FormatError,
  decodeFmat,
  encodeFmat,
  matrixFrom,
} from "../src/index.js";

describe("feature matrix files", () => {
  it("round-trips float32 bit-identically", () => {
    const values = Float32Array.from(
      [1.5, -2.25, 3.75, 0, 1e-20, 6e8].map(Math.fround),
    );
    const matrix = matrixFrom(values, 2, 3);
    const bytes = encodeFmat(matrix);
    expect(bytes.length).toBe(FMAT_HEADER_BYTES + 6 * 4);
    const back = decodeFmat(bytes);
    expect(back.n).toBe(2);
    expect(back.d).toBe(3);
    expect(back.elemBits).toBe(32);
    expect(encodeFmat(back)).toEqual(bytes);
  });

  it("round-trips float64 bit-identically", () => {
    const values = Float64Array.from([Math.PI, -Math.E, 1e-300, 4]);
    const bytes = encodeFmat(matrixFrom(values, 4, 1));
    const back = decodeFmat(bytes);
    expect(back.elemBits).toBe(64);
    expect(Array.from(back.values)).toEqual(Array.from(values));
  });

  it("rejects wrong shapes and non-finite values", () => {
    expect(() => matrixFrom(new Float32Array(5), 2, 3)).toThrow(
      /expected 2x3/,
    );
    const bad = new Float32Array([1, NaN, 3, 4]);
    expect(() => matrixFrom(bad, 2, 2)).toThrow(/\(0, 1\)/);
  });

  it("rejects corrupted files", () => {
    const bytes = encodeFmat(matrixFrom(new Float32Array([1, 2]), 1, 2));
    expect(() => decodeFmat(bytes.subarray(0, 10))).toThrow(FormatError);
    expect(() => decodeFmat(bytes.subarray(0, bytes.length - 1))).toThrow(
      /expected/,
    );
    const wrong = bytes.slice();
    wrong[0] = 0x58;
    expect(() => decodeFmat(wrong)).toThrow(/not an FMAT1/);
  });
});
