import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { eulerZyxToQuat, quatAngularErrorDeg, quatCanonicalize, Quat } from "../src/geometry.js";

const here = dirname(fileURLToPath(import.meta.url));
const vectors: Array<{ yaw: number; pitch: number; roll: number; quaternion: Quat }> = JSON.parse(
  readFileSync(join(here, "..", "shared", "euler_quat_vectors.json"), "utf8"),
);

describe("eulerZyxToQuat", () => {
  it("matches the backend geometry module on every shared vector", () => {
    expect(vectors.length).toBeGreaterThanOrEqual(20);
    for (const v of vectors) {
      const got = eulerZyxToQuat(v.yaw, v.pitch, v.roll);
      for (let i = 0; i < 4; i++) {
        expect(Math.abs(got[i] - v.quaternion[i])).toBeLessThan(1e-9);
      }
    }
  });

  it("maps zero angles to the identity quaternion", () => {
    expect(eulerZyxToQuat(0, 0, 0)).toEqual([1, 0, 0, 0]);
  });

  it("produces canonical unit quaternions", () => {
    for (const v of vectors) {
      const q = eulerZyxToQuat(v.yaw, v.pitch, v.roll);
      const norm = Math.hypot(...q);
      expect(Math.abs(norm - 1)).toBeLessThan(1e-12);
      expect(q[0]).toBeGreaterThanOrEqual(0);
    }
  });
});

describe("quatCanonicalize", () => {
  it("normalizes and flips onto the w >= 0 hemisphere", () => {
    const q = quatCanonicalize([-2, 0, 0, 0]);
    expect(q).toEqual([1, -0, -0, -0]);
  });

  it("rejects the zero quaternion", () => {
    expect(() => quatCanonicalize([0, 0, 0, 0])).toThrow();
  });
});

describe("quatAngularErrorDeg", () => {
  it("is zero under the double cover", () => {
    const q = eulerZyxToQuat(40, 20, -30);
    const negated = q.map((v) => -v) as Quat;
    expect(quatAngularErrorDeg(q, negated)).toBeCloseTo(0, 6);
  });

  it("reports 90 degrees for a quarter turn", () => {
    expect(quatAngularErrorDeg([1, 0, 0, 0], eulerZyxToQuat(90, 0, 0))).toBeCloseTo(90, 6);
  });
});
