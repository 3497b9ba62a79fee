import { readFileSync } from "node:fs";

import { beforeAll, describe, expect, it } from "vitest";

import {
  classCounts,
  loadGrid,
  loadStack,
  loadWeightMap,
  serializeGrid,
  serializeStack,
  serializeWeightMap,
} from "../src/index.js";
import { makeFixtures, type Fixtures } from "./fixtures.js";

let fx: Fixtures;

beforeAll(() => {
  fx = makeFixtures();
});

describe("grid round trip", () => {
  it("re-serializes byte-identically", () => {
    for (const path of fx.gridPaths) {
      const original = new Uint8Array(readFileSync(path));
      expect(serializeGrid(loadGrid(path))).toEqual(original);
    }
  });

  it("decodes dims consistent with the payload", () => {
    const grid = loadGrid(fx.gridPaths[0]);
    expect(grid.labels.length).toBe(grid.dims[0] * grid.dims[1] * grid.dims[2]);
    expect(grid.resolution).toBeCloseTo(0.5, 6);
  });

  it("class counts equal the core stats recount", () => {
    for (let i = 0; i < fx.gridPaths.length; i++) {
      const semantic = Object.fromEntries(
        Object.entries(fx.statsCounts[i]).filter(([id]) => Number(id) >= 1 && Number(id) <= 16),
      );
      expect(classCounts(loadGrid(fx.gridPaths[i]).labels)).toEqual(semantic);
    }
  });
});

describe("stack round trip", () => {
  it("re-serializes byte-identically", () => {
    const original = new Uint8Array(readFileSync(fx.stackPath));
    expect(serializeStack(loadStack(fx.stackPath))).toEqual(original);
  });

  it("array dims equal header dims", () => {
    const stack = loadStack(fx.stackPath);
    expect(stack.shape).toEqual([2, 16, 16, 16]);
    expect(stack.labels.length).toBe(2 * 16 * 16 * 16);
    expect(stack.dMin).toBe(0);
    expect(stack.dMax).toBe(10);
  });

  it("metadata mirrors the sidecar and round-trips to the same JSON", () => {
    const stack = loadStack(fx.stackPath);
    const rig = stack.metadata.rig as { cameras: Array<{ name: string }> };
    expect(rig.cameras).toHaveLength(2);
    expect(stack.metadata.pixel_convention).toContain("(u, v) = (column, row)");
    const reparsed = JSON.parse(new TextDecoder().decode(stack.rawSidecar));
    expect(reparsed).toEqual(stack.metadata);
  });
});

describe("weight map round trip", () => {
  it("re-serializes byte-identically", () => {
    const original = new Uint8Array(readFileSync(fx.weightMapPath));
    expect(serializeWeightMap(loadWeightMap(fx.weightMapPath))).toEqual(original);
  });

  it("carries the schedule fraction and sane weights", () => {
    const wmap = loadWeightMap(fx.weightMapPath);
    expect(wmap.height).toBe(16);
    expect(wmap.width).toBe(16);
    expect(wmap.stepFraction).toBeCloseTo(0.25, 6);
    expect(wmap.values.length).toBe(16 * 16);
    for (const v of wmap.values) {
      expect(v).toBeGreaterThanOrEqual(1);
    }
  });
});
