import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import {
  iterateDataset,
  loadGrid,
  loadIndex,
  loadPlan,
  loadStack,
  loadWeightMap,
  serializeGrid,
  serializeStack,
  serializeWeightMap,
} from "../src/index.js";
import { makeFixtures } from "./fixtures.js";

function verdict(tag: string, passed: boolean, detail: string): void {
  console.log(`[${tag}] ${passed ? "PASS" : "FAIL"}: ${detail}`);
  expect(passed).toBe(true);
}

describe("bridge acceptance", () => {
  it("B1: byte-identical round trips and exact plan multiset", () => {
    const fx = makeFixtures();

    const files: Array<[string, Uint8Array]> = fx.gridPaths.map((p) => [
      p,
      serializeGrid(loadGrid(p)),
    ]);
    files.push([fx.stackPath, serializeStack(loadStack(fx.stackPath))]);
    files.push([fx.weightMapPath, serializeWeightMap(loadWeightMap(fx.weightMapPath))]);
    let identical = 0;
    for (const [path, reserialized] of files) {
      if (Buffer.from(reserialized).equals(readFileSync(path))) identical += 1;
    }

    const byId = loadIndex(fx.indexPath);
    const want = new Map<string, number>();
    for (const id of loadPlan(fx.planPath)) {
      const path = byId.get(id)!;
      want.set(path, (want.get(path) ?? 0) + 1);
    }
    const got = new Map<string, number>();
    let batches = 0;
    for (const batch of iterateDataset(fx.indexPath, fx.planPath, 3)) {
      batches += 1;
      for (const g of batch.gridPaths) got.set(g, (got.get(g) ?? 0) + 1);
    }
    const multisetOk =
      got.size === want.size && [...want].every(([path, n]) => got.get(path) === n);

    verdict(
      "B1",
      identical === files.length && multisetOk,
      `${identical}/${files.length} artifacts re-serialize byte-identically; ` +
        `iterator reproduced the ${fx.planLength}-entry plan multiset in ${batches} batches`,
    );
  });
});
