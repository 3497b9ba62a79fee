import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { FormatError } from "./reader.js";

export interface DatasetBatch {
  gridPaths: string[];
  /** grid path with its extension swapped to .mpit, by convention */
  stackPaths: string[];
}

interface IndexFrame {
  frame_id: string;
  grid: string;
  class_counts: Record<string, number>;
}

function loadJson(path: string): unknown {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (e) {
    throw new FormatError(`${path}: ${(e as Error).message}`);
  }
  try {
    return JSON.parse(text);
  } catch (e) {
    throw new FormatError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
}

export function loadIndex(path: string): Map<string, string> {
  const doc = loadJson(path);
  if (doc === null || typeof doc !== "object" || !Array.isArray((doc as { frames?: unknown }).frames)) {
    throw new FormatError(`${path}: index must be an object with a 'frames' list`);
  }
  const byId = new Map<string, string>();
  const base = dirname(resolve(path));
  for (const [i, entry] of (doc as { frames: unknown[] }).frames.entries()) {
    const frame = entry as Partial<IndexFrame>;
    if (typeof frame.frame_id !== "string" || typeof frame.grid !== "string") {
      throw new FormatError(`${path}: frame ${i} needs string 'frame_id' and 'grid'`);
    }
    if (byId.has(frame.frame_id)) {
      throw new FormatError(`${path}: duplicate frame id '${frame.frame_id}'`);
    }
    // grid paths are stored relative to wherever the index was built;
    // resolve non-absolute ones against the index file's directory
    byId.set(frame.frame_id, resolve(base, frame.grid));
  }
  return byId;
}

export function loadPlan(path: string): string[] {
  const doc = loadJson(path);
  const entries = (doc as { entries?: unknown }).entries;
  if (!Array.isArray(entries) || !entries.every((e) => typeof e === "string")) {
    throw new FormatError(`${path}: plan must carry an 'entries' list of frame id strings`);
  }
  return entries as string[];
}

/**
 * Batches of artifact paths in exact SamplingPlan order. Repeated frame
 * ids yield repeated paths; a final partial batch is emitted as-is.
 */
export function* iterateDataset(
  indexPath: string,
  planPath: string,
  batch: number,
): Generator<DatasetBatch> {
  if (!Number.isInteger(batch) || batch < 1) {
    throw new RangeError(`batch must be a positive integer, got ${batch}`);
  }
  const byId = loadIndex(indexPath);
  const entries = loadPlan(planPath);
  const gridPaths = entries.map((id) => {
    const grid = byId.get(id);
    if (grid === undefined) {
      throw new FormatError(`${planPath}: plan entry '${id}' is not in the index`);
    }
    return grid;
  });
  for (let i = 0; i < gridPaths.length; i += batch) {
    const grids = gridPaths.slice(i, i + batch);
    yield {
      gridPaths: grids,
      stackPaths: grids.map((g) => g.replace(/\.[^./\\]+$/, "") + ".mpit"),
    };
  }
}
