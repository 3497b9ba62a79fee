import { readFileSync } from "node:fs";

import { ByteReader, checkDims, FormatError } from "./reader.js";

const MAGIC = new Uint8Array([0x57, 0x4d, 0x41, 0x50]); // "WMAP"

export interface LoadedWeightMap {
  height: number;
  width: number;
  /** training progress step/total_steps that produced the map */
  stepFraction: number;
  /** H*W weights, row-major, as stored (f32) */
  values: Float32Array;
}

export function loadWeightMap(path: string): LoadedWeightMap {
  const r = new ByteReader(new Uint8Array(readFileSync(path)), path);
  r.magic(MAGIC, "WMAP");
  const height = r.u32("H");
  const width = r.u32("W");
  const total = checkDims(path, "WMAP", { H: height, W: width });
  const stepFraction = r.f32("step fraction");
  const payload = r.take(4 * total, "weight payload").slice();
  r.done("WMAP");
  const values = new Float32Array(payload.buffer, 0, total);
  for (const v of values) {
    if (!Number.isFinite(v) || v < 0) {
      throw new FormatError(`${path}: invalid WMAP payload: weights must be finite and >= 0, found ${v}`);
    }
  }
  if (!Number.isFinite(stepFraction) || stepFraction < 0) {
    throw new FormatError(`${path}: invalid WMAP payload: step fraction must be >= 0, got ${stepFraction}`);
  }
  return { height, width, stepFraction, values };
}

/** Re-encode exactly what loadWeightMap decoded; byte-identical to the source file. */
export function serializeWeightMap(wmap: LoadedWeightMap): Uint8Array {
  const out = new Uint8Array(MAGIC.length + 12 + 4 * wmap.values.length);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  view.setUint32(4, wmap.height, true);
  view.setUint32(8, wmap.width, true);
  view.setFloat32(12, wmap.stepFraction, true);
  for (let i = 0; i < wmap.values.length; i++) {
    view.setFloat32(16 + 4 * i, wmap.values[i], true);
  }
  return out;
}
