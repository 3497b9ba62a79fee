import { readFileSync } from "node:fs";

import { ByteReader, checkDims, checkLabels, FormatError } from "./reader.js";

const MAGIC = new Uint8Array([0x4d, 0x50, 0x49, 0x54, 0x00]); // "MPIT\0"

export interface LoadedStack {
  /** (N views, D planes, H, W); N varies slowest in `labels` */
  shape: [number, number, number, number];
  dMin: number;
  dMax: number;
  /** N*D*H*W labels, C order */
  labels: Uint8Array;
  /** parsed sidecar: rig, grid spec, pixel/plane conventions */
  metadata: Record<string, unknown>;
  /**
   * The sidecar exactly as stored. Serialization reuses these bytes
   * rather than re-stringifying `metadata`, so round trips stay
   * byte-identical regardless of JSON formatting differences.
   */
  rawSidecar: Uint8Array;
}

export function loadStack(path: string): LoadedStack {
  const r = new ByteReader(new Uint8Array(readFileSync(path)), path);
  r.magic(MAGIC, "MPIT");
  const n = r.u32("N");
  const d = r.u32("D");
  const h = r.u32("H");
  const w = r.u32("W");
  const total = checkDims(path, "MPIT", { N: n, D: d, H: h, W: w });
  const dMin = r.f32("d_min");
  const dMax = r.f32("d_max");
  const labels = r.take(total, "label payload").slice();
  const sidecarLen = r.u32("sidecar length");
  const rawSidecar = r.take(sidecarLen, "sidecar").slice();
  r.done("MPIT");
  checkLabels(labels, path);
  if (!(dMax > dMin)) {
    throw new FormatError(`${path}: invalid MPIT header: need d_max > d_min, got [${dMin}, ${dMax}]`);
  }
  let metadata: unknown;
  try {
    metadata = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(rawSidecar));
  } catch (e) {
    throw new FormatError(`${path}: sidecar is not valid JSON: ${(e as Error).message}`);
  }
  if (metadata === null || typeof metadata !== "object" || !("rig" in metadata)) {
    throw new FormatError(`${path}: sidecar must be a JSON object with a 'rig' entry`);
  }
  return {
    shape: [n, d, h, w],
    dMin,
    dMax,
    labels,
    metadata: metadata as Record<string, unknown>,
    rawSidecar,
  };
}

/** Re-encode exactly what loadStack decoded; byte-identical to the source file. */
export function serializeStack(stack: LoadedStack): Uint8Array {
  const out = new Uint8Array(MAGIC.length + 16 + 8 + stack.labels.length + 4 + stack.rawSidecar.length);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  let off = MAGIC.length;
  for (const dim of stack.shape) {
    view.setUint32(off, dim, true);
    off += 4;
  }
  view.setFloat32(off, stack.dMin, true);
  view.setFloat32(off + 4, stack.dMax, true);
  off += 8;
  out.set(stack.labels, off);
  off += stack.labels.length;
  view.setUint32(off, stack.rawSidecar.length, true);
  out.set(stack.rawSidecar, off + 4);
  return out;
}
