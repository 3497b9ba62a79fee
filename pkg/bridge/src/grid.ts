import { readFileSync } from "node:fs";

import { ByteReader, checkDims, checkLabels, FormatError } from "./reader.js";

const MAGIC = new Uint8Array([0x4f, 0x43, 0x43, 0x56, 0x31, 0x00]); // "OCCV1\0"

export interface LoadedGrid {
  /** voxel dims (nx, ny, nz); x varies slowest in `labels` */
  dims: [number, number, number];
  /** world position of the minimum grid corner, meters (f32 precision) */
  origin: [number, number, number];
  /** voxel edge length, meters (f32 precision) */
  resolution: number;
  /** nx*ny*nz labels, C order */
  labels: Uint8Array;
}

export function loadGrid(path: string): LoadedGrid {
  const r = new ByteReader(new Uint8Array(readFileSync(path)), path);
  r.magic(MAGIC, "OCCV1");
  const nx = r.u32("nx");
  const ny = r.u32("ny");
  const nz = r.u32("nz");
  const total = checkDims(path, "OCCV1", { nx, ny, nz });
  const origin: [number, number, number] = [r.f32("origin x"), r.f32("origin y"), r.f32("origin z")];
  const resolution = r.f32("resolution");
  const labels = r.take(total, "label payload").slice();
  r.done("OCCV1");
  checkLabels(labels, path);
  if (!(resolution > 0) || !Number.isFinite(resolution)) {
    throw new FormatError(`${path}: invalid OCCV1 header: resolution must be positive, got ${resolution}`);
  }
  return { dims: [nx, ny, nz], origin, resolution, labels };
}

/** Re-encode exactly what loadGrid decoded; byte-identical to the source file. */
export function serializeGrid(grid: LoadedGrid): Uint8Array {
  const out = new Uint8Array(MAGIC.length + 12 + 16 + grid.labels.length);
  const view = new DataView(out.buffer);
  out.set(MAGIC, 0);
  let off = MAGIC.length;
  for (const d of grid.dims) {
    view.setUint32(off, d, true);
    off += 4;
  }
  for (const o of grid.origin) {
    view.setFloat32(off, o, true);
    off += 4;
  }
  view.setFloat32(off, grid.resolution, true);
  off += 4;
  out.set(grid.labels, off);
  return out;
}

/** Per-class voxel counts over ids 1..16, matching the core `stats` recount. */
export function classCounts(labels: Uint8Array): Record<string, number> {
  const counts: Record<string, number> = {};
  for (const v of labels) {
    if (v >= 1 && v <= 16) {
      const key = String(v);
      counts[key] = (counts[key] ?? 0) + 1;
    }
  }
  return counts;
}
