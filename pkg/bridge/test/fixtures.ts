import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { buildStack, runForge } from "../src/index.js";

/**
 * Every binary fixture is produced by the core toolchain through its
 * public CLI; the bridge tests never synthesize geometry themselves.
 */

export interface Fixtures {
  dir: string;
  gridPaths: string[];
  stackPath: string;
  weightMapPath: string;
  indexPath: string;
  planPath: string;
  planLength: number;
  /** per-grid class counts as reported by `mpi-forge stats` */
  statsCounts: Array<Record<string, number>>;
}

export function makeFixtures(): Fixtures {
  const dir = mkdtempSync(join(tmpdir(), "mpi-bridge-"));

  const gridPaths: string[] = [];
  const statsCounts: Array<Record<string, number>> = [];
  const boxCounts = [4, 2, 0];
  const cylinderCounts = [0, 2, 3];
  for (let i = 0; i < 3; i++) {
    const grid = join(dir, `frame${i}.occv1`);
    const rigOut = i === 0 ? ["--rig-out", join(dir, "rig.json")] : [];
    runForge([
      "synth",
      "--seed", String(100 + i),
      "--grid-dims", "24,24,8",
      "--grid-origin=-6,-6,-1",
      "--grid-res", "0.5",
      "--boxes", String(boxCounts[i]),
      "--cylinders", String(cylinderCounts[i]),
      "--cameras", "2",
      "--size", "16x16",
      "--focal", "16",
      "--out", grid,
      ...rigOut,
    ]);
    gridPaths.push(grid);
    const statsPath = join(dir, `stats${i}.json`);
    runForge(["stats", "--grid", grid, "--out", statsPath]);
    const stats = JSON.parse(readFileSync(statsPath, "utf-8")) as {
      grid: { class_counts: Record<string, number> };
    };
    statsCounts.push(stats.grid.class_counts);
  }

  const stackPath = join(dir, "frame0.mpit");
  buildStack({
    grid: gridPaths[0],
    rig: join(dir, "rig.json"),
    out: stackPath,
    planes: 16,
    dMax: 10,
    size: "16x16",
  });

  const weightMapPath = join(dir, "frame0.wmap");
  runForge([
    "weights",
    "--stack", stackPath,
    "--view", "0",
    "--step", "250",
    "--total-steps", "1000",
    "--out", weightMapPath,
  ]);

  // The dataset index is a documented JSON input format; assemble it
  // from the stats recounts so presence comes from the core, not us.
  // Index counts cover semantic ids 1..16 only (no free/unknown).
  const indexPath = join(dir, "index.json");
  const frames = gridPaths.map((grid, i) => ({
    frame_id: `frame${i}`,
    grid,
    class_counts: Object.fromEntries(
      Object.entries(statsCounts[i]).filter(([id]) => Number(id) >= 1 && Number(id) <= 16),
    ),
  }));
  writeFileSync(indexPath, JSON.stringify({ frames }, null, 2) + "\n");

  const planPath = join(dir, "plan.json");
  const planLength = 10;
  runForge([
    "cbgs",
    "--index", indexPath,
    "--target-len", String(planLength),
    "--seed", "5",
    "--out", planPath,
  ]);

  return { dir, gridPaths, stackPath, weightMapPath, indexPath, planPath, planLength, statsCounts };
}
