import { execFileSync } from "node:child_process";

/**
 * All numeric artifacts come from the core toolchain; the bridge only
 * decodes. This wrapper shells out to `mpi-forge` so trainers can
 * request builds without linking any geometry code.
 */

export interface BuildRequest {
  grid: string;
  rig: string;
  out: string;
  planes?: number;
  dMin?: number;
  dMax?: number;
  size?: string;
  threads?: number;
}

export class CliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
  ) {
    super(message);
    this.name = "CliError";
  }
}

export function runForge(args: string[], executable = "mpi-forge"): string {
  try {
    // capture stderr instead of inheriting it; failures surface via CliError
    return execFileSync(executable, args, { encoding: "utf-8", stdio: ["ignore", "pipe", "pipe"] });
  } catch (e) {
    const err = e as { status?: number | null; stderr?: string; message: string };
    throw new CliError(err.stderr?.trim() || err.message, err.status ?? -1);
  }
}

export function buildStack(req: BuildRequest, executable = "mpi-forge"): void {
  const args = ["build", "--grid", req.grid, "--rig", req.rig, "--out", req.out];
  if (req.planes !== undefined) args.push("--planes", String(req.planes));
  if (req.dMin !== undefined) args.push("--dmin", String(req.dMin));
  if (req.dMax !== undefined) args.push("--dmax", String(req.dMax));
  if (req.size !== undefined) args.push("--size", req.size);
  if (req.threads !== undefined) args.push("--threads", String(req.threads));
  runForge(args, executable);
}
