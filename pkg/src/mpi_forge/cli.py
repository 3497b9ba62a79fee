"""mpi-forge command line: every pipeline stage behind one executable.

Exit codes: 0 success, 1 validation error (bad flags, bad values, invalid
edit script), 2 IO error (missing or malformed files), 3 check failure
(gradcheck over tolerance). Diagnostics go to standard error; data goes
to files only.

Option precedence is flags > config file (``--config conf.json``, keys =
long option names with underscores) > built-in defaults. ``--threads``
additionally falls back to the ``MPI_FORGE_THREADS`` environment
variable before its default of 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .cbgs import balance_report, build_sampling_plan
from .conditioning import run_gradchecks
from .editing import EditScript, apply_edit_script, diff_grids
from .errors import FormatError, ValidationError
from .formats import (
    DEFAULT_PALETTE,
    read_grid,
    read_index,
    read_palette,
    read_rig,
    read_stack,
    write_grid,
    write_plan,
    write_rig,
    write_stack,
    write_weight_map,
    write_pgm,
    write_ppm,
)
from .geometry import GridSpec
from .labels import FREE, Semantic
from .mpi import (
    MpiConfig,
    build_rig_mpi,
    colorize,
    composite_depth,
    composite_depth_meters,
    composite_semantic,
)
from .reweigh import ReweighConfig, build_weight_map
from .synth import ObjectPopulation, SceneRecipe, synth_scene

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for IO
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _say(message: str):
    print(f"mpi-forge: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# option merging


def _load_config(path):
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return obj


def _pick(args, cfg, name, default=None, required=False):
    """flags > config > default; None marks an unset flag."""
    value = getattr(args, name)
    if value is None:
        value = cfg.get(name, default)
    if value is None and required:
        raise ValidationError(f"missing required option --{name.replace('_', '-')}")
    return value


def _pick_threads(args, cfg):
    value = _pick(args, cfg, "threads")
    if value is None:
        value = os.environ.get("MPI_FORGE_THREADS", 1)
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"thread count must be an integer, got {value!r}")
    if threads < 1:
        raise ValidationError(f"thread count must be >= 1, got {threads}")
    return threads


def _parse_size(text) -> tuple[int, int]:
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise ValidationError(f"size must look like 800x448, got {text!r}")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"size must look like 800x448, got {text!r}")
    return w, h


def _parse_triple(text, cast, what) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 3:
        raise ValidationError(f"{what} must be three comma-separated values, got {text!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError:
        raise ValidationError(f"{what} must be three comma-separated values, got {text!r}")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    dims = _parse_triple(_pick(args, cfg, "grid_dims", "96,96,16"), int, "--grid-dims")
    origin = _parse_triple(_pick(args, cfg, "grid_origin", "-24,-24,-2"), float, "--grid-origin")
    width, height = _parse_size(_pick(args, cfg, "size", "96x64"))
    populations = []
    boxes = int(_pick(args, cfg, "boxes", 0))
    cylinders = int(_pick(args, cfg, "cylinders", 0))
    if boxes:
        populations.append(
            ObjectPopulation(
                label=int(_pick(args, cfg, "box_class", int(Semantic.CAR))),
                count=boxes,
                size_range=(1.5, 5.0),
                shape="box",
            )
        )
    if cylinders:
        populations.append(
            ObjectPopulation(
                label=int(_pick(args, cfg, "cylinder_class", int(Semantic.TRAFFIC_CONE))),
                count=cylinders,
                size_range=(0.5, 2.0),
                shape="cylinder",
            )
        )
    recipe = SceneRecipe(
        seed=int(_pick(args, cfg, "seed", 0)),
        grid=GridSpec(
            dims=dims,
            origin=origin,
            resolution=float(_pick(args, cfg, "grid_res", 0.5)),
        ),
        ground_class=int(_pick(args, cfg, "ground_class", int(Semantic.DRIVEABLE_SURFACE))),
        ground_z=None if args.no_ground else float(_pick(args, cfg, "ground_z", 0.0)),
        populations=tuple(populations),
        num_cameras=int(_pick(args, cfg, "cameras", 6)),
        image_width=width,
        image_height=height,
        focal=float(_pick(args, cfg, "focal", width)),
    )
    out = _pick(args, cfg, "out", required=True)
    grid, rig = synth_scene(recipe)
    write_grid(grid, out)
    if args.rig_out or "rig_out" in cfg:
        write_rig(rig, _pick(args, cfg, "rig_out"))
    if args.verbose:
        _say(f"wrote {out}")
    return 0


def _cmd_build(args) -> int:
    cfg = _load_config(args.config)
    grid = read_grid(_pick(args, cfg, "grid", required=True))
    rig = read_rig(_pick(args, cfg, "rig", required=True))
    width, height = _parse_size(_pick(args, cfg, "size", required=True))
    config = MpiConfig(
        planes=int(_pick(args, cfg, "planes", 256)),
        d_min=float(_pick(args, cfg, "dmin", 0.0)),
        d_max=float(_pick(args, cfg, "dmax", 50.0)),
        height=height,
        width=width,
    )
    stack = build_rig_mpi(grid, rig, config, threads=_pick_threads(args, cfg))
    out = _pick(args, cfg, "out", required=True)
    write_stack(stack, out)
    if args.verbose:
        _say(f"wrote {out}")
    return 0


def _cmd_edit(args) -> int:
    cfg = _load_config(args.config)
    grid = read_grid(_pick(args, cfg, "grid", required=True))
    script_path = _pick(args, cfg, "script", required=True)
    script = EditScript.from_json(Path(script_path).read_text(encoding="utf-8"))
    edited = apply_edit_script(grid, script)
    out = _pick(args, cfg, "out", required=True)
    write_grid(edited, out)
    diff_out = _pick(args, cfg, "diff")
    if diff_out is not None:
        diff = diff_grids(grid, edited)
        Path(diff_out).write_text(
            json.dumps(diff.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    if args.verbose:
        _say(f"wrote {out}")
    return 0


def _cmd_composite(args) -> int:
    cfg = _load_config(args.config)
    stack = read_stack(_pick(args, cfg, "stack", required=True))
    view = int(_pick(args, cfg, "view", 0))
    semantic_out = _pick(args, cfg, "semantic")
    depth_out = _pick(args, cfg, "depth")
    if semantic_out is None and depth_out is None:
        raise ValidationError("nothing to do: pass --semantic and/or --depth")
    palette_path = _pick(args, cfg, "palette")
    palette = DEFAULT_PALETTE if palette_path is None else read_palette(palette_path)
    if semantic_out is not None:
        labels = composite_semantic(stack, view)
        write_ppm(colorize(labels, palette.colors()), semantic_out)
        if args.verbose:
            _say(f"wrote {semantic_out}")
    if depth_out is not None:
        write_pgm(composite_depth(stack, view), depth_out)
        if args.verbose:
            _say(f"wrote {depth_out}")
    return 0


def _cmd_weights(args) -> int:
    cfg = _load_config(args.config)
    stack = read_stack(_pick(args, cfg, "stack", required=True))
    view = int(_pick(args, cfg, "view", 0))
    config = ReweighConfig(
        total_steps=int(_pick(args, cfg, "total_steps", required=True)),
        max_weight=float(_pick(args, cfg, "max_weight", 2.0)),
        max_depth=float(_pick(args, cfg, "max_depth", 50.0)),
    )
    step = int(_pick(args, cfg, "step", required=True))
    semantic = composite_semantic(stack, view)
    depth_m = composite_depth_meters(stack, view)
    wmap = build_weight_map(semantic, depth_m, step, config)
    out = _pick(args, cfg, "out", required=True)
    write_weight_map(wmap, out)
    if args.verbose:
        _say(f"wrote {out}")
    return 0


def _cmd_cbgs(args) -> int:
    cfg = _load_config(args.config)
    index = read_index(_pick(args, cfg, "index", required=True))
    plan = build_sampling_plan(
        index,
        target_len=int(_pick(args, cfg, "target_len", required=True)),
        seed=int(_pick(args, cfg, "seed", 0)),
    )
    out = _pick(args, cfg, "out", required=True)
    write_plan(plan, out)
    report_out = _pick(args, cfg, "report")
    if report_out is not None:
        report = balance_report(plan, index)
        Path(report_out).write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    if args.verbose:
        _say(f"wrote {out}")
    return 0


def _cmd_gradcheck(args) -> int:
    cfg = _load_config(args.config)
    results = run_gradchecks(
        seed=int(_pick(args, cfg, "seed", 0)),
        cases=int(_pick(args, cfg, "cases", 20)),
        h=float(_pick(args, cfg, "step_size", 1e-5)),
        tol=float(_pick(args, cfg, "tol", 1e-4)),
    )
    width = max(len(r.op) for r in results)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        _say(f"{r.op:<{width}}  max rel err {r.max_rel_error:.3e}  tol {r.tolerance:.1e}  {status}")
    return 0 if all(r.passed for r in results) else 3


def _plane_fill_rates(labels) -> list[float]:
    occupied = labels != FREE
    return [float(occupied[:, l].mean()) for l in range(labels.shape[1])]


def _cmd_stats(args) -> int:
    cfg = _load_config(args.config)
    grid_path = _pick(args, cfg, "grid")
    stack_path = _pick(args, cfg, "stack")
    if grid_path is None and stack_path is None:
        raise ValidationError("nothing to do: pass --grid and/or --stack")
    doc = {}
    if grid_path is not None:
        grid = read_grid(grid_path)
        counts = grid.class_counts()
        occupied = sum(n for c, n in counts.items() if c != FREE)
        doc["grid"] = {
            "dims": list(grid.spec.dims),
            "origin": list(grid.spec.origin),
            "resolution": grid.spec.resolution,
            "class_counts": {str(c): n for c, n in sorted(counts.items())},
            "occupancy_fraction": occupied / grid.spec.num_voxels,
        }
    if stack_path is not None:
        stack = read_stack(stack_path)
        values, freq = np.unique(stack.labels, return_counts=True)
        counts = {int(v): int(n) for v, n in zip(values, freq)}
        occupied = sum(n for c, n in counts.items() if c != FREE)
        doc["stack"] = {
            "shape": list(stack.labels.shape),
            "d_min": stack.config.d_min,
            "d_max": stack.config.d_max,
            "class_counts": {str(c): n for c, n in sorted(counts.items())},
            "occupancy_fraction": occupied / stack.labels.size,
            "plane_fill_rates": _plane_fill_rates(stack.labels),
        }
    out = _pick(args, cfg, "out", required=True)
    Path(out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if args.verbose:
        _say(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--config", help="JSON file supplying defaults for any option")
    sub.add_argument("--threads", help="worker threads (or MPI_FORGE_THREADS)")
    sub.add_argument("-v", "--verbose", action="store_true", help="progress notes on stderr")


def _build_parser() -> _Parser:
    parser = _Parser(prog="mpi-forge", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--seed")
    p.add_argument("--out", help="output OCCV1 grid path")
    p.add_argument("--rig-out", dest="rig_out", help="also write the surround rig JSON")
    p.add_argument("--grid-dims", dest="grid_dims", help="nx,ny,nz")
    p.add_argument("--grid-origin", dest="grid_origin", help="x,y,z of the minimum corner")
    p.add_argument("--grid-res", dest="grid_res", help="voxel edge length in meters")
    p.add_argument("--ground-class", dest="ground_class")
    p.add_argument("--ground-z", dest="ground_z")
    p.add_argument("--no-ground", action="store_true", help="skip the ground slab")
    p.add_argument("--boxes", help="number of box objects")
    p.add_argument("--box-class", dest="box_class")
    p.add_argument("--cylinders", help="number of cylinder objects")
    p.add_argument("--cylinder-class", dest="cylinder_class")
    p.add_argument("--cameras", help="surround camera count")
    p.add_argument("--size", help="native camera resolution, e.g. 96x64")
    p.add_argument("--focal", help="focal length in pixels")
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = subs.add_parser("build", help="build an MPI stack from grid + rig")
    p.add_argument("--grid", help="OCCV1 input")
    p.add_argument("--rig", help="rig JSON input")
    p.add_argument("--planes", help="plane count D")
    p.add_argument("--dmin", help="near depth in meters")
    p.add_argument("--dmax", help="far depth in meters")
    p.add_argument("--size", help="output resolution WxH, e.g. 800x448")
    p.add_argument("--out", help="output MPIT path")
    _add_common(p)
    p.set_defaults(func=_cmd_build)

    p = subs.add_parser("edit", help="apply an edit script to a grid")
    p.add_argument("--grid", help="OCCV1 input")
    p.add_argument("--script", help="edit script JSON")
    p.add_argument("--out", help="output OCCV1 path")
    p.add_argument("--diff", help="optional JSON summary of changed voxels")
    _add_common(p)
    p.set_defaults(func=_cmd_edit)

    p = subs.add_parser("composite", help="render 2D maps from a stack")
    p.add_argument("--stack", help="MPIT input")
    p.add_argument("--view", help="view index")
    p.add_argument("--semantic", help="colorized semantic map PPM output")
    p.add_argument("--depth", help="normalized depth PGM output")
    p.add_argument("--palette", help="palette JSON (defaults to the built-in palette)")
    _add_common(p)
    p.set_defaults(func=_cmd_composite)

    p = subs.add_parser("weights", help="emit a loss weight map")
    p.add_argument("--stack", help="MPIT input")
    p.add_argument("--view", help="view index")
    p.add_argument("--step", help="current training step")
    p.add_argument("--total-steps", dest="total_steps", help="schedule length n")
    p.add_argument("--max-weight", dest="max_weight", help="peak weight m")
    p.add_argument("--max-depth", dest="max_depth", help="depth cap in meters")
    p.add_argument("--out", help="output WMAP path")
    _add_common(p)
    p.set_defaults(func=_cmd_weights)

    p = subs.add_parser("cbgs", help="build a class-balanced sampling plan")
    p.add_argument("--index", help="dataset index JSON")
    p.add_argument("--target-len", dest="target_len", help="plan length")
    p.add_argument("--seed")
    p.add_argument("--out", help="output plan JSON")
    p.add_argument("--report", help="optional balance report JSON")
    _add_common(p)
    p.set_defaults(func=_cmd_cbgs)

    p = subs.add_parser("gradcheck", help="verify analytic gradients")
    p.add_argument("--seed")
    p.add_argument("--cases", help="random instances per op")
    p.add_argument("--tol", help="max relative error allowed")
    p.add_argument("--step-size", dest="step_size", help="finite difference h")
    _add_common(p)
    p.set_defaults(func=_cmd_gradcheck)

    p = subs.add_parser("stats", help="summarize a grid or stack as JSON")
    p.add_argument("--grid", help="OCCV1 input")
    p.add_argument("--stack", help="MPIT input")
    p.add_argument("--out", help="output JSON path")
    _add_common(p)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        # argparse --help exits 0; our error() override exits 1
        code = exc.code
        return int(code) if isinstance(code, int) else 1
    except ValidationError as exc:
        _say(str(exc))
        return 1
    except FormatError as exc:
        _say(str(exc))
        return 2
    except OSError as exc:
        _say(str(exc))
        return 2
    except (TypeError, ValueError) as exc:
        # e.g. a non-numeric value handed to a numeric option
        _say(f"invalid value: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
