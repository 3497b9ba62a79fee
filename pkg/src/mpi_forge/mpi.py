"""Multi-plane image stacks built from occupancy grids and camera rigs.

A stack holds, for each camera of a rig, D fronto-parallel label planes at
depths spaced uniformly over [d_min, d_max). Plane l of a view is produced
by back-projecting every output pixel to frustum depth d_l and sampling
the nearest occupancy voxel at the resulting world point, so each plane is
a semantic slice of the camera frustum and the full stack is an
N x D x H x W tensor of class indices.

Also renders the flat 2D conditions a stack subsumes: the front-most
semantic map and the normalized depth map, plus palette colorization for
previews.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import CameraModel, CameraRig, GridSpec, OccupancyGrid, world_from_pixel
from .labels import FREE

__all__ = [
    "MpiConfig",
    "MpiStack",
    "plane_depths",
    "build_view_mpi",
    "build_rig_mpi",
    "composite_semantic",
    "composite_depth",
    "composite_depth_meters",
    "colorize",
    "scale_intrinsics",
]


@dataclass(frozen=True)
class MpiConfig:
    """Plane count, metric depth range, and output resolution of a stack."""

    planes: int
    d_min: float
    d_max: float
    height: int
    width: int

    def __post_init__(self):
        if int(self.planes) < 2:
            raise ValidationError(f"need at least 2 planes, got {self.planes}")
        if not (0.0 <= float(self.d_min) < float(self.d_max)):
            raise ValidationError(
                f"depth range must satisfy 0 <= d_min < d_max, got [{self.d_min}, {self.d_max}]"
            )
        if int(self.height) <= 0 or int(self.width) <= 0:
            raise ValidationError(f"output size must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "planes", int(self.planes))
        object.__setattr__(self, "d_min", float(self.d_min))
        object.__setattr__(self, "d_max", float(self.d_max))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "width", int(self.width))


def plane_depths(config: MpiConfig) -> np.ndarray:
    """Depth of every plane: d_l = d_min + (d_max - d_min) * l / D, l in [0, D).

    Strictly increasing, starting exactly at d_min; the last plane sits one
    spacing short of d_max.
    """
    l = np.arange(config.planes, dtype=np.float64)
    return config.d_min + (config.d_max - config.d_min) * l / config.planes


@dataclass(frozen=True)
class MpiStack:
    """Semantic MPI tensor for a rig: labels[n, l, v, u] plus plane metadata.

    ``labels`` is uint8 with shape (N, D, H, W) in rig camera order.
    ``grid_spec`` records the source grid geometry when known; it rides
    along into the file sidecar.
    """

    labels: np.ndarray
    config: MpiConfig
    rig: CameraRig
    grid_spec: GridSpec | None = None
    plane_depths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        expected = (len(self.rig), self.config.planes, self.config.height, self.config.width)
        if labels.shape != expected:
            raise ValidationError(f"stack shape {labels.shape} does not match {expected}")
        labels.setflags(write=False)
        depths = plane_depths(self.config)
        depths.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "plane_depths", depths)

    @property
    def num_views(self) -> int:
        return self.labels.shape[0]

    def view(self, index: int) -> np.ndarray:
        if not (0 <= index < self.num_views):
            raise ValidationError(f"view index {index} out of range [0, {self.num_views})")
        return self.labels[index]


def _native_pixel_axes(cam: CameraModel, config: MpiConfig):
    # Output pixel (u, v) samples the camera's native coordinate
    # (u * native_w / W, v * native_h / H); at equal sizes this is the
    # identity so scaling costs nothing.
    sx = cam.width / config.width
    sy = cam.height / config.height
    u = np.arange(config.width, dtype=np.float64) * sx
    v = np.arange(config.height, dtype=np.float64) * sy
    return np.meshgrid(u, v)


def build_view_mpi(
    grid: OccupancyGrid, cam: CameraModel, config: MpiConfig, threads: int = 1
) -> np.ndarray:
    """Sample one camera's D x H x W label slab from the occupancy grid.

    Entry (l, v, u) is the nearest-voxel label at the back-projection of
    output pixel (u, v) to plane depth d_l; FREE where the point leaves
    the grid. Planes are independent, so work is split across them; the
    result does not depend on the thread count or schedule.

    Whether the camera pose is expressed in the same frame as the grid is
    not detectable here and stays the caller's responsibility.
    """
    depths = plane_depths(config)
    uu, vv = _native_pixel_axes(cam, config)
    out = np.empty((config.planes, config.height, config.width), dtype=np.uint8)

    def fill_plane(l: int):
        px, py, pz = world_from_pixel(uu, vv, depths[l], cam)
        out[l] = grid.lookup_batch(px, py, pz)

    _run_indexed(fill_plane, config.planes, threads)
    return out


def build_rig_mpi(
    grid: OccupancyGrid, rig: CameraRig, config: MpiConfig, threads: int = 1
) -> MpiStack:
    """Build per-view slabs for every rig camera and stack them in rig order.

    Parallelizes over (view, plane) tasks; each task writes a disjoint
    plane of the preallocated output, so any schedule produces identical
    bytes.
    """
    depths = plane_depths(config)
    out = np.empty(
        (len(rig), config.planes, config.height, config.width), dtype=np.uint8
    )
    axes = [_native_pixel_axes(cam, config) for cam in rig.cameras]

    def fill(task: int):
        n, l = divmod(task, config.planes)
        uu, vv = axes[n]
        px, py, pz = world_from_pixel(uu, vv, depths[l], rig.cameras[n])
        out[n, l] = grid.lookup_batch(px, py, pz)

    _run_indexed(fill, len(rig) * config.planes, threads)
    return MpiStack(labels=out, config=config, rig=rig, grid_spec=grid.spec)


def _run_indexed(fn, count: int, threads: int):
    if threads <= 1 or count <= 1:
        for i in range(count):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # Consume to surface worker exceptions.
        list(pool.map(fn, range(count)))


def composite_semantic(stack: MpiStack, view: int) -> np.ndarray:
    """Front-most semantic map: per pixel the label of the nearest
    non-FREE plane, FREE when the whole ray is empty.

    This is the flat 2D condition a single-plane conditioning model would
    see; it discards everything the stack knows about occluded content.
    """
    slab = stack.view(view)
    occupied = slab != FREE
    hit = occupied.any(axis=0)
    first = occupied.argmax(axis=0)
    rows, cols = np.indices(first.shape)
    out = slab[first, rows, cols]
    out[~hit] = FREE
    return out


def composite_depth(stack: MpiStack, view: int) -> np.ndarray:
    """First-hit depth normalized to [0, 255] as uint8; 255 for empty rays.

    value = round(255 * (d_first - d_min) / (d_max - d_min)), rounding
    half up.
    """
    slab = stack.view(view)
    occupied = slab != FREE
    hit = occupied.any(axis=0)
    first = occupied.argmax(axis=0)
    d_first = stack.plane_depths[first]
    span = stack.config.d_max - stack.config.d_min
    scaled = 255.0 * (d_first - stack.config.d_min) / span
    out = np.floor(scaled + 0.5).astype(np.uint8)
    out[~hit] = 255
    return out


def composite_depth_meters(stack: MpiStack, view: int) -> np.ndarray:
    """First-hit plane depth in meters per pixel; +inf for empty rays.

    Metric companion of :func:`composite_depth`, used to drive
    depth-aware loss weights.
    """
    slab = stack.view(view)
    occupied = slab != FREE
    hit = occupied.any(axis=0)
    first = occupied.argmax(axis=0)
    out = stack.plane_depths[first].astype(np.float64)
    out[~hit] = np.inf
    return out


def colorize(labels: np.ndarray, colors) -> np.ndarray:
    """Map a label array of any shape to RGB uint8 (shape + (3,)).

    ``colors`` maps class id -> (r, g, b). FREE defaults to black when
    absent from the mapping; any other missing label is an error naming
    the offending id.
    """
    labels = np.asarray(labels, dtype=np.uint8)
    table = np.zeros((256, 3), dtype=np.uint8)
    known = np.zeros(256, dtype=bool)
    known[FREE] = True
    for label, rgb in dict(colors).items():
        table[int(label)] = np.asarray(rgb, dtype=np.uint8)
        known[int(label)] = True
    present = np.unique(labels)
    missing = [int(p) for p in present if not known[p]]
    if missing:
        raise ValidationError(f"palette has no entry for label(s) {missing}")
    return table[labels]


def scale_intrinsics(cam: CameraModel, factor: float) -> CameraModel:
    """Scale focal lengths by ``factor``, keeping principal point and size.

    factor < 1 widens the field of view (zoom out); factor > 1 narrows it.
    """
    if not (float(factor) > 0.0):
        raise ValidationError(f"focal scale factor must be positive, got {factor}")
    k = cam.k.copy()
    k.setflags(write=True)
    k[0, 0] *= factor
    k[1, 1] *= factor
    return CameraModel(
        k=k,
        rotation=cam.rotation,
        translation=cam.translation,
        width=cam.width,
        height=cam.height,
    )
