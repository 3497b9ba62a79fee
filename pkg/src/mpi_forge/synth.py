"""Procedural scenes for tests and demos: a ground slab, boxes and
cylinders of chosen classes, and a surround camera rig.

Everything is driven by one seeded generator, so a recipe is a complete,
reproducible description of its scene. Objects never overwrite occupied
voxels (first writer wins) and rest on the ground surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .editing import _axis_centers, _axis_slice
from .errors import ValidationError
from .geometry import CameraModel, CameraRig, GridSpec, OccupancyGrid
from .labels import FREE, Semantic, is_valid_label

__all__ = [
    "ObjectPopulation",
    "SceneRecipe",
    "PlacedObject",
    "SynthResult",
    "synth_scene",
    "synth_scene_result",
    "surround_rig",
]


@dataclass(frozen=True)
class ObjectPopulation:
    """How many objects of one class to scatter, and how big they are.

    ``size_range`` bounds every sampled dimension in meters (box edge
    lengths; cylinder diameter and height).
    """

    label: int
    count: int
    size_range: tuple[float, float]
    shape: str = "box"

    def __post_init__(self):
        if not is_valid_label(self.label) or self.label in (0, 255):
            raise ValidationError(f"population label must be a semantic class, got {self.label}")
        if int(self.count) < 0:
            raise ValidationError(f"population count must be >= 0, got {self.count}")
        lo, hi = (float(v) for v in self.size_range)
        if not (0 < lo <= hi):
            raise ValidationError(f"size range must satisfy 0 < lo <= hi, got {self.size_range}")
        if self.shape not in ("box", "cylinder"):
            raise ValidationError(f"shape must be 'box' or 'cylinder', got {self.shape!r}")
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "size_range", (lo, hi))


def _default_grid() -> GridSpec:
    return GridSpec(dims=(96, 96, 16), origin=(-24.0, -24.0, -2.0), resolution=0.5)


@dataclass(frozen=True)
class SceneRecipe:
    """Seeded description of a synthetic scene and its camera rig.

    The ground slab fills every voxel layer whose center height is at or
    below ``ground_z`` (``None`` for no ground). Cameras sit on a circle
    of ``rig_radius`` around the grid center at ``camera_z``, looking
    outward at evenly spaced azimuths.
    """

    seed: int
    grid: GridSpec = field(default_factory=_default_grid)
    ground_class: int = int(Semantic.DRIVEABLE_SURFACE)
    ground_z: float | None = 0.0
    populations: tuple[ObjectPopulation, ...] = ()
    num_cameras: int = 6
    image_width: int = 96
    image_height: int = 64
    focal: float = 96.0
    rig_radius: float = 1.0
    camera_z: float = 1.5

    def __post_init__(self):
        if not is_valid_label(self.ground_class) or self.ground_class in (0, 255):
            raise ValidationError(f"ground class must be a semantic class, got {self.ground_class}")
        if int(self.num_cameras) < 1:
            raise ValidationError(f"need at least one camera, got {self.num_cameras}")
        if int(self.image_width) < 1 or int(self.image_height) < 1:
            raise ValidationError(
                f"image size must be positive, got {self.image_width}x{self.image_height}"
            )
        if not (float(self.focal) > 0):
            raise ValidationError(f"focal length must be positive, got {self.focal}")
        if float(self.rig_radius) < 0:
            raise ValidationError(f"rig radius must be >= 0, got {self.rig_radius}")
        object.__setattr__(self, "populations", tuple(self.populations))


@dataclass(frozen=True)
class PlacedObject:
    """One stamped object: metric bounds and how many voxels it claimed."""

    label: int
    shape: str
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]
    center: tuple[float, float]
    radius: float
    voxels_written: int


@dataclass(frozen=True)
class SynthResult:
    grid: OccupancyGrid
    rig: CameraRig
    placements: tuple[PlacedObject, ...]


def surround_rig(recipe: SceneRecipe) -> CameraRig:
    """Outward-looking cameras at evenly spaced azimuths around the grid
    center. Camera axes: x right, y down, z forward (optical axis)."""
    spec = recipe.grid
    cx = spec.origin[0] + spec.dims[0] * spec.resolution / 2.0
    cy = spec.origin[1] + spec.dims[1] * spec.resolution / 2.0
    w, h = int(recipe.image_width), int(recipe.image_height)
    k = np.array(
        [
            [recipe.focal, 0.0, (w - 1) / 2.0],
            [0.0, recipe.focal, (h - 1) / 2.0],
            [0.0, 0.0, 1.0],
        ]
    )
    cameras = []
    names = []
    for i in range(int(recipe.num_cameras)):
        theta = 2.0 * np.pi * i / recipe.num_cameras
        forward = np.array([np.cos(theta), np.sin(theta), 0.0])
        right = np.array([np.sin(theta), -np.cos(theta), 0.0])
        down = np.array([0.0, 0.0, -1.0])
        rotation = np.column_stack([right, down, forward])
        translation = np.array(
            [cx + recipe.rig_radius * forward[0], cy + recipe.rig_radius * forward[1], recipe.camera_z]
        )
        cameras.append(
            CameraModel(k=k, rotation=rotation, translation=translation, width=w, height=h)
        )
        names.append(f"cam_{i}")
    return CameraRig(cameras=tuple(cameras), names=tuple(names))


def _stamp_first_writer(labels, spec, lo, hi, label, disc_center=None, radius=None):
    """Write ``label`` into FREE voxels whose centers fall in [lo, hi]
    (and inside the disc for cylinders). Returns voxels written."""
    slices = []
    for axis in range(3):
        s = _axis_slice(spec.dims[axis], spec.origin[axis], spec.resolution, lo[axis], hi[axis])
        if s is None:
            return 0
        slices.append(s)
    sx, sy, sz = slices
    block = labels[sx, sy, sz]
    if disc_center is None:
        mask = block == FREE
    else:
        centers_x = _axis_centers(spec.dims[0], spec.origin[0], spec.resolution)[sx]
        centers_y = _axis_centers(spec.dims[1], spec.origin[1], spec.resolution)[sy]
        dx = centers_x[:, None] - disc_center[0]
        dy = centers_y[None, :] - disc_center[1]
        disc = dx * dx + dy * dy <= radius * radius
        mask = disc[:, :, None] & (block == FREE)
    block[mask] = label
    return int(mask.sum())


def synth_scene_result(recipe: SceneRecipe) -> SynthResult:
    """Build the scene, returning the grid, the rig, and every placement."""
    spec = recipe.grid
    rng = np.random.default_rng(recipe.seed)
    labels = np.zeros(spec.dims, dtype=np.uint8)

    ground_top = spec.origin[2]
    if recipe.ground_z is not None:
        zs = _axis_centers(spec.dims[2], spec.origin[2], spec.resolution)
        layers = int(np.sum(zs <= recipe.ground_z))
        labels[:, :, :layers] = recipe.ground_class
        if layers:
            ground_top = spec.origin[2] + layers * spec.resolution

    extent = spec.extent_max
    placements = []
    for pop in recipe.populations:
        for _ in range(pop.count):
            lo_s, hi_s = pop.size_range
            if pop.shape == "box":
                sx, sy, sz = rng.uniform(lo_s, hi_s, size=3)
                cx = rng.uniform(spec.origin[0] + sx / 2, extent[0] - sx / 2)
                cy = rng.uniform(spec.origin[1] + sy / 2, extent[1] - sy / 2)
                lo = (cx - sx / 2, cy - sy / 2, ground_top)
                hi = (cx + sx / 2, cy + sy / 2, min(ground_top + sz, extent[2]))
                written = _stamp_first_writer(labels, spec, lo, hi, pop.label)
                placements.append(
                    PlacedObject(
                        label=pop.label,
                        shape="box",
                        min_corner=lo,
                        max_corner=hi,
                        center=(cx, cy),
                        radius=0.0,
                        voxels_written=written,
                    )
                )
            else:
                diameter, height = rng.uniform(lo_s, hi_s, size=2)
                radius = diameter / 2
                cx = rng.uniform(spec.origin[0] + radius, extent[0] - radius)
                cy = rng.uniform(spec.origin[1] + radius, extent[1] - radius)
                lo = (cx - radius, cy - radius, ground_top)
                hi = (cx + radius, cy + radius, min(ground_top + height, extent[2]))
                written = _stamp_first_writer(
                    labels, spec, lo, hi, pop.label, disc_center=(cx, cy), radius=radius
                )
                placements.append(
                    PlacedObject(
                        label=pop.label,
                        shape="cylinder",
                        min_corner=lo,
                        max_corner=hi,
                        center=(cx, cy),
                        radius=radius,
                        voxels_written=written,
                    )
                )

    grid = OccupancyGrid(spec, labels, validate=False)
    return SynthResult(grid=grid, rig=surround_rig(recipe), placements=tuple(placements))


def synth_scene(recipe: SceneRecipe) -> tuple[OccupancyGrid, CameraRig]:
    result = synth_scene_result(recipe)
    return result.grid, result.rig
