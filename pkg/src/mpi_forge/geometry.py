"""Coordinate frames, pinhole cameras, and dense semantic occupancy grids.

Conventions, fixed once and recorded in the file formats:

* World/occupancy coordinates are metric, right-handed, z up.
* A camera is a zero-distortion pinhole. Camera coordinates are x right,
  y down, z forward (optical axis). ``T = [R | t]`` maps camera
  coordinates to world coordinates, ``X_world = R @ X_cam + t``.
* Pixel coordinates are continuous ``(u, v) = (column, row)``; the ray of
  a sample passes through the coordinate value exactly, with no implicit
  half-pixel shift.
* A grid voxel ``(ix, iy, iz)`` spans the half-open metric interval
  ``origin + [i, i+1) * resolution`` per axis; a point belongs to the
  voxel whose interval contains it (floor-based containment, no ties).
* Grid label storage is x-major -> y -> z, i.e. C order of an
  ``(nx, ny, nz)`` uint8 array.

Back-projection and lookup are written as explicit per-component
arithmetic rather than matrix products so that scalar and vectorized
callers evaluate the identical floating-point expression tree. The
plane-sweep builder relies on this for bit-identical agreement with the
per-pixel reference loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .labels import FREE, validate_label_array

__all__ = [
    "GridSpec",
    "OccupancyGrid",
    "CameraModel",
    "CameraRig",
    "world_from_pixel",
    "voxel_index",
    "lookup_semantic",
]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a dense voxel grid: counts, metric origin, voxel size.

    ``origin`` is the minimum corner in meters; ``resolution`` is the
    uniform edge length of one voxel. The covered extent is
    ``[origin, origin + dims * resolution)`` per axis.
    """

    dims: tuple[int, int, int]
    origin: tuple[float, float, float]
    resolution: float

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) <= 0 for d in self.dims):
            raise ValidationError(f"grid dims must be three positive counts, got {self.dims}")
        if len(self.origin) != 3:
            raise ValidationError(f"grid origin must have three components, got {self.origin}")
        if not (float(self.resolution) > 0.0):
            raise ValidationError(f"grid resolution must be positive, got {self.resolution}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def num_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def extent_max(self) -> tuple[float, float, float]:
        """Metric max corner, origin + dims * resolution."""
        return tuple(o + d * self.resolution for o, d in zip(self.origin, self.dims))

    def voxel_centers(self, indices: np.ndarray) -> np.ndarray:
        """Metric centers of voxels given an (..., 3) integer index array."""
        idx = np.asarray(indices, dtype=np.float64)
        return np.asarray(self.origin) + (idx + 0.5) * self.resolution


class OccupancyGrid:
    """Dense 3D array of semantic labels with metric placement.

    ``labels`` has shape ``spec.dims`` and dtype uint8, C order (x-major).
    Grids are treated as immutable after construction; editing produces a
    new grid.
    """

    def __init__(self, spec: GridSpec, labels: np.ndarray, validate: bool = True):
        labels = np.ascontiguousarray(labels, dtype=np.uint8)
        if labels.shape != tuple(spec.dims):
            if labels.size == spec.num_voxels:
                labels = labels.reshape(spec.dims)
            else:
                raise ValidationError(
                    f"label array has {labels.size} entries, grid needs {spec.num_voxels}"
                )
        if validate and not validate_label_array(labels):
            raise ValidationError("label array contains ids outside 0..16 and 255")
        self.spec = spec
        self.labels = labels
        self.labels.setflags(write=False)

    @classmethod
    def empty(cls, spec: GridSpec) -> "OccupancyGrid":
        return cls(spec, np.zeros(spec.dims, dtype=np.uint8), validate=False)

    def copy_labels(self) -> np.ndarray:
        out = self.labels.copy()
        out.setflags(write=True)
        return out

    def class_counts(self) -> dict[int, int]:
        """Voxel count per present class id (FREE included when present)."""
        counts = np.bincount(self.labels.reshape(-1), minlength=256)
        return {int(i): int(c) for i, c in enumerate(counts) if c > 0}

    def lookup_batch(self, px: np.ndarray, py: np.ndarray, pz: np.ndarray) -> np.ndarray:
        """Vectorized nearest-voxel lookup; FREE outside the extent.

        Evaluates floor((p - origin) / resolution) per axis with the same
        expression as :func:`voxel_index`, elementwise over arrays.
        """
        ox, oy, oz = self.spec.origin
        res = self.spec.resolution
        nx, ny, nz = self.spec.dims
        fx = np.floor((px - ox) / res)
        fy = np.floor((py - oy) / res)
        fz = np.floor((pz - oz) / res)
        valid = (
            (fx >= 0) & (fx < nx)
            & (fy >= 0) & (fy < ny)
            & (fz >= 0) & (fz < nz)
        )
        out = np.full(np.broadcast(fx, fy, fz).shape, FREE, dtype=np.uint8)
        if np.any(valid):
            ix = fx[valid].astype(np.int64)
            iy = fy[valid].astype(np.int64)
            iz = fz[valid].astype(np.int64)
            out[valid] = self.labels[ix, iy, iz]
        return out


def _orthonormality_defect(rotation: np.ndarray) -> float:
    return float(np.max(np.abs(rotation.T @ rotation - np.eye(3))))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics K, rigid camera-to-world transform, size.

    ``k`` is the 3x3 intrinsic matrix (fx, fy on the diagonal, principal
    point in the last column; zero skew permitted but representable).
    ``rotation``/``translation`` form the transform mapping camera
    coordinates to world/occupancy coordinates.
    """

    k: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    width: int
    height: int
    k_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.float64).reshape(3, 3)
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        trans = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (k[0, 0] > 0 and k[1, 1] > 0):
            raise ValidationError(f"focal lengths must be positive, got fx={k[0, 0]}, fy={k[1, 1]}")
        if _orthonormality_defect(rot) > 1e-9:
            raise ValidationError("rotation is not orthonormal within 1e-9")
        if np.linalg.det(rot) < 0:
            raise ValidationError("rotation has negative determinant (a reflection)")
        if not (int(self.width) > 0 and int(self.height) > 0):
            raise ValidationError(f"image size must be positive, got {self.width}x{self.height}")
        if abs(np.linalg.det(k)) < 1e-15:
            raise ValidationError("intrinsic matrix is not invertible")
        for arr in (k, rot, trans):
            arr.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        k_inv = np.linalg.inv(k)
        k_inv.setflags(write=False)
        object.__setattr__(self, "k_inv", k_inv)

    @classmethod
    def from_pinhole(
        cls,
        fx: float,
        fy: float,
        cx: float,
        cy: float,
        width: int,
        height: int,
        rotation: np.ndarray | None = None,
        translation: np.ndarray | None = None,
    ) -> "CameraModel":
        k = np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
        return cls(
            k=k,
            rotation=np.eye(3) if rotation is None else rotation,
            translation=np.zeros(3) if translation is None else translation,
            width=width,
            height=height,
        )

    @property
    def fx(self) -> float:
        return float(self.k[0, 0])

    @property
    def fy(self) -> float:
        return float(self.k[1, 1])


@dataclass(frozen=True)
class CameraRig:
    """Ordered multi-camera rig with unique per-camera names."""

    cameras: tuple[CameraModel, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        cameras = tuple(self.cameras)
        names = tuple(str(n) for n in self.names)
        if len(cameras) < 1:
            raise ValidationError("a rig needs at least one camera")
        if len(names) != len(cameras):
            raise ValidationError(f"{len(names)} names for {len(cameras)} cameras")
        if len(set(names)) != len(names):
            raise ValidationError("camera names must be unique")
        object.__setattr__(self, "cameras", cameras)
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.cameras)


def world_from_pixel(u, v, d, cam: CameraModel):
    """Back-project pixel (u, v) at frustum depth d to a world point.

    Computes T . K^-1 . (u*d, v*d, d)^T: the frustum-space point is mapped
    to camera coordinates through the inverse intrinsics, then to world
    coordinates through the rigid transform. Accepts scalars or
    broadcastable arrays for u, v, d and returns (x, y, z) of the
    broadcast shape. d = 0 degenerates to the camera's world position.
    """
    ki = cam.k_inv
    pu = u * d
    pv = v * d
    cx = ki[0, 0] * pu + ki[0, 1] * pv + ki[0, 2] * d
    cy = ki[1, 0] * pu + ki[1, 1] * pv + ki[1, 2] * d
    cz = ki[2, 0] * pu + ki[2, 1] * pv + ki[2, 2] * d
    r = cam.rotation
    t = cam.translation
    wx = r[0, 0] * cx + r[0, 1] * cy + r[0, 2] * cz + t[0]
    wy = r[1, 0] * cx + r[1, 1] * cy + r[1, 2] * cz + t[1]
    wz = r[2, 0] * cx + r[2, 1] * cy + r[2, 2] * cz + t[2]
    return wx, wy, wz


def voxel_index(p, spec: GridSpec):
    """Voxel index containing world point p, or None outside the extent.

    index = floor((p - origin) / resolution) per axis; valid when every
    axis lands in [0, dim).
    """
    ox, oy, oz = spec.origin
    res = spec.resolution
    nx, ny, nz = spec.dims
    fx = np.floor((p[0] - ox) / res)
    fy = np.floor((p[1] - oy) / res)
    fz = np.floor((p[2] - oz) / res)
    if 0 <= fx < nx and 0 <= fy < ny and 0 <= fz < nz:
        return int(fx), int(fy), int(fz)
    return None


def lookup_semantic(grid: OccupancyGrid, p) -> int:
    """Nearest-voxel semantic label at world point p; FREE outside the grid.

    Nearest means the label of the voxel whose half-open interval contains
    p. Frustums legitimately leave the grid (sky, far range), so
    out-of-extent is a valid FREE answer rather than an error.
    """
    idx = voxel_index(p, grid.spec)
    if idx is None:
        return FREE
    return int(grid.labels[idx])
