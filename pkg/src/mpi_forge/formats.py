"""Bit-exact file formats for every pipeline artifact.

Binary layouts (all integers and floats little-endian):

====== ====================================================================
OCCV1  magic ``OCCV1\\0`` | u32 nx, ny, nz | f32 origin x, y, z
       | f32 resolution | nx*ny*nz u8 labels, x-major (x slowest)
MPIT   magic ``MPIT\\0`` | u32 N, D, H, W | f32 d_min, d_max
       | N*D*H*W u8 labels, N-major | u32 sidecar byte length
       | sidecar JSON (UTF-8: rig, grid spec, pixel convention,
       plane indexing)
WMAP   magic ``WMAP`` | u32 H, W | f32 step fraction | H*W f32, row-major
====== ====================================================================

Weight maps serialize at f32: reading yields exactly the stored f32
values, so file -> object -> file reproduces the original bytes, while
freshly built f64 maps lose precision on first write (documented, not an
error). Rigs, palettes, sampling plans and dataset indexes are JSON.
Writers emit canonical JSON so identical objects give identical bytes.

Readers raise FormatError with a distinct diagnostic per failure class
(magic mismatch, truncation, zero dimension, dimension overflow, invalid
payload); no malformed input may surface anything else.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cbgs import DatasetIndex, FrameRecord, SamplingPlan
from .errors import FormatError, ValidationError
from .geometry import CameraModel, CameraRig, GridSpec, OccupancyGrid
from .labels import CLASS_NAMES, VALID_IDS
from .mpi import MpiConfig, MpiStack
from .reweigh import WeightMap

__all__ = [
    "Palette",
    "DEFAULT_PALETTE",
    "read_grid",
    "write_grid",
    "read_stack",
    "write_stack",
    "read_weight_map",
    "write_weight_map",
    "read_rig",
    "write_rig",
    "rig_from_dict",
    "rig_to_dict",
    "read_palette",
    "write_palette",
    "read_plan",
    "write_plan",
    "read_index",
    "write_index",
    "build_dataset_index",
    "write_ppm",
    "write_pgm",
]

_GRID_MAGIC = b"OCCV1\0"
_STACK_MAGIC = b"MPIT\0"
_WMAP_MAGIC = b"WMAP"

# any header promising more elements than this is treated as corrupt
# rather than handed to the allocator
_MAX_ELEMENTS = 1 << 40


class _Reader:
    """Cursor over an in-memory file image; every decode failure is a
    FormatError naming the file, field, and byte offset."""

    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = str(path)

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.data):
            raise FormatError(
                f"{self.path}: truncated {what} at byte {self.off}: "
                f"need {n} bytes, have {len(self.data) - self.off}"
            )
        chunk = self.data[self.off : self.off + n]
        self.off += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32(self, what: str) -> float:
        return float(struct.unpack("<f", self.take(4, what))[0])

    def magic(self, expected: bytes, fmt: str):
        got = self.take(len(expected), f"{fmt} magic")
        if got != expected:
            raise FormatError(f"{self.path}: magic mismatch: expected {expected!r}, got {got!r}")

    def done(self, fmt: str):
        if self.off != len(self.data):
            raise FormatError(
                f"{self.path}: {len(self.data) - self.off} trailing bytes after {fmt} payload"
            )


def _check_dims(path, fmt: str, **dims: int) -> int:
    total = 1
    for name, value in dims.items():
        if value == 0:
            raise FormatError(f"{path}: zero dimension {name} in {fmt} header")
        total *= value
    if total > _MAX_ELEMENTS:
        raise FormatError(f"{path}: {fmt} dimension overflow: {dims} exceeds {_MAX_ELEMENTS} elements")
    return total


def _checked_labels(raw: bytes, shape: tuple[int, ...], path) -> np.ndarray:
    labels = np.frombuffer(raw, dtype=np.uint8).reshape(shape)
    bad = np.unique(labels[~np.isin(labels, list(VALID_IDS))])
    if bad.size:
        raise FormatError(f"{path}: invalid label ids {bad.tolist()}")
    return labels


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


# ---------------------------------------------------------------------------
# OCCV1 occupancy grids


def write_grid(grid: OccupancyGrid, path) -> None:
    nx, ny, nz = grid.spec.dims
    ox, oy, oz = grid.spec.origin
    header = _GRID_MAGIC + struct.pack("<IIIffff", nx, ny, nz, ox, oy, oz, grid.spec.resolution)
    Path(path).write_bytes(header + grid.labels.tobytes(order="C"))


def read_grid(path) -> OccupancyGrid:
    r = _Reader(_read_bytes(path), path)
    r.magic(_GRID_MAGIC, "OCCV1")
    nx = r.u32("nx")
    ny = r.u32("ny")
    nz = r.u32("nz")
    total = _check_dims(path, "OCCV1", nx=nx, ny=ny, nz=nz)
    origin = (r.f32("origin x"), r.f32("origin y"), r.f32("origin z"))
    resolution = r.f32("resolution")
    raw = r.take(total, "label payload")
    r.done("OCCV1")
    labels = _checked_labels(raw, (nx, ny, nz), path)
    try:
        spec = GridSpec(dims=(nx, ny, nz), origin=origin, resolution=resolution)
        return OccupancyGrid(spec=spec, labels=labels)
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid OCCV1 header: {exc}") from exc


# ---------------------------------------------------------------------------
# camera rigs (JSON)


def rig_to_dict(rig: CameraRig) -> dict:
    cameras = []
    for name, cam in zip(rig.names, rig.cameras):
        t = np.hstack([cam.rotation, cam.translation[:, None]])
        cameras.append(
            {
                "name": name,
                "k": [[float(v) for v in row] for row in cam.k],
                "t": [[float(v) for v in row] for row in t],
                "width": int(cam.width),
                "height": int(cam.height),
            }
        )
    return {"cameras": cameras}


def rig_from_dict(obj, context: str = "rig") -> CameraRig:
    try:
        cameras = obj["cameras"]
        if not isinstance(cameras, list) or not cameras:
            raise FormatError(f"{context}: 'cameras' must be a nonempty list")
        models = []
        names = []
        for i, entry in enumerate(cameras):
            k = np.array(entry["k"], dtype=np.float64)
            t = np.array(entry["t"], dtype=np.float64)
            if k.shape != (3, 3) or t.shape != (3, 4):
                raise FormatError(
                    f"{context}: camera {i} needs 3x3 k and 3x4 t, got {k.shape} and {t.shape}"
                )
            models.append(
                CameraModel(
                    k=k,
                    rotation=t[:, :3],
                    translation=t[:, 3],
                    width=int(entry["width"]),
                    height=int(entry["height"]),
                )
            )
            names.append(str(entry["name"]))
        return CameraRig(cameras=tuple(models), names=tuple(names))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"{context}: malformed rig: {exc}") from exc


def write_rig(rig: CameraRig, path) -> None:
    _write_json(rig_to_dict(rig), path)


def read_rig(path) -> CameraRig:
    return rig_from_dict(_load_json(path), context=str(path))


# ---------------------------------------------------------------------------
# MPIT stacks


def _sidecar_dict(stack: MpiStack) -> dict:
    spec = stack.grid_spec
    return {
        "grid_spec": None
        if spec is None
        else {
            "dims": [int(d) for d in spec.dims],
            "origin": [float(v) for v in spec.origin],
            "resolution": float(spec.resolution),
        },
        "pixel_convention": "(u, v) = (column, row); rays pass through the exact integer coordinate",
        "plane_indexing": "d_l = d_min + (d_max - d_min) * l / D, l in 0..D-1",
        "rig": rig_to_dict(stack.rig),
    }


def write_stack(stack: MpiStack, path) -> None:
    n, d, h, w = stack.labels.shape
    header = _STACK_MAGIC + struct.pack(
        "<IIIIff", n, d, h, w, stack.config.d_min, stack.config.d_max
    )
    sidecar = json.dumps(_sidecar_dict(stack), sort_keys=True, separators=(",", ":")).encode()
    Path(path).write_bytes(
        header + stack.labels.tobytes(order="C") + struct.pack("<I", len(sidecar)) + sidecar
    )


def read_stack(path) -> MpiStack:
    r = _Reader(_read_bytes(path), path)
    r.magic(_STACK_MAGIC, "MPIT")
    n = r.u32("N")
    d = r.u32("D")
    h = r.u32("H")
    w = r.u32("W")
    total = _check_dims(path, "MPIT", N=n, D=d, H=h, W=w)
    d_min = r.f32("d_min")
    d_max = r.f32("d_max")
    raw = r.take(total, "label payload")
    sidecar_len = r.u32("sidecar length")
    sidecar_raw = r.take(sidecar_len, "sidecar")
    r.done("MPIT")
    labels = _checked_labels(raw, (n, d, h, w), path)
    try:
        sidecar = json.loads(sidecar_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: sidecar is not valid JSON: {exc}") from exc
    if not isinstance(sidecar, dict) or "rig" not in sidecar:
        raise FormatError(f"{path}: sidecar must be a JSON object with a 'rig' entry")
    rig = rig_from_dict(sidecar["rig"], context=f"{path}: sidecar")
    grid_spec = None
    if sidecar.get("grid_spec") is not None:
        gs = sidecar["grid_spec"]
        try:
            grid_spec = GridSpec(
                dims=tuple(int(v) for v in gs["dims"]),
                origin=tuple(float(v) for v in gs["origin"]),
                resolution=float(gs["resolution"]),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise FormatError(f"{path}: malformed sidecar grid_spec: {exc}") from exc
    try:
        config = MpiConfig(planes=d, d_min=d_min, d_max=d_max, height=h, width=w)
        return MpiStack(labels=labels, config=config, rig=rig, grid_spec=grid_spec)
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid MPIT header: {exc}") from exc


# ---------------------------------------------------------------------------
# WMAP weight maps


def write_weight_map(wmap: WeightMap, path) -> None:
    h, w = wmap.values.shape
    header = _WMAP_MAGIC + struct.pack("<IIf", h, w, wmap.step_fraction)
    Path(path).write_bytes(header + wmap.values.astype("<f4").tobytes(order="C"))


def read_weight_map(path) -> WeightMap:
    r = _Reader(_read_bytes(path), path)
    r.magic(_WMAP_MAGIC, "WMAP")
    h = r.u32("H")
    w = r.u32("W")
    total = _check_dims(path, "WMAP", H=h, W=w)
    frac = r.f32("step fraction")
    raw = r.take(4 * total, "weight payload")
    r.done("WMAP")
    values = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(h, w)
    try:
        return WeightMap(values=values, step_fraction=frac)
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid WMAP payload: {exc}") from exc


# ---------------------------------------------------------------------------
# palettes (JSON)


@dataclass(frozen=True)
class Palette:
    """Display names and RGB colors per semantic label.

    Must cover ids 0..16 and map FREE to black; extra ids (e.g. 255) are
    allowed.
    """

    entries: dict[int, tuple[str, tuple[int, int, int]]]

    def __post_init__(self):
        entries = {}
        for label, (name, rgb) in self.entries.items():
            rgb = tuple(int(c) for c in rgb)
            if len(rgb) != 3 or any(not (0 <= c <= 255) for c in rgb):
                raise ValidationError(f"label {label}: rgb must be three bytes, got {rgb}")
            entries[int(label)] = (str(name), rgb)
        missing = [c for c in range(17) if c not in entries]
        if missing:
            raise ValidationError(f"palette must cover ids 0..16, missing {missing}")
        if entries[0][1] != (0, 0, 0):
            raise ValidationError(f"FREE must map to black, got {entries[0][1]}")
        object.__setattr__(self, "entries", entries)

    def color(self, label: int) -> tuple[int, int, int]:
        return self.entries[int(label)][1]

    def name(self, label: int) -> str:
        return self.entries[int(label)][0]

    def colors(self) -> dict[int, tuple[int, int, int]]:
        return {label: rgb for label, (_, rgb) in self.entries.items()}

    def to_dict(self) -> dict:
        return {
            str(label): {"name": name, "rgb": list(rgb)}
            for label, (name, rgb) in sorted(self.entries.items())
        }

    @classmethod
    def from_dict(cls, obj, context: str = "palette") -> "Palette":
        try:
            entries = {}
            for key, value in obj.items():
                label = int(key)
                entries[label] = (str(value["name"]), tuple(int(c) for c in value["rgb"]))
            return cls(entries=entries)
        except (AttributeError, KeyError, TypeError, ValueError, ValidationError) as exc:
            raise FormatError(f"{context}: malformed palette: {exc}") from exc


DEFAULT_PALETTE = Palette(
    entries={
        0: (CLASS_NAMES[0], (0, 0, 0)),
        1: (CLASS_NAMES[1], (112, 128, 144)),
        2: (CLASS_NAMES[2], (220, 20, 60)),
        3: (CLASS_NAMES[3], (255, 127, 80)),
        4: (CLASS_NAMES[4], (255, 158, 0)),
        5: (CLASS_NAMES[5], (233, 150, 70)),
        6: (CLASS_NAMES[6], (255, 61, 99)),
        7: (CLASS_NAMES[7], (0, 0, 230)),
        8: (CLASS_NAMES[8], (255, 120, 0)),
        9: (CLASS_NAMES[9], (255, 140, 0)),
        10: (CLASS_NAMES[10], (255, 99, 71)),
        11: (CLASS_NAMES[11], (0, 207, 191)),
        12: (CLASS_NAMES[12], (175, 0, 75)),
        13: (CLASS_NAMES[13], (75, 0, 75)),
        14: (CLASS_NAMES[14], (112, 180, 60)),
        15: (CLASS_NAMES[15], (222, 184, 135)),
        16: (CLASS_NAMES[16], (0, 175, 0)),
        255: (CLASS_NAMES[255], (255, 255, 255)),
    }
)


def write_palette(palette: Palette, path) -> None:
    _write_json(palette.to_dict(), path)


def read_palette(path) -> Palette:
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: palette must be a JSON object")
    return Palette.from_dict(obj, context=str(path))


# ---------------------------------------------------------------------------
# sampling plans and dataset indexes (JSON)


def write_plan(plan: SamplingPlan, path) -> None:
    _write_json({"seed": plan.seed, "entries": list(plan.entries)}, path)


def read_plan(path) -> SamplingPlan:
    obj = _load_json(path)
    try:
        entries = obj["entries"]
        seed = obj["seed"]
        if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
            raise FormatError(f"{path}: 'entries' must be a list of frame id strings")
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise FormatError(f"{path}: 'seed' must be an integer")
        return SamplingPlan(entries=tuple(entries), seed=seed)
    except FormatError:
        raise
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed plan: {exc}") from exc


def write_index(index: DatasetIndex, path) -> None:
    frames = [
        {
            "frame_id": f.frame_id,
            "grid": f.grid_path,
            "class_counts": {str(c): int(n) for c, n in sorted(f.class_counts.items())},
        }
        for f in index.frames
    ]
    _write_json({"frames": frames}, path)


def read_index(path) -> DatasetIndex:
    obj = _load_json(path)
    try:
        frames = []
        for i, entry in enumerate(obj["frames"]):
            counts = {}
            for key, value in entry["class_counts"].items():
                label = int(key)
                count = int(value)
                if not (1 <= label <= 16) or count < 0:
                    raise FormatError(
                        f"{path}: frame {i}: bad class count {key!r}: {value!r}"
                    )
                counts[label] = count
            frames.append(
                FrameRecord(
                    frame_id=str(entry["frame_id"]),
                    grid_path=str(entry["grid"]),
                    class_counts=counts,
                )
            )
        return DatasetIndex(frames=tuple(frames))
    except FormatError:
        raise
    except (AttributeError, KeyError, TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"{path}: malformed index: {exc}") from exc


def build_dataset_index(grid_paths) -> DatasetIndex:
    """Scan OCCV1 files into a DatasetIndex; frame id is the file stem."""
    frames = []
    for p in grid_paths:
        grid = read_grid(p)
        counts = {c: n for c, n in grid.class_counts().items() if 1 <= c <= 16}
        frames.append(FrameRecord(frame_id=Path(p).stem, grid_path=str(p), class_counts=counts))
    return DatasetIndex(frames=tuple(frames))


# ---------------------------------------------------------------------------
# image outputs


def write_ppm(rgb: np.ndarray, path) -> None:
    """Binary P6 image from an H x W x 3 uint8 array."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValidationError(f"P6 needs H x W x 3 uint8, got {rgb.shape} {rgb.dtype}")
    h, w = rgb.shape[:2]
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes(order="C"))


def write_pgm(gray: np.ndarray, path) -> None:
    """Binary P5 image from an H x W uint8 array."""
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValidationError(f"P5 needs H x W uint8, got {gray.shape} {gray.dtype}")
    h, w = gray.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + gray.tobytes(order="C"))


# ---------------------------------------------------------------------------
# JSON helpers


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
