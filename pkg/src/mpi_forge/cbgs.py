"""Class-balanced grouping and sampling over a dataset of occupancy frames.

Rare classes appear in few frames, so uniform sampling starves them during
training. The plan builder groups frames by the classes they contain (a
frame joins every group of every class it holds), then duplicates frames
from under-exposed groups until class exposures are as even as the data
allows:

1. every frame enters the plan once (coverage),
2. the remaining budget is spent one draw at a time on the class with the
   lowest current exposure, cycling through that group's frames in a
   seeded shuffled order,
3. the finished multiset is shuffled into its final order.

Exposure of a class is the number of plan entries containing it. Frames
holding several classes raise all of their classes' exposures at once,
which is exactly the duplication effect that softens long tails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .labels import FREE

__all__ = [
    "FrameRecord",
    "DatasetIndex",
    "SamplingPlan",
    "BalanceReport",
    "class_histogram",
    "build_sampling_plan",
    "balance_report",
]

_SEMANTIC_CLASS_IDS = tuple(range(1, 17))


@dataclass(frozen=True)
class FrameRecord:
    """One dataset frame: id, grid file path, per-class occupied voxel counts."""

    frame_id: str
    grid_path: str
    class_counts: dict[int, int]

    @property
    def present(self) -> frozenset[int]:
        return frozenset(c for c, n in self.class_counts.items() if n > 0)


@dataclass(frozen=True)
class DatasetIndex:
    frames: tuple[FrameRecord, ...]

    def __post_init__(self):
        ids = [f.frame_id for f in self.frames]
        if len(set(ids)) != len(ids):
            raise ValidationError("frame ids must be unique")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class SamplingPlan:
    """Frame ids with repetition, in final draw order, plus the seed used."""

    entries: tuple[str, ...]
    seed: int


def class_histogram(index: DatasetIndex) -> dict[int, int]:
    """Frames containing each class, keyed by class id (1..16 always present)."""
    hist = {c: 0 for c in _SEMANTIC_CLASS_IDS}
    for frame in index.frames:
        for c in frame.present:
            hist[c] = hist.get(c, 0) + 1
    return hist


def _groups(index: DatasetIndex) -> dict[int, list[int]]:
    """Class id -> positions of frames containing it. Frames with no
    occupied class form their own group under FREE so coverage still has
    a path to them."""
    groups: dict[int, list[int]] = {}
    for pos, frame in enumerate(index.frames):
        classes = frame.present or {FREE}
        for c in sorted(classes):
            groups.setdefault(c, []).append(pos)
    return groups


def build_sampling_plan(index: DatasetIndex, target_len: int, seed: int) -> SamplingPlan:
    """Deterministic class-balanced plan of ``target_len`` frame entries.

    Every frame appears at least once; identical inputs produce identical
    plans.
    """
    n = len(index)
    if n == 0:
        raise ValidationError("cannot build a plan over an empty dataset")
    if target_len < n:
        raise ValidationError(
            f"target length {target_len} is below the dataset size {n}; "
            "a plan must cover every frame at least once"
        )
    rng = np.random.default_rng(seed)
    groups = _groups(index)

    # Seeded within-group draw orders, cycled so duplicates spread evenly
    # across a group instead of hammering one frame.
    order: dict[int, np.ndarray] = {}
    cursor: dict[int, int] = {}
    for c, members in groups.items():
        order[c] = rng.permutation(np.asarray(members, dtype=np.int64))
        cursor[c] = 0

    counts = np.ones(n, dtype=np.int64)  # base pass: coverage
    exposure = {c: len(members) for c, members in groups.items()}

    for _ in range(target_len - n):
        lowest = min(exposure, key=lambda c: (exposure[c], c))
        seq = order[lowest]
        pos = int(seq[cursor[lowest] % len(seq)])
        cursor[lowest] += 1
        counts[pos] += 1
        for c in index.frames[pos].present or {FREE}:
            exposure[c] += 1

    entries = np.repeat(np.arange(n), counts)
    rng.shuffle(entries)
    ids = tuple(index.frames[pos].frame_id for pos in entries)
    return SamplingPlan(entries=ids, seed=int(seed))


@dataclass(frozen=True)
class BalanceReport:
    """Per-class exposure before (one pass over the dataset) and after a plan."""

    before: dict[int, int]
    after: dict[int, int]
    ratio_before: float
    ratio_after: float

    def to_dict(self) -> dict:
        return {
            "before": {str(k): v for k, v in sorted(self.before.items())},
            "after": {str(k): v for k, v in sorted(self.after.items())},
            "max_min_ratio_before": self.ratio_before,
            "max_min_ratio_after": self.ratio_after,
        }


def _exposure_ratio(exposure: dict[int, int]) -> float:
    present = [v for v in exposure.values() if v > 0]
    if not present:
        return 1.0
    return max(present) / min(present)


def balance_report(plan: SamplingPlan, index: DatasetIndex) -> BalanceReport:
    """Compare class exposure of the raw dataset against the plan."""
    if not plan.entries:
        raise ValidationError("plan is empty")
    by_id = {f.frame_id: f for f in index.frames}
    missing = [e for e in plan.entries if e not in by_id]
    if missing:
        raise ValidationError(f"plan references unknown frame ids, e.g. {missing[0]!r}")
    before = {c: 0 for c in _SEMANTIC_CLASS_IDS}
    for frame in index.frames:
        for c in frame.present:
            before[c] = before.get(c, 0) + 1
    after = {c: 0 for c in _SEMANTIC_CLASS_IDS}
    for entry in plan.entries:
        for c in by_id[entry].present:
            after[c] = after.get(c, 0) + 1
    return BalanceReport(
        before=before,
        after=after,
        ratio_before=_exposure_ratio(before),
        ratio_after=_exposure_ratio(after),
    )
