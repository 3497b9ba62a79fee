"""Semantic label ids for occupancy voxels.

Labels are stored as unsigned 8-bit class indices. 0 means unoccupied
(FREE), 1..16 are the object and surface classes common in urban driving
scenes, and 255 is reserved for unknown/ignore. Arrays of labels are
plain uint8 ndarrays everywhere in this package; the enum exists for
naming, palettes, and validation.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

__all__ = [
    "Semantic",
    "FREE",
    "UNKNOWN",
    "CLASS_NAMES",
    "FOREGROUND_CLASSES",
    "VALID_IDS",
    "is_valid_label",
]


class Semantic(IntEnum):
    FREE = 0
    BARRIER = 1
    BICYCLE = 2
    BUS = 3
    CAR = 4
    CONSTRUCTION_VEHICLE = 5
    MOTORCYCLE = 6
    PEDESTRIAN = 7
    TRAFFIC_CONE = 8
    TRAILER = 9
    TRUCK = 10
    DRIVEABLE_SURFACE = 11
    OTHER_FLAT = 12
    SIDEWALK = 13
    TERRAIN = 14
    MANMADE = 15
    VEGETATION = 16
    UNKNOWN = 255


FREE = int(Semantic.FREE)
UNKNOWN = int(Semantic.UNKNOWN)

CLASS_NAMES: dict[int, str] = {
    int(Semantic.FREE): "free",
    int(Semantic.BARRIER): "barrier",
    int(Semantic.BICYCLE): "bicycle",
    int(Semantic.BUS): "bus",
    int(Semantic.CAR): "car",
    int(Semantic.CONSTRUCTION_VEHICLE): "construction vehicle",
    int(Semantic.MOTORCYCLE): "motorcycle",
    int(Semantic.PEDESTRIAN): "pedestrian",
    int(Semantic.TRAFFIC_CONE): "traffic cone",
    int(Semantic.TRAILER): "trailer",
    int(Semantic.TRUCK): "truck",
    int(Semantic.DRIVEABLE_SURFACE): "driveable surface",
    int(Semantic.OTHER_FLAT): "other flat",
    int(Semantic.SIDEWALK): "sidewalk",
    int(Semantic.TERRAIN): "terrain",
    int(Semantic.MANMADE): "manmade",
    int(Semantic.VEGETATION): "vegetation",
    int(Semantic.UNKNOWN): "unknown",
}

# The ten movable-object classes; surfaces and vegetation are background.
# Default foreground set for loss reweighing.
FOREGROUND_CLASSES: frozenset[int] = frozenset(range(1, 11))

VALID_IDS: frozenset[int] = frozenset(range(0, 17)) | {UNKNOWN}


def is_valid_label(value: int) -> bool:
    return int(value) in VALID_IDS


def validate_label_array(labels: np.ndarray) -> bool:
    """True when every entry is a valid semantic id (0..16 or 255)."""
    values = np.unique(np.asarray(labels))
    return all(int(v) in VALID_IDS for v in values)
