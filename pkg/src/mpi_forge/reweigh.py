"""Loss reweighing: cosine ramp weights and per-pixel weight maps.

One cosine profile drives both uses. Over an input range [0, n] it rises
smoothly from 1 to a maximum m:

    w(x, m, n) = (m - 1) / 2 * (1 + cos(x / n * pi + pi)) + 1

Fed with the training step (x = step, n = total steps) it progressively
amplifies foreground loss as training advances; fed with metric depth
(x = depth, n = max depth) it weighs farther foreground pixels more. A
weight map multiplies both factors on foreground pixels and leaves
background pixels at exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .labels import FREE, FOREGROUND_CLASSES

__all__ = [
    "ReweighConfig",
    "WeightMap",
    "cosine_weight",
    "progressive_weight",
    "depth_weight",
    "build_weight_map",
    "downsample_weight_map",
]


@dataclass(frozen=True)
class ReweighConfig:
    """Weight ceiling, training horizon, depth cap, and foreground classes."""

    total_steps: int
    max_weight: float = 2.0
    max_depth: float = 50.0
    foreground: frozenset[int] = field(default=FOREGROUND_CLASSES)

    def __post_init__(self):
        if int(self.total_steps) < 1:
            raise ValidationError(f"total_steps must be >= 1, got {self.total_steps}")
        if not (float(self.max_weight) >= 1.0):
            raise ValidationError(f"max_weight must be >= 1, got {self.max_weight}")
        if not (float(self.max_depth) > 0.0):
            raise ValidationError(f"max_depth must be positive, got {self.max_depth}")
        fg = frozenset(int(c) for c in self.foreground)
        if not fg or FREE in fg:
            raise ValidationError("foreground classes must be nonempty and exclude FREE")
        object.__setattr__(self, "total_steps", int(self.total_steps))
        object.__setattr__(self, "max_weight", float(self.max_weight))
        object.__setattr__(self, "max_depth", float(self.max_depth))
        object.__setattr__(self, "foreground", fg)


@dataclass(frozen=True)
class WeightMap:
    """Per-pixel nonnegative loss weights for one training step.

    ``step_fraction`` is step / total_steps, the only schedule state a
    serialized map needs to carry.
    """

    values: np.ndarray
    step_fraction: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(f"weight map must be 2D, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("weight map values must be finite and nonnegative")
        frac = float(self.step_fraction)
        if not np.isfinite(frac) or frac < 0:
            raise ValidationError(f"step fraction must be finite and nonnegative, got {frac}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "step_fraction", frac)


def cosine_weight(x, m: float, n: float):
    """Inverted cosine-annealing ramp from 1 at x=0 to m at x=n.

    Inputs outside [0, n] clamp to the range (real depth maps exceed the
    cap; the profile saturates rather than erroring). Scalar in, float
    out; array in, array out.
    """
    if n == 0:
        raise ValidationError("cosine_weight range n must be nonzero")
    x = np.clip(x, 0.0, n)
    w = (m - 1.0) / 2.0 * (1.0 + np.cos(x / n * np.pi + np.pi)) + 1.0
    if np.isscalar(w) or w.ndim == 0:
        return float(w)
    return w


def progressive_weight(step, config: ReweighConfig):
    """Foreground amplification for a training step: 1 early, m at the end."""
    return cosine_weight(step, config.max_weight, float(config.total_steps))


def depth_weight(depth_m, config: ReweighConfig):
    """Depth-aware factor: 1 close by, m at (and beyond) the depth cap."""
    return cosine_weight(depth_m, config.max_weight, config.max_depth)


def build_weight_map(
    semantic: np.ndarray, depth_m: np.ndarray, step, config: ReweighConfig
) -> WeightMap:
    """Compose the per-pixel weights for one step.

    Foreground pixels (label in config.foreground) receive
    progressive_weight(step) * depth_weight(depth); everything else is
    exactly 1. ``semantic`` is an H x W label map, ``depth_m`` the
    matching first-hit depth in meters (inf allowed on empty rays).
    """
    semantic = np.asarray(semantic)
    depth_m = np.asarray(depth_m, dtype=np.float64)
    if semantic.shape != depth_m.shape:
        raise ValidationError(
            f"semantic {semantic.shape} and depth {depth_m.shape} shapes differ"
        )
    fg = np.isin(semantic, list(config.foreground))
    values = np.ones(semantic.shape, dtype=np.float64)
    if np.any(fg):
        values[fg] = progressive_weight(step, config) * depth_weight(depth_m[fg], config)
    return WeightMap(values=values, step_fraction=float(step) / config.total_steps)


def downsample_weight_map(wmap: WeightMap, factor: int) -> WeightMap:
    """Block-mean pool by an integer factor (e.g. image -> latent grid)."""
    factor = int(factor)
    if factor < 1:
        raise ValidationError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return wmap
    h, w = wmap.values.shape
    if h % factor or w % factor:
        raise ValidationError(f"map {w}x{h} is not divisible by factor {factor}")
    pooled = wmap.values.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))
    return WeightMap(values=pooled, step_fraction=wmap.step_fraction)
