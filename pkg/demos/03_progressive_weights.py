"""
Progressive foreground reweighing
=================================

Loss weights for foreground pixels ramp up over training on a cosine
schedule and fall off with distance. Early on every pixel counts
equally; by the end of the schedule a nearby traffic cone carries up to
m^2 times the weight of the background.

    python3 demos/03_progressive_weights.py
"""

from pathlib import Path

import numpy as np

from mpi_forge import (
    GridSpec,
    MpiConfig,
    ObjectPopulation,
    ReweighConfig,
    SceneRecipe,
    build_rig_mpi,
    build_weight_map,
    composite_depth_meters,
    composite_semantic,
    cosine_weight,
    synth_scene,
    write_weight_map,
)

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# The schedule itself, independent of any image: w(0) = 1, w(n) = m.
n, m = 10_000, 2.0
for step in (0, 2_500, 5_000, 7_500, 10_000):
    print(f"  step {step:>6}: progressive factor {cosine_weight(step, m, n):.4f}")

# Render one view of a synthetic scene to get aligned semantic + depth.
recipe = SceneRecipe(
    seed=3,
    grid=GridSpec(dims=(40, 40, 10), origin=(-10.0, -10.0, -2.0), resolution=0.5),
    populations=(
        ObjectPopulation(label=4, count=4, size_range=(1.5, 3.0)),
        ObjectPopulation(label=8, count=4, size_range=(0.4, 0.8), shape="cylinder"),
    ),
    num_cameras=4,
    image_width=64,
    image_height=48,
    focal=64.0,
)
grid, rig = synth_scene(recipe)
stack = build_rig_mpi(grid, rig, MpiConfig(planes=96, d_min=0.0, d_max=16.0, height=48, width=64))
view = 1  # this camera sees several vehicles and cones
semantic = composite_semantic(stack, view)
depth_m = composite_depth_meters(stack, view)

# Foreground weight = progressive factor x depth falloff; everything
# else (free space, ground, buildings) stays at exactly 1 so the map
# never suppresses anything.
from mpi_forge import FOREGROUND_CLASSES

is_fg = np.isin(semantic, list(FOREGROUND_CLASSES))
print(f"view {view}: {int(is_fg.sum())} foreground pixels of {semantic.size}")
config = ReweighConfig(total_steps=n, max_weight=m, max_depth=16.0)
for step in (0, 5_000, 10_000):
    wmap = build_weight_map(semantic, depth_m, step=step, config=config)
    fg = wmap.values[is_fg]
    bg = wmap.values[~is_fg]
    print(
        f"step {step:>6}: foreground weight mean {fg.mean():.3f} max {fg.max():.3f}, "
        f"background all {np.unique(bg).tolist()}"
    )
    write_weight_map(wmap, out_dir / f"weights_step{step}.wmap")

print(f"wrote weight maps to {out_dir}/")
