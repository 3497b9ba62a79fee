"""mpi-forge: semantic multi-plane images from 3D occupancy grids.

Build N x D x H x W semantic MPI stacks from voxel occupancy and a camera
rig, render composite semantic/depth conditions, edit scenes at the voxel
level, reweigh losses with cosine ramps, balance datasets by class
exposure, and verify the conditioning network's building blocks
numerically. Everything is deterministic given seeds and thread counts.
"""

from .cbgs import (
    BalanceReport,
    DatasetIndex,
    FrameRecord,
    SamplingPlan,
    balance_report,
    build_sampling_plan,
    class_histogram,
)
from .conditioning import (
    AttentionParams,
    Conv1x1Params,
    GradcheckResult,
    NeighborParams,
    add_condition,
    attention,
    cross_frame_mix,
    cross_view_mix,
    embed_labels,
    finite_diff_gradcheck,
    init_attention_params,
    init_encoder,
    mpi_encode,
    one_hot_planes,
    reweighed_loss,
    run_gradchecks,
)
from .editing import (
    CopyTranslate,
    EditScript,
    EraseRegion,
    FillBox,
    FillCylinder,
    GridDiff,
    Repaint,
    apply_edit_script,
    diff_grids,
    validate_script,
)
from .errors import FormatError, MpiForgeError, ValidationError
from .formats import (
    DEFAULT_PALETTE,
    Palette,
    build_dataset_index,
    read_grid,
    read_index,
    read_palette,
    read_plan,
    read_rig,
    read_stack,
    read_weight_map,
    write_grid,
    write_index,
    write_palette,
    write_pgm,
    write_plan,
    write_ppm,
    write_rig,
    write_stack,
    write_weight_map,
)
from .geometry import (
    CameraModel,
    CameraRig,
    GridSpec,
    OccupancyGrid,
    lookup_semantic,
    voxel_index,
    world_from_pixel,
)
from .labels import CLASS_NAMES, FOREGROUND_CLASSES, FREE, UNKNOWN, Semantic
from .mpi import (
    MpiConfig,
    MpiStack,
    build_rig_mpi,
    build_view_mpi,
    colorize,
    composite_depth,
    composite_depth_meters,
    composite_semantic,
    plane_depths,
    scale_intrinsics,
)
from .reweigh import (
    ReweighConfig,
    WeightMap,
    build_weight_map,
    cosine_weight,
    depth_weight,
    downsample_weight_map,
    progressive_weight,
)
from .synth import (
    ObjectPopulation,
    PlacedObject,
    SceneRecipe,
    SynthResult,
    surround_rig,
    synth_scene,
    synth_scene_result,
)

__version__ = "0.1.0"
