import numpy as np
import pytest

from mpi_forge import (
    FREE,
    GridSpec,
    ObjectPopulation,
    SceneRecipe,
    ValidationError,
    surround_rig,
    synth_scene,
    synth_scene_result,
)

SMALL = GridSpec(dims=(24, 24, 8), origin=(-6.0, -6.0, -1.0), resolution=0.5)


def recipe(seed=0, **kwargs):
    defaults = dict(
        seed=seed,
        grid=SMALL,
        populations=(
            ObjectPopulation(label=4, count=3, size_range=(0.8, 2.0)),
            ObjectPopulation(label=8, count=2, size_range=(0.5, 1.0), shape="cylinder"),
        ),
        num_cameras=2,
        image_width=16,
        image_height=16,
        focal=16.0,
    )
    defaults.update(kwargs)
    return SceneRecipe(**defaults)


class TestDeterminism:
    def test_same_seed_same_scene(self):
        a, _ = synth_scene(recipe(5))
        b, _ = synth_scene(recipe(5))
        assert np.array_equal(a.labels, b.labels)

    def test_different_seed_differs(self):
        a, _ = synth_scene(recipe(5))
        b, _ = synth_scene(recipe(6))
        assert not np.array_equal(a.labels, b.labels)


class TestGround:
    def test_ground_only_when_no_objects(self):
        grid, _ = synth_scene(recipe(populations=()))
        zs = SMALL.origin[2] + (np.arange(SMALL.dims[2]) + 0.5) * SMALL.resolution
        layers = int(np.sum(zs <= 0.0))
        assert (grid.labels[:, :, :layers] == 11).all()
        assert (grid.labels[:, :, layers:] == FREE).all()

    def test_no_ground(self):
        grid, _ = synth_scene(recipe(populations=(), ground_z=None))
        assert not grid.labels.any()

    def test_ground_class_respected(self):
        grid, _ = synth_scene(recipe(populations=(), ground_class=15))
        assert set(np.unique(grid.labels)) == {0, 15}


class TestPlacement:
    def test_objects_sit_on_ground(self):
        result = synth_scene_result(recipe(7))
        zs = SMALL.origin[2] + (np.arange(SMALL.dims[2]) + 0.5) * SMALL.resolution
        ground_top = SMALL.origin[2] + int(np.sum(zs <= 0.0)) * SMALL.resolution
        for placed in result.placements:
            assert placed.min_corner[2] == pytest.approx(ground_top)

    def test_first_writer_wins_accounting(self):
        result = synth_scene_result(recipe(8))
        grid = result.grid
        non_ground = int(np.sum((grid.labels != FREE) & (grid.labels != 11)))
        assert sum(p.voxels_written for p in result.placements) == non_ground

    def test_box_voxels_match_center_membership_oracle(self):
        result = synth_scene_result(
            recipe(9, populations=(ObjectPopulation(label=4, count=2, size_range=(1.0, 2.5)),))
        )
        grid = result.grid
        spec = grid.spec
        want = np.zeros(spec.dims, dtype=bool)
        # first writer wins: paint in placement order, skipping claimed cells
        for placed in result.placements:
            lo, hi = placed.min_corner, placed.max_corner
            xs = spec.origin[0] + (np.arange(spec.dims[0]) + 0.5) * spec.resolution
            ys = spec.origin[1] + (np.arange(spec.dims[1]) + 0.5) * spec.resolution
            zs = spec.origin[2] + (np.arange(spec.dims[2]) + 0.5) * spec.resolution
            inside = (
                ((xs >= lo[0]) & (xs < hi[0]))[:, None, None]
                & ((ys >= lo[1]) & (ys < hi[1]))[None, :, None]
                & ((zs >= lo[2]) & (zs < hi[2]))[None, None, :]
            )
            want |= inside
        got = (grid.labels != FREE) & (grid.labels != 11)
        assert np.array_equal(got, want)

    def test_cylinder_voxels_within_bounding_box(self):
        result = synth_scene_result(
            recipe(
                10,
                populations=(
                    ObjectPopulation(label=8, count=1, size_range=(0.8, 1.5), shape="cylinder"),
                ),
            )
        )
        placed = result.placements[0]
        grid = result.grid
        idx = np.argwhere(grid.labels == 8)
        assert len(idx) == placed.voxels_written > 0
        spec = grid.spec
        centers = spec.origin + (idx + 0.5) * spec.resolution
        r = np.hypot(centers[:, 0] - placed.center[0], centers[:, 1] - placed.center[1])
        assert (r <= placed.radius).all()


class TestRig:
    def test_cameras_on_circle(self):
        rig = surround_rig(recipe(0, num_cameras=4))
        assert len(rig.cameras) == 4
        assert rig.names == ("cam_0", "cam_1", "cam_2", "cam_3")
        for cam in rig.cameras:
            assert np.hypot(cam.translation[0], cam.translation[1]) == pytest.approx(1.0)
            assert cam.translation[2] == pytest.approx(1.5)

    def test_cameras_face_outward(self):
        rig = surround_rig(recipe(0, num_cameras=8))
        for cam in rig.cameras:
            forward = cam.rotation[:, 2]
            outward = np.array([cam.translation[0], cam.translation[1], 0.0])
            assert forward @ outward > 0.99

    def test_intrinsics(self):
        rig = surround_rig(recipe(0))
        cam = rig.cameras[0]
        assert cam.k[0, 0] == 16.0 and cam.k[1, 1] == 16.0
        assert cam.k[0, 2] == pytest.approx((16 - 1) / 2)
        assert cam.width == 16 and cam.height == 16


class TestValidation:
    def test_bad_population_label(self):
        with pytest.raises(ValidationError):
            ObjectPopulation(label=0, count=1, size_range=(1.0, 2.0))
        with pytest.raises(ValidationError):
            ObjectPopulation(label=255, count=1, size_range=(1.0, 2.0))

    def test_bad_size_range(self):
        with pytest.raises(ValidationError):
            ObjectPopulation(label=4, count=1, size_range=(2.0, 1.0))
        with pytest.raises(ValidationError):
            ObjectPopulation(label=4, count=1, size_range=(0.0, 1.0))

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            ObjectPopulation(label=4, count=1, size_range=(1.0, 2.0), shape="sphere")

    def test_bad_ground_class(self):
        with pytest.raises(ValidationError):
            synth_scene(recipe(populations=(), ground_class=0))
