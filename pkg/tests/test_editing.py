import json

import numpy as np
import pytest

from mpi_forge import (
    CopyTranslate,
    EditScript,
    EraseRegion,
    FillBox,
    FillCylinder,
    GridSpec,
    OccupancyGrid,
    Repaint,
    ValidationError,
    apply_edit_script,
    diff_grids,
    validate_script,
)

SPEC = GridSpec(dims=(12, 10, 8), origin=(-3.0, -2.0, -1.0), resolution=0.5)


def empty_grid():
    return OccupancyGrid.empty(SPEC)


def centers(axis):
    n = SPEC.dims[axis]
    return SPEC.origin[axis] + (np.arange(n) + 0.5) * SPEC.resolution


def brute_force_box(lo, hi):
    """Voxel membership by testing every center, the slow way."""
    inside = np.zeros(SPEC.dims, dtype=bool)
    cx, cy, cz = centers(0), centers(1), centers(2)
    for i in range(SPEC.dims[0]):
        for j in range(SPEC.dims[1]):
            for k in range(SPEC.dims[2]):
                p = (cx[i], cy[j], cz[k])
                if all(lo[a] <= p[a] <= hi[a] for a in range(3)):
                    inside[i, j, k] = True
    return inside


class TestFillBox:
    def test_matches_center_membership_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            lo = tuple(rng.uniform(-3, 1, size=3))
            hi = tuple(l + rng.uniform(0.1, 3) for l in lo)
            script = EditScript(ops=(FillBox(min_corner=lo, max_corner=hi, label=4),))
            out = apply_edit_script(empty_grid(), script)
            assert np.array_equal(out.labels == 4, brute_force_box(lo, hi))

    def test_outside_grid_is_noop(self):
        script = EditScript(ops=(FillBox((100, 100, 100), (101, 101, 101), 4),))
        out = apply_edit_script(empty_grid(), script)
        assert not out.labels.any()

    def test_input_grid_unchanged(self):
        grid = empty_grid()
        apply_edit_script(grid, EditScript(ops=(FillBox((-3, -2, -1), (3, 3, 3), 4),)))
        assert not grid.labels.any()


class TestFillCylinder:
    def test_center_distance_membership(self):
        op = FillCylinder(center=(0.0, 0.0, 0.0), radius=1.0, z_min=-1.0, z_max=0.0, label=8)
        out = apply_edit_script(empty_grid(), EditScript(ops=(op,)))
        cx, cy, cz = centers(0), centers(1), centers(2)
        for i in range(SPEC.dims[0]):
            for j in range(SPEC.dims[1]):
                for k in range(SPEC.dims[2]):
                    in_disc = cx[i] ** 2 + cy[j] ** 2 <= 1.0
                    in_z = -1.0 <= cz[k] <= 0.0
                    assert (out.labels[i, j, k] == 8) == (in_disc and in_z)

    def test_z_range_respected(self):
        # centers along z are -0.75, -0.25, 0.25, ...; only index 1 falls in range
        op = FillCylinder(center=(0.0, 0.0, 99.0), radius=0.6, z_min=-0.3, z_max=-0.2, label=8)
        out = apply_edit_script(empty_grid(), EditScript(ops=(op,)))
        occupied_z = np.unique(np.argwhere(out.labels == 8)[:, 2])
        assert occupied_z.tolist() == [1]  # the op's center z is ignored


class TestEraseAndRepaint:
    def test_erase_to_free(self):
        fill = FillBox((-3, -2, -1), (3, 3, 3), 4)
        erase = EraseRegion(min_corner=(-1, -1, -1), max_corner=(0, 0, 0))
        out = apply_edit_script(empty_grid(), EditScript(ops=(fill, erase)))
        assert (out.labels == 0).any() and (out.labels == 4).any()
        region = brute_force_box((-1, -1, -1), (0, 0, 0))
        assert not out.labels[region].any()

    def test_repaint_only_touches_from_label(self):
        ops = (
            FillBox((-3, -2, -1), (0, 0, 0), 4),
            FillBox((0.5, 0.5, -1), (2, 2, 0), 8),
            Repaint(min_corner=(-3, -2, -1), max_corner=(3, 3, 3), from_label=4, to_label=10),
        )
        out = apply_edit_script(empty_grid(), EditScript(ops=ops))
        assert not (out.labels == 4).any()
        assert (out.labels == 10).any()
        assert (out.labels == 8).any()  # untouched


class TestCopyTranslate:
    def test_reads_pre_op_snapshot(self):
        # copying a region onto itself shifted by one voxel must not smear
        grid_labels = np.zeros(SPEC.dims, dtype=np.uint8)
        grid_labels[2, 2, 2] = 4
        grid = OccupancyGrid(SPEC, grid_labels)
        op = CopyTranslate(
            src_min=(-3.0, -2.0, -1.0),
            src_max=(3.0, 3.0, 3.0),
            offset=(0.5, 0.0, 0.0),
        )
        out = apply_edit_script(grid, EditScript(ops=(op,)))
        assert out.labels[3, 2, 2] == 4
        # source stamped FREE onto destination cells, so only one copy remains
        assert int((out.labels == 4).sum()) == 1

    def test_offset_rounds_to_voxels(self):
        grid_labels = np.zeros(SPEC.dims, dtype=np.uint8)
        grid_labels[4, 4, 4] = 8
        grid = OccupancyGrid(SPEC, grid_labels)
        # 0.45 m at 0.5 m resolution rounds to one voxel
        op = CopyTranslate(src_min=(-3, -2, -1), src_max=(3, 3, 3), offset=(0.45, 0.0, 0.0))
        out = apply_edit_script(grid, EditScript(ops=(op,)))
        assert out.labels[5, 4, 4] == 8

    def test_stamps_free_too(self):
        grid_labels = np.full(SPEC.dims, 11, dtype=np.uint8)
        grid_labels[0, 0, 0] = 0
        grid = OccupancyGrid(SPEC, grid_labels)
        op = CopyTranslate(
            src_min=(-3.0, -2.0, -1.0), src_max=(-2.6, -1.6, -0.6), offset=(1.0, 0.0, 0.0)
        )
        out = apply_edit_script(grid, EditScript(ops=(op,)))
        assert out.labels[2, 0, 0] == 0


class TestScripts:
    def test_json_round_trip(self):
        doc = {
            "ops": [
                {"type": "fill_box", "min": [0, 0, 0], "max": [1, 1, 1], "class": 4},
                {
                    "type": "fill_cylinder",
                    "center": [0, 0, 0],
                    "radius": 1.5,
                    "z_min": -1,
                    "z_max": 0,
                    "class": 8,
                },
                {"type": "erase_region", "min": [0, 0, 0], "max": [1, 1, 1]},
                {
                    "type": "repaint",
                    "min": [0, 0, 0],
                    "max": [1, 1, 1],
                    "from_class": 4,
                    "to_class": 10,
                },
                {
                    "type": "copy_translate",
                    "src_min": [0, 0, 0],
                    "src_max": [1, 1, 1],
                    "offset": [2, 0, 0],
                },
            ]
        }
        script = EditScript.from_json(json.dumps(doc))
        assert len(script.ops) == 5
        assert EditScript.from_dict(script.to_dict()).to_dict() == script.to_dict()

    def test_bad_json_is_validation_error(self):
        with pytest.raises(ValidationError):
            EditScript.from_json("{not json")

    def test_unknown_op_type(self):
        with pytest.raises(ValidationError, match="type"):
            EditScript.from_dict({"ops": [{"type": "sparkle"}]})

    def test_diagnostics_name_op_and_field(self):
        script = EditScript(
            ops=(
                FillBox((2, 2, 2), (1, 1, 1), 4),  # inverted corners
                FillCylinder((0, 0, 0), -1.0, 0.0, 1.0, 8),  # negative radius
                FillBox((0, 0, 0), (1, 1, 1), 77),  # bad label
            )
        )
        diags = validate_script(script)
        # inverted corners produce one diagnostic per axis
        assert any("op 0" in d for d in diags)
        assert any("op 1" in d and "radius" in d for d in diags)
        assert any("op 2" in d and "77" in d for d in diags)

    def test_apply_refuses_invalid_script(self):
        script = EditScript(ops=(FillBox((2, 2, 2), (1, 1, 1), 4),))
        with pytest.raises(ValidationError, match="op 0"):
            apply_edit_script(empty_grid(), script)

    def test_empty_script_is_identity(self):
        grid = empty_grid()
        out = apply_edit_script(grid, EditScript(ops=()))
        assert np.array_equal(out.labels, grid.labels)


class TestDiff:
    def test_counts_changes(self):
        before = empty_grid()
        after = apply_edit_script(before, EditScript(ops=(FillBox((-0.4, -0.4, -0.4), (0.4, 0.4, 0.4), 4),)))
        diff = diff_grids(before, after)
        changed = int((before.labels != after.labels).sum())
        assert diff.changed == changed > 0
        doc = diff.to_dict()
        assert doc["changed"] == changed
