import json
import subprocess
import sys

import numpy as np
import pytest

from mpi_forge import read_grid, read_plan, read_stack, read_weight_map
from mpi_forge.cli import main


def run(*argv):
    return main(list(argv))


@pytest.fixture
def scene(tmp_path):
    grid = tmp_path / "scene.occv1"
    rig = tmp_path / "rig.json"
    code = run(
        "synth",
        "--seed", "3",
        "--out", str(grid),
        "--rig-out", str(rig),
        "--grid-dims", "24,24,8",
        "--grid-origin=-6,-6,-1",
        "--grid-res", "0.5",
        "--boxes", "3",
        "--cylinders", "1",
        "--cameras", "2",
        "--size", "16x16",
        "--focal", "16",
    )
    assert code == 0
    return grid, rig


class TestPipeline:
    def test_synth_outputs(self, scene):
        grid_path, rig_path = scene
        assert grid_path.read_bytes()[:6] == b"OCCV1\0"
        doc = json.loads(rig_path.read_text())
        assert len(doc["cameras"]) == 2

    def test_build_composite_weights_stats(self, scene, tmp_path):
        grid, rig = scene
        stack = tmp_path / "scene.mpit"
        assert run(
            "build",
            "--grid", str(grid),
            "--rig", str(rig),
            "--planes", "32",
            "--dmax", "12",
            "--size", "16x16",
            "--out", str(stack),
        ) == 0
        assert stack.read_bytes()[:5] == b"MPIT\0"
        loaded = read_stack(stack)
        assert loaded.labels.shape == (2, 32, 16, 16)

        semantic = tmp_path / "sem.ppm"
        depth = tmp_path / "depth.pgm"
        assert run(
            "composite",
            "--stack", str(stack),
            "--view", "0",
            "--semantic", str(semantic),
            "--depth", str(depth),
        ) == 0
        assert semantic.read_bytes()[:2] == b"P6"
        assert depth.read_bytes()[:2] == b"P5"

        wmap = tmp_path / "w.wmap"
        assert run(
            "weights",
            "--stack", str(stack),
            "--view", "0",
            "--step", "500",
            "--total-steps", "1000",
            "--max-weight", "4",
            "--out", str(wmap),
        ) == 0
        loaded_map = read_weight_map(wmap)
        assert loaded_map.step_fraction == 0.5
        assert loaded_map.values.shape == (16, 16)

        stats = tmp_path / "stats.json"
        assert run("stats", "--grid", str(grid), "--stack", str(stack), "--out", str(stats)) == 0
        doc = json.loads(stats.read_text())
        assert 0.0 < doc["grid"]["occupancy_fraction"] < 1.0
        assert len(doc["stack"]["plane_fill_rates"]) == 32

    def test_edit_with_diff(self, scene, tmp_path):
        grid, _ = scene
        script = tmp_path / "script.json"
        script.write_text(
            json.dumps(
                {
                    "ops": [
                        {
                            "type": "fill_box",
                            "min": [-2.0, -2.0, -1.0],
                            "max": [2.0, 2.0, 1.0],
                            "class": 13,
                        }
                    ]
                }
            )
        )
        out = tmp_path / "edited.occv1"
        diff = tmp_path / "diff.json"
        assert run("edit", "--grid", str(grid), "--script", str(script), "--out", str(out), "--diff", str(diff)) == 0
        edited = read_grid(out)
        assert (edited.labels == 13).any()
        doc = json.loads(diff.read_text())
        assert doc["changed"] > 0

    def test_cbgs(self, scene, tmp_path):
        grid, _ = scene
        from mpi_forge import build_dataset_index, write_index

        index_path = tmp_path / "index.json"
        write_index(build_dataset_index([grid]), index_path)
        plan_path = tmp_path / "plan.json"
        report_path = tmp_path / "report.json"
        assert run(
            "cbgs",
            "--index", str(index_path),
            "--target-len", "8",
            "--seed", "1",
            "--out", str(plan_path),
            "--report", str(report_path),
        ) == 0
        plan = read_plan(plan_path)
        assert len(plan.entries) == 8
        report = json.loads(report_path.read_text())
        assert report["max_min_ratio_after"] >= 1.0

    def test_gradcheck_passes(self, capsys):
        assert run("gradcheck", "--seed", "0", "--cases", "2") == 0
        err = capsys.readouterr().err
        assert "mpi_encode" in err and "ok" in err

    def test_gradcheck_impossible_tolerance(self):
        assert run("gradcheck", "--seed", "0", "--cases", "2", "--tol", "1e-15") == 3


class TestErrorPaths:
    def test_missing_required_flag(self, capsys):
        assert run("build") == 1
        assert "grid" in capsys.readouterr().err

    def test_nonexistent_input(self, tmp_path, capsys):
        assert run("stats", "--grid", str(tmp_path / "missing.occv1")) == 2
        assert "missing.occv1" in capsys.readouterr().err

    def test_corrupt_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.occv1"
        bad.write_bytes(b"OCCV1\0xxxx")
        assert run("stats", "--grid", str(bad)) == 2
        assert "truncated" in capsys.readouterr().err

    def test_bad_size_string(self, tmp_path):
        assert run(
            "synth", "--seed", "0", "--out", str(tmp_path / "g.occv1"), "--size", "potato"
        ) == 1

    def test_bad_numeric_flag(self, tmp_path):
        assert run(
            "synth", "--seed", "abc", "--out", str(tmp_path / "g.occv1")
        ) == 1

    def test_invalid_edit_script(self, scene, tmp_path):
        grid, _ = scene
        script = tmp_path / "script.json"
        script.write_text(json.dumps({"ops": [{"type": "warp_reality"}]}))
        assert run("edit", "--grid", str(grid), "--script", str(script), "--out", str(tmp_path / "o.occv1")) == 1

    def test_unknown_subcommand(self, capsys):
        assert run("frobnicate") == 1

    def test_no_subcommand(self, capsys):
        assert run() == 1

    def test_composite_needs_an_output(self, scene, tmp_path):
        grid, rig = scene
        stack = tmp_path / "s.mpit"
        run("build", "--grid", str(grid), "--rig", str(rig), "--planes", "8", "--dmax", "12", "--size", "16x16", "--out", str(stack))
        assert run("composite", "--stack", str(stack), "--view", "0") == 1

    def test_view_out_of_range(self, scene, tmp_path):
        grid, rig = scene
        stack = tmp_path / "s.mpit"
        run("build", "--grid", str(grid), "--rig", str(rig), "--planes", "8", "--dmax", "12", "--size", "16x16", "--out", str(stack))
        assert run("composite", "--stack", str(stack), "--view", "9", "--depth", str(tmp_path / "d.pgm")) == 1


class TestConfigPrecedence:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 11, "grid_dims": "8,8,4", "grid_origin": "-2,-2,-1", "grid_res": "0.5"}))
        out = tmp_path / "g.occv1"
        assert run("synth", "--config", str(cfg), "--out", str(out), "--boxes", "0", "--cylinders", "0") == 0
        assert read_grid(out).spec.dims == (8, 8, 4)

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 11, "grid_dims": "8,8,4", "grid_origin": "-2,-2,-1", "grid_res": "0.5"}))
        out = tmp_path / "g.occv1"
        assert run(
            "synth", "--config", str(cfg), "--grid-dims", "6,6,4",
            "--out", str(out), "--boxes", "0", "--cylinders", "0",
        ) == 0
        assert read_grid(out).spec.dims == (6, 6, 4)

    def test_threads_env_fallback(self, scene, tmp_path, monkeypatch):
        grid, rig = scene
        monkeypatch.setenv("MPI_FORGE_THREADS", "2")
        stack = tmp_path / "s.mpit"
        assert run(
            "build", "--grid", str(grid), "--rig", str(rig),
            "--planes", "8", "--dmax", "12", "--size", "16x16", "--out", str(stack),
        ) == 0
        monkeypatch.setenv("MPI_FORGE_THREADS", "not_a_number")
        assert run(
            "build", "--grid", str(grid), "--rig", str(rig),
            "--planes", "8", "--dmax", "12", "--size", "16x16", "--out", str(stack),
        ) == 1

    def test_help_exits_zero(self, capsys):
        assert run("--help") == 0
        assert "synth" in capsys.readouterr().out


class TestEntryPoint:
    def test_installed_script(self, tmp_path):
        out = tmp_path / "g.occv1"
        proc = subprocess.run(
            [sys.executable, "-m", "mpi_forge.cli", "synth", "--seed", "1",
             "--grid-dims", "8,8,4", "--grid-origin=-2,-2,-1", "--grid-res", "0.5",
             "--boxes", "0", "--cylinders", "0", "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert out.read_bytes()[:6] == b"OCCV1\0"

    def test_console_script(self, tmp_path):
        proc = subprocess.run(["mpi-forge", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "synth" in proc.stdout
