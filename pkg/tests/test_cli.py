"""End-to-end command line behavior: exit codes, outputs, determinism."""

import json
import shutil
import subprocess

import numpy as np
import pytest

from mvtri.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from mvtri.scene import load_scene

from conftest import make_view, pixel_of


SCENE_SPEC = {
    "object": {"kind": "planar_grid", "extents_cm": [8, 8, 0],
               "grid_counts": [3, 3]},
    "rig": {"kind": "angle_study", "resolution": "low"},
    "noise": {"sigma_px": 0.0},
}

EXPERIMENT_SPEC = {
    "experiments": [{
        "id": "cli-exp",
        "object": {"kind": "planar_grid", "extents_cm": [8, 8, 0],
                   "grid_counts": [3, 3]},
        "rig": {"kind": "angle_study", "resolution": "low"},
        "noise": {"sigma_px": 0.5},
        "trials": 2,
    }]
}


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def scene_path(tmp_path):
    cfg = write_json(tmp_path / "scene-spec.json", SCENE_SPEC)
    out = tmp_path / "scene.json"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    return out


class TestSimulate:
    def test_bare_scene_spec(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "spec.json", SCENE_SPEC)
        out = tmp_path / "scene.json"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        scene = load_scene(out)
        assert len(scene.views) == 3
        assert len(scene.tracks) == 9
        assert "3 views, 9 tracks" in capsys.readouterr().out

    def test_experiment_config_uses_first_scene(self, tmp_path):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        out = tmp_path / "scene.json"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        scene = load_scene(out)
        assert scene.provenance["noise"]["sigma_px"] == 0.5

    def test_malformed_json_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["simulate", "--config", str(bad),
                     "--out", str(tmp_path / "x.json")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "x.json")])
        assert code == EXIT_IO
        assert "i/o error" in capsys.readouterr().err

    def test_unknown_scene_key_is_config_error(self, tmp_path):
        cfg = write_json(tmp_path / "spec.json", {"lens": {}})
        code = main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "x.json")])
        assert code == EXIT_CONFIG


class TestCalibrate:
    def test_exact_correspondences(self, tmp_path, capsys):
        view = make_view((3.0, -2.0, -24.0), focal_px=700.0,
                         width=1024, height=768)
        rng = np.random.default_rng(15)
        pts = rng.uniform(-4.0, 4.0, size=(20, 3))
        lines = [" ".join(repr(float(v)) for v in (*X, *pixel_of(view, X)))
                 for X in pts]
        corr = tmp_path / "corr.txt"
        corr.write_text("# X Y Z u v\n" + "\n".join(lines) + "\n")
        assert main(["calibrate", "--corr", str(corr)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "P =" in out
        assert "algebraic_residual" in out
        rms = float(out.split("rms_reprojection_px = ")[1].split()[0])
        assert rms < 1e-6

    def test_parse_error_exits_2(self, tmp_path, capsys):
        corr = tmp_path / "corr.txt"
        corr.write_text("1 2 3 4\n")
        assert main(["calibrate", "--corr", str(corr)]) == EXIT_CONFIG
        assert "line 1" in capsys.readouterr().err

    def test_degenerate_geometry_exits_3(self, tmp_path):
        view = make_view((0.0, 0.0, -20.0))
        rng = np.random.default_rng(3)
        pts = np.column_stack([rng.uniform(-4, 4, size=(12, 2)), np.zeros(12)])
        lines = [" ".join(repr(float(v)) for v in (*X, *pixel_of(view, X)))
                 for X in pts]
        corr = tmp_path / "flat.txt"
        corr.write_text("\n".join(lines) + "\n")
        assert main(["calibrate", "--corr", str(corr)]) == EXIT_NUMERICAL


class TestTriangulate:
    @pytest.mark.parametrize("method", ["linear", "two-opt", "nview-lm"])
    def test_solves_clean_scene(self, scene_path, tmp_path, method):
        out = tmp_path / f"{method}.csv"
        code = main(["triangulate", "--scene", str(scene_path),
                     "--method", method, "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "point_id,x,y,z,mean_residual_px,status"
        assert len(lines) == 1 + 9
        scene = load_scene(scene_path)
        for line in lines[1:]:
            pid, x, y, z, res, status = line.split(",")
            assert not status.startswith("failed")
            if method != "nview-lm":
                assert status == "ok"
            truth = scene.ground_truth[int(pid)]
            assert np.allclose([float(x), float(y), float(z)], truth, atol=1e-6)
            assert float(res) < 1e-6

    def test_rejects_unknown_method(self, scene_path, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["triangulate", "--scene", str(scene_path),
                  "--method", "midpoint", "--out", str(tmp_path / "x.csv")])
        assert err.value.code == 2


class TestBench:
    def test_writes_prefixed_outputs(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        prefix = tmp_path / "report"
        code = main(["bench", "--config", cfg, "--out", str(prefix)])
        assert code == EXIT_OK
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "report.trials.csv").exists()
        out = capsys.readouterr().out
        assert "report.csv" in out

    def test_json_format(self, tmp_path):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        prefix = tmp_path / "report"
        code = main(["bench", "--config", cfg, "--out", str(prefix),
                     "--format", "json"])
        assert code == EXIT_OK
        data = json.loads((tmp_path / "report.json").read_text())
        assert [r["config_id"] for r in data["reports"]] == ["cli-exp"]
        assert (tmp_path / "report.trials.csv").exists()

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        main(["bench", "--config", cfg, "--out", str(tmp_path / "a")])
        main(["bench", "--config", cfg, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.trials.csv").read_bytes() == \
               (tmp_path / "b.trials.csv").read_bytes()

    def test_seed_override_changes_results(self, tmp_path, monkeypatch):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        main(["bench", "--config", cfg, "--out", str(tmp_path / "a")])
        monkeypatch.setenv("MVTRI_SEED", "9999")
        main(["bench", "--config", cfg, "--out", str(tmp_path / "b")])
        main(["bench", "--config", cfg, "--out", str(tmp_path / "c")])
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()

    def test_invalid_seed_override(self, tmp_path, monkeypatch, capsys):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_SPEC)
        monkeypatch.setenv("MVTRI_SEED", "ten")
        code = main(["bench", "--config", cfg, "--out", str(tmp_path / "x")])
        assert code == EXIT_CONFIG
        assert "MVTRI_SEED" in capsys.readouterr().err

    def test_parallel_matches_serial(self, tmp_path):
        spec = {"experiments": [dict(EXPERIMENT_SPEC["experiments"][0], id=i)
                                for i in ("p1", "p2")]}
        cfg = write_json(tmp_path / "exp.json", spec)
        main(["bench", "--config", cfg, "--out", str(tmp_path / "ser")])
        main(["bench", "--config", cfg, "--out", str(tmp_path / "par"),
              "--parallel", "2"])
        assert (tmp_path / "ser.csv").read_bytes() == \
               (tmp_path / "par.csv").read_bytes()


class TestSweep:
    def test_resolution_preset(self, tmp_path):
        prefix = tmp_path / "res"
        code = main(["sweep", "--preset", "resolutions", "--trials", "1",
                     "--out", str(prefix)])
        assert code == EXIT_OK
        lines = (tmp_path / "res.csv").read_text().splitlines()
        ids = {line.split(",")[0] for line in lines[1:]}
        assert ids == {"res-low", "res-fullhd", "res-ultrahd", "res-native"}

    def test_unknown_preset_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--preset", "zoom", "--out", str(tmp_path / "x")])
        assert err.value.code == 2


class TestEntryPoint:
    @pytest.mark.skipif(shutil.which("mvtri") is None,
                        reason="console script not on PATH")
    def test_console_script(self, tmp_path):
        cfg = write_json(tmp_path / "spec.json", SCENE_SPEC)
        out = tmp_path / "scene.json"
        proc = subprocess.run(["mvtri", "simulate", "--config", cfg,
                               "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert out.exists()
