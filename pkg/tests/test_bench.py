"""Benchmark metrics, experiment runner, and report serialization."""

import numpy as np
import pytest

from mvtri.bench import (
    CSV_COLUMNS,
    TRIAL_CSV_COLUMNS,
    dispersion,
    pairwise_disagreement,
    read_report,
    run_experiment,
    run_sweep,
    write_report,
)
from mvtri.config import ExperimentConfig, TwoViewPolicy
from mvtri.errors import ConfigError, EmptyInput
from mvtri.scene import NoiseModel, ObjectModel, RigSpec
from mvtri.triangulation import Method


def small_config(config_id="small", sigma_px=0.0, detect_prob=1.0, trials=2,
                 resolution="low", methods=None, policy=TwoViewPolicy.ALL_PAIRS,
                 quantize=False):
    kwargs = {}
    if methods is not None:
        kwargs["methods"] = methods
    return ExperimentConfig(
        id=config_id,
        object=ObjectModel(kind="planar_grid", extents_cm=(8.0, 8.0, 0.0),
                           grid_counts=(3, 3)),
        rig=RigSpec(kind="angle_study", resolution=resolution),
        noise=NoiseModel(sigma_px=sigma_px, detect_prob=detect_prob,
                         quantize=quantize),
        two_view_policy=policy,
        trials=trials,
        base_seed=42,
        **kwargs,
    )


class TestDispersion:
    def test_single_centimeter_offset(self):
        assert dispersion([np.array([1.0, 0.0, 0.0])],
                          [np.array([0.0, 0.0, 0.0])]) == pytest.approx(1.0)

    def test_rms_of_mixed_offsets(self):
        res = [np.zeros(3), np.array([0.0, 1.0, 0.0])]
        gt = [np.zeros(3), np.zeros(3)]
        assert dispersion(res, gt) == pytest.approx(np.sqrt(0.5), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            dispersion([], [])

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError):
            dispersion([np.zeros(3)], [])


class TestPairwiseDisagreement:
    def test_equilateral_unit_triangle(self):
        a = [np.array([0.0, 0.0, 0.0])]
        b = [np.array([1.0, 0.0, 0.0])]
        c = [np.array([0.5, np.sqrt(3) / 2.0, 0.0])]
        assert pairwise_disagreement(a, b, c) == pytest.approx(1.0, rel=1e-12)

    def test_coincident_points(self):
        p = [np.ones(3)]
        assert pairwise_disagreement(p, p, p) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            pairwise_disagreement([], [], [])

    def test_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pairwise_disagreement([np.zeros(3)], [np.zeros(3)], [])


class TestRunExperiment:
    def test_counting_identity_zero_noise(self):
        report = run_experiment(small_config())
        by = {a.method: a for a in report.methods}
        assert by["linear"].points_mean == 27.0
        assert by["two-opt"].points_mean == 27.0
        assert by["nview-lm"].points_mean == 9.0
        assert report.count_ratio == pytest.approx(3.0, abs=0.0)

    def test_zero_noise_disagreement_vanishes(self):
        report = run_experiment(small_config())
        by = {a.method: a for a in report.methods}
        assert by["linear"].disagreement_mean < 1e-9
        assert by["two-opt"].disagreement_mean < 1e-9
        assert by["nview-lm"].disagreement_mean is None

    def test_zero_noise_dispersion_vanishes(self):
        report = run_experiment(small_config())
        for agg in report.methods:
            assert agg.dispersion_mean < 1e-9
            assert agg.reproj_mean < 1e-9

    def test_method_order_and_trials(self):
        report = run_experiment(small_config(trials=3))
        assert [a.method for a in report.methods] == ["linear", "two-opt",
                                                      "nview-lm"]
        assert all(a.trials == 3 for a in report.methods)
        assert len(report.trial_rows) == 3 * 3
        trials_seen = sorted({r.trial for r in report.trial_rows})
        assert trials_seen == [0, 1, 2]

    def test_runtime_zero_without_timing(self):
        report = run_experiment(small_config())
        assert all(a.runtime_ms_mean == 0.0 for a in report.methods)
        assert all(r.metrics.runtime_ms == 0.0 for r in report.trial_rows)

    def test_timing_opt_in(self):
        report = run_experiment(small_config(), timing=True)
        assert all(a.runtime_ms_mean > 0.0 for a in report.methods)

    def test_deterministic_reruns(self):
        cfg = small_config(sigma_px=0.5)
        assert run_experiment(cfg) == run_experiment(cfg)

    def test_noise_rows_have_no_failures(self):
        report = run_experiment(small_config(sigma_px=0.5))
        assert all(r.metrics.failures == 0 for r in report.trial_rows)

    def test_method_subset(self):
        cfg = small_config(methods=(Method.NVIEW_LM, Method.LINEAR))
        report = run_experiment(cfg)
        assert [a.method for a in report.methods] == ["linear", "nview-lm"]
        assert report.count_ratio == pytest.approx(3.0, abs=0.0)

    def test_first_pair_policy(self):
        cfg = small_config(policy=TwoViewPolicy.FIRST_PAIR)
        report = run_experiment(cfg)
        by = {a.method: a for a in report.methods}
        assert by["two-opt"].points_mean == 9.0
        assert by["two-opt"].disagreement_mean is None
        assert report.count_ratio == pytest.approx(1.0, abs=0.0)

    def test_detect_prob_raises_count_ratio(self):
        cfg = small_config(detect_prob=0.7, trials=4)
        report = run_experiment(cfg)
        assert report.count_ratio > 3.0

    def test_noise_favors_all_view_solver(self):
        cfg = small_config(sigma_px=0.5, resolution="fullhd", trials=4)
        report = run_experiment(cfg)
        by = {a.method: a for a in report.methods}
        assert by["nview-lm"].dispersion_mean < by["two-opt"].dispersion_mean
        assert report.dispersion_delta_pct > 0.0

    def test_no_methods_rejected(self):
        cfg = small_config()
        object.__setattr__(cfg, "methods", ())
        with pytest.raises(ConfigError):
            run_experiment(cfg)


class TestRunSweep:
    def test_preserves_order(self):
        configs = [small_config("b"), small_config("a")]
        reports = run_sweep(configs)
        assert [r.config_id for r in reports] == ["b", "a"]

    def test_parallel_matches_serial(self):
        configs = [small_config("a", sigma_px=0.5), small_config("b")]
        serial = run_sweep(configs)
        parallel = run_sweep(configs, parallelism=2)
        assert serial == parallel

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ConfigError):
            run_sweep([small_config("x"), small_config("x")])


class TestReports:
    def test_csv_headers(self, tmp_path):
        report = run_experiment(small_config())
        out = tmp_path / "report.csv"
        write_report([report], out)
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 3
        trial_lines = (tmp_path / "report.trials.csv").read_text().splitlines()
        assert trial_lines[0] == ",".join(TRIAL_CSV_COLUMNS)
        assert len(trial_lines) == 1 + len(report.trial_rows)

    def test_empty_report_writes_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        write_report([], out)
        assert out.read_text() == ",".join(CSV_COLUMNS) + "\n"
        trials = tmp_path / "empty.trials.csv"
        assert trials.read_text() == ",".join(TRIAL_CSV_COLUMNS) + "\n"

    def test_none_cells_are_empty(self, tmp_path):
        cfg = small_config(methods=(Method.NVIEW_LM,))
        out = tmp_path / "nv.csv"
        write_report([run_experiment(cfg)], out)
        row = out.read_text().splitlines()[1].split(",")
        assert row[CSV_COLUMNS.index("disagreement_mean")] == ""

    def test_csv_bytes_deterministic(self, tmp_path):
        cfg = small_config(sigma_px=0.5)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_report([run_experiment(cfg)], a)
        write_report([run_experiment(cfg)], b)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.trials.csv").read_bytes() == \
               (tmp_path / "b.trials.csv").read_bytes()

    def test_json_round_trip(self, tmp_path):
        reports = run_sweep([small_config("a", sigma_px=0.5),
                             small_config("b", detect_prob=0.8)])
        out = tmp_path / "report.json"
        write_report(reports, out, format="json")
        assert read_report(out) == reports

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            write_report([], tmp_path / "x.yaml", format="yaml")
