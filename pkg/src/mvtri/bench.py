"""Benchmark harness: runs triangulation methods over seeded synthetic
scenes and aggregates accuracy metrics.

Counting rules: with the all-pairs policy a track visible in all three
views is triangulated once per view pair (three results, each counted),
and a track visible in exactly two views once; the n-view method handles
only tracks visible in every view.  Failed solves are counted and excluded
from the statistics, never fatal.

Determinism: trial t of an experiment builds its scene from seed
base_seed + t (combined with the seeds in the scene specs), and reports
are written with stable formatting, so identical configs produce
byte-identical output files.  Wall-clock timing is the one quantity that
cannot be deterministic; it is recorded only when timing is requested and
written as 0.0 otherwise.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, TwoViewPolicy  # noqa: F401  (re-export)
from .errors import ConfigError, EmptyInput
from .geometry import fundamental_from_projections
from .scene import build_scene
from .triangulation import (Method, Track, triangulate_linear,
                            triangulate_nview_lm, triangulate_two_view_optimal)

METHOD_ORDER = (Method.LINEAR, Method.TWO_VIEW_OPTIMAL, Method.NVIEW_LM)

CSV_COLUMNS = ("config_id", "method", "trials", "points_mean", "points_std",
               "dispersion_mean", "dispersion_std", "reproj_mean",
               "disagreement_mean", "runtime_ms_mean")

TRIAL_CSV_COLUMNS = ("config_id", "trial", "method", "points", "dispersion",
                     "reproj", "disagreement", "runtime_ms", "failures")


@dataclass(frozen=True)
class MethodMetrics:
    """Metrics of one method in one trial.  None marks an undefined value
    (no ground truth, no successful points, or a non-applicable metric)."""

    points_reconstructed: int
    dispersion: float | None
    mean_reprojection_error: float | None
    pairwise_disagreement: float | None
    runtime_ms: float
    failures: int = 0


@dataclass(frozen=True)
class TrialRow:
    config_id: str
    trial: int
    method: str
    metrics: MethodMetrics


@dataclass(frozen=True)
class MethodAggregate:
    method: str
    trials: int
    points_mean: float
    points_std: float
    dispersion_mean: float | None
    dispersion_std: float | None
    reproj_mean: float | None
    disagreement_mean: float | None
    runtime_ms_mean: float


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated outcome of one experiment configuration.

    count_ratio is two-view points over n-view points (the common-pixel
    ratio); dispersion_delta_pct is the relative dispersion advantage of
    the n-view method over the optimal two-view method, in percent.
    """

    config_id: str
    methods: tuple
    count_ratio: float | None
    dispersion_delta_pct: float | None
    trial_rows: tuple = field(default_factory=tuple)


def dispersion(results, ground_truth):
    """RMS distance between reconstructed points and their truth (cm)."""
    pts = [r.xyz if hasattr(r, "xyz") else np.asarray(r, dtype=float) for r in results]
    gts = [np.asarray(g, dtype=float) for g in ground_truth]
    if len(pts) != len(gts):
        raise ValueError("results and ground truth must be matched lists")
    if not pts:
        raise EmptyInput("dispersion of an empty result set")
    sq = [float(np.sum((p - g) ** 2)) for p, g in zip(pts, gts)]
    return float(np.sqrt(np.mean(sq)))


def pairwise_disagreement(results_a, results_b, results_c):
    """RMS over tracks of the mean pairwise distance between the three
    per-pair reconstructions of the same point."""
    a = [np.asarray(getattr(r, "xyz", r), dtype=float) for r in results_a]
    b = [np.asarray(getattr(r, "xyz", r), dtype=float) for r in results_b]
    c = [np.asarray(getattr(r, "xyz", r), dtype=float) for r in results_c]
    if not (len(a) == len(b) == len(c)):
        raise ValueError("the three result lists must be matched")
    if not a:
        raise EmptyInput("disagreement of an empty result set")
    means = []
    for pa, pb, pc in zip(a, b, c):
        d = (np.linalg.norm(pa - pb) + np.linalg.norm(pa - pc)
             + np.linalg.norm(pb - pc)) / 3.0
        means.append(d * d)
    return float(np.sqrt(np.mean(means)))


def _scene_for_trial(config, trial):
    s = config.base_seed + trial
    obj = replace(config.object, seed=config.object.seed + s)
    noise = replace(config.noise, seed=config.noise.seed + s)
    return build_scene(obj, config.rig, noise)


def _pairs_for(track, policy):
    if policy is TwoViewPolicy.FIRST_PAIR or len(track) == 2:
        return [(0, 1)]
    return list(combinations(range(len(track)), 2))


def _run_two_view(config, scene, method, fcache):
    Ps = [v.P for v in scene.views]
    outcomes = []  # (track, pair results in pair order)
    for track in scene.tracks:
        pair_results = []
        for i, j in _pairs_for(track, config.two_view_policy):
            vi, vj = int(track.view_indices[i]), int(track.view_indices[j])
            x1, x2 = track.pixels[i], track.pixels[j]
            if method is Method.TWO_VIEW_OPTIMAL:
                if (vi, vj) not in fcache:
                    fcache[(vi, vj)] = fundamental_from_projections(Ps[vi], Ps[vj])
                res = triangulate_two_view_optimal(Ps[vi], Ps[vj], x1, x2,
                                                   F=fcache[(vi, vj)])
            else:
                sub = Track(track.point_id, np.asarray([0, 1]), np.stack([x1, x2]))
                res = triangulate_linear([Ps[vi], Ps[vj]], sub)
            pair_results.append(res)
        outcomes.append((track, pair_results))
    return outcomes


def _metrics_from_two_view(config, scene, outcomes, nviews):
    points = 0
    failures = 0
    recon, truth = [], []
    triples = ([], [], [])
    for track, pair_results in outcomes:
        ok = [r for r in pair_results if r.point is not None]
        points += len(ok)
        failures += len(pair_results) - len(ok)
        gt = scene.ground_truth[track.point_id] if scene.ground_truth is not None else None
        for r in ok:
            recon.append(r.xyz)
            if gt is not None:
                truth.append(gt)
        if (config.two_view_policy is TwoViewPolicy.ALL_PAIRS and nviews == 3
                and len(pair_results) == 3
                and all(r.point is not None for r in pair_results)):
            for slot, r in zip(triples, pair_results):
                slot.append(r.xyz)
    disp = None
    if truth and len(truth) == len(recon):
        disp = dispersion(recon, truth)
    reproj = _mean_reprojection(r for _, rs in outcomes for r in rs)
    disagreement = None
    if triples[0]:
        disagreement = pairwise_disagreement(*triples)
    return points, failures, disp, reproj, disagreement


def _mean_reprojection(results):
    residuals = [r.per_view_residual for r in results if r.point is not None]
    if not residuals:
        return None
    return float(np.mean(np.concatenate(residuals)))


def _run_trial(config, trial, timing):
    scene = _scene_for_trial(config, trial)
    Ps = [v.P for v in scene.views]
    nviews = len(Ps)
    fcache = {}
    rows = []
    for method in sorted(config.methods, key=METHOD_ORDER.index):
        t0 = time.perf_counter() if timing else 0.0
        if method is Method.NVIEW_LM:
            full = [t for t in scene.tracks if len(t) == nviews]
            results = [triangulate_nview_lm(Ps, t) for t in full]
            kept = [(r, t) for r, t in zip(results, full) if r.point is not None]
            points = len(kept)
            failures = len(results) - points
            disp = None
            if scene.ground_truth is not None and kept:
                disp = dispersion([r.xyz for r, _ in kept],
                                  [scene.ground_truth[t.point_id] for _, t in kept])
            reproj = _mean_reprojection(r for r, _ in kept)
            disagreement = None
        else:
            outcomes = _run_two_view(config, scene, method, fcache)
            points, failures, disp, reproj, disagreement = _metrics_from_two_view(
                config, scene, outcomes, nviews)
        runtime = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
        metrics = MethodMetrics(points, disp, reproj, disagreement, runtime, failures)
        rows.append(TrialRow(config.id, trial, method.value, metrics))
    return rows


def _aggregate(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    return float(arr.mean()), float(arr.std())


def run_experiment(config, timing=False):
    """Run all trials of one experiment and aggregate per method.

    Pass timing=True to record wall-clock runtimes (at the price of
    report determinism; the default writes zeros).
    """
    if not config.methods:
        raise ConfigError("experiment has no methods")
    rows = []
    for trial in range(config.trials):
        rows.extend(_run_trial(config, trial, timing))

    aggregates = []
    for method in sorted(config.methods, key=METHOD_ORDER.index):
        mrows = [r.metrics for r in rows if r.method == method.value]
        points_mean, points_std = _aggregate([m.points_reconstructed for m in mrows])
        disp_mean, disp_std = _aggregate([m.dispersion for m in mrows])
        reproj_mean, _ = _aggregate([m.mean_reprojection_error for m in mrows])
        dis_mean, _ = _aggregate([m.pairwise_disagreement for m in mrows])
        run_mean, _ = _aggregate([m.runtime_ms for m in mrows])
        aggregates.append(MethodAggregate(
            method.value, config.trials, points_mean, points_std,
            disp_mean, disp_std, reproj_mean, dis_mean, run_mean))

    by_method = {a.method: a for a in aggregates}
    two_view = by_method.get(Method.TWO_VIEW_OPTIMAL.value,
                             by_method.get(Method.LINEAR.value))
    n_view = by_method.get(Method.NVIEW_LM.value)
    count_ratio = None
    dispersion_delta_pct = None
    if two_view is not None and n_view is not None:
        if n_view.points_mean:
            count_ratio = two_view.points_mean / n_view.points_mean
        if two_view.dispersion_mean and n_view.dispersion_mean is not None:
            dispersion_delta_pct = 100.0 * (two_view.dispersion_mean
                                            - n_view.dispersion_mean) / two_view.dispersion_mean
    return ExperimentReport(config.id, tuple(aggregates), count_ratio,
                            dispersion_delta_pct, tuple(rows))


def run_sweep(configs, parallelism=1, timing=False):
    """Run several experiments, preserving input order in the output."""
    configs = list(configs)
    ids = [c.id for c in configs]
    if len(set(ids)) != len(ids):
        raise ConfigError("experiment ids must be unique within a sweep")
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(lambda c: run_experiment(c, timing=timing), configs))
    return [run_experiment(c, timing=timing) for c in configs]


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _trial_rows_csv(reports):
    out = io.StringIO(newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRIAL_CSV_COLUMNS)
    for report in reports:
        for row in report.trial_rows:
            m = row.metrics
            w.writerow([_cell(v) for v in (
                row.config_id, row.trial, row.method, m.points_reconstructed,
                m.dispersion, m.mean_reprojection_error, m.pairwise_disagreement,
                m.runtime_ms, m.failures)])
    return out.getvalue()


def _reports_csv(reports):
    out = io.StringIO(newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for report in reports:
        for a in report.methods:
            w.writerow([_cell(v) for v in (
                report.config_id, a.method, a.trials, a.points_mean,
                a.points_std, a.dispersion_mean, a.dispersion_std,
                a.reproj_mean, a.disagreement_mean, a.runtime_ms_mean)])
    return out.getvalue()


def _report_to_data(report):
    return {
        "config_id": report.config_id,
        "count_ratio": report.count_ratio,
        "dispersion_delta_pct": report.dispersion_delta_pct,
        "methods": [{
            "method": a.method, "trials": a.trials,
            "points_mean": a.points_mean, "points_std": a.points_std,
            "dispersion_mean": a.dispersion_mean, "dispersion_std": a.dispersion_std,
            "reproj_mean": a.reproj_mean, "disagreement_mean": a.disagreement_mean,
            "runtime_ms_mean": a.runtime_ms_mean,
        } for a in report.methods],
        "trials": [{
            "trial": r.trial, "method": r.method,
            "points": r.metrics.points_reconstructed,
            "dispersion": r.metrics.dispersion,
            "reproj": r.metrics.mean_reprojection_error,
            "disagreement": r.metrics.pairwise_disagreement,
            "runtime_ms": r.metrics.runtime_ms,
            "failures": r.metrics.failures,
        } for r in report.trial_rows],
    }


def _report_from_data(data):
    methods = tuple(MethodAggregate(
        m["method"], m["trials"], m["points_mean"], m["points_std"],
        m["dispersion_mean"], m["dispersion_std"], m["reproj_mean"],
        m["disagreement_mean"], m["runtime_ms_mean"]) for m in data["methods"])
    rows = tuple(TrialRow(
        data["config_id"], t["trial"], t["method"],
        MethodMetrics(t["points"], t["dispersion"], t["reproj"],
                      t["disagreement"], t["runtime_ms"], t["failures"]))
        for t in data["trials"])
    return ExperimentReport(data["config_id"], methods, data["count_ratio"],
                            data["dispersion_delta_pct"], rows)


def write_report(reports, path, format="csv"):
    """Write aggregates as CSV or JSON, plus per-trial rows alongside.

    The per-trial audit rows always go to '<path stem>.trials.csv' next to
    the main file.  Output bytes depend only on the report contents.
    """
    reports = list(reports)
    path = Path(path)
    if format == "csv":
        path.write_text(_reports_csv(reports))
    elif format == "json":
        data = {"reports": [_report_to_data(r) for r in reports]}
        path.write_text(json.dumps(data, sort_keys=True, separators=(",", ":")))
    else:
        raise ValueError(f"unknown report format {format!r}")
    trials_path = path.with_name(path.stem + ".trials.csv")
    trials_path.write_text(_trial_rows_csv(reports))
    return path


def read_report(path):
    """Read back a JSON report written by write_report."""
    data = json.loads(Path(path).read_text())
    return [_report_from_data(r) for r in data["reports"]]
