"""Command line interface.

Subcommands: simulate (render a synthetic scene to JSON), calibrate
(DLT from a correspondence file), triangulate (solve a scene's tracks),
bench (run configured experiments), sweep (run a built-in study).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.  MVTRI_SEED, when set, overrides every config's base seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import bench as benchmod
from . import config as configmod
from .calibration import calibrate_dlt, load_correspondences
from .errors import ConfigError, MvtriError, ParseError
from .scene import build_scene, load_scene, save_scene
from .triangulation import (Method, triangulate_linear, triangulate_nview_lm,
                            triangulate_two_view_optimal)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

METHOD_CHOICES = tuple(m.value for m in Method)


def _base_seed_override():
    raw = os.environ.get("MVTRI_SEED")
    if raw is None:
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"MVTRI_SEED must be an integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError("MVTRI_SEED must be non-negative")
    return seed


def _apply_seed_override(configs):
    seed = _base_seed_override()
    if seed is None:
        return configs
    return configmod.with_base_seed(configs, seed)


def _load_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def cmd_simulate(args):
    data = _load_json(args.config)
    if isinstance(data, dict) and ("experiments" in data or "sweep" in data):
        cfg = configmod.parse_config_data(data, source=str(args.config))[0]
        obj, rig, noise = cfg.object, cfg.rig, cfg.noise
    else:
        obj, rig, noise = configmod.parse_scene_data(data, source=str(args.config))
    scene = build_scene(obj, rig, noise)
    save_scene(scene, args.out)
    print(f"wrote {args.out}: {len(scene.views)} views, {len(scene.tracks)} tracks")
    return EXIT_OK


def cmd_calibrate(args):
    try:
        corr = load_correspondences(args.corr)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    result = calibrate_dlt(corr)
    print("P =")
    for row in result.P:
        print("  " + "  ".join(f"{v: .12e}" for v in row))
    print(f"algebraic_residual = {result.algebraic_residual:.6e}")
    print(f"rms_reprojection_px = {result.rms_reprojection:.6e}")
    return EXIT_OK


def _solve_track(method, Ps, track):
    if method is Method.TWO_VIEW_OPTIMAL:
        i, j = int(track.view_indices[0]), int(track.view_indices[1])
        return triangulate_two_view_optimal(Ps[i], Ps[j],
                                            track.pixels[0], track.pixels[1])
    if method is Method.NVIEW_LM:
        return triangulate_nview_lm(Ps, track)
    return triangulate_linear(Ps, track)


def cmd_triangulate(args):
    scene = load_scene(args.scene)
    method = Method(args.method)
    Ps = [v.P for v in scene.views]
    rows = []
    solved = 0
    for track in scene.tracks:
        try:
            res = _solve_track(method, Ps, track)
        except MvtriError as exc:
            rows.append((track.point_id, "", "", "", "", f"failed: {exc}"))
            continue
        if res.point is None:
            rows.append((track.point_id, "", "", "", "", f"failed: {res.detail}"))
            continue
        solved += 1
        x, y, z = res.xyz
        mean_px = float(res.per_view_residual.mean()) if res.per_view_residual.size else 0.0
        rows.append((track.point_id, repr(float(x)), repr(float(y)),
                     repr(float(z)), repr(mean_px), res.detail or "ok"))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("point_id", "x", "y", "z", "mean_residual_px", "status"))
        w.writerows(rows)
    print(f"wrote {args.out}: {solved}/{len(scene.tracks)} tracks solved ({method.value})")
    return EXIT_OK


def _write_reports(reports, prefix, format):
    out = Path(f"{prefix}.{format}")
    benchmod.write_report(reports, out, format=format)
    print(f"wrote {out} and {out.with_name(out.stem + '.trials.csv')}")
    return EXIT_OK


def cmd_bench(args):
    configs = _apply_seed_override(configmod.parse_config(args.config))
    reports = benchmod.run_sweep(configs, parallelism=args.parallel,
                                 timing=args.timing)
    return _write_reports(reports, args.out, args.format)


def cmd_sweep(args):
    generator = configmod._SWEEPS[args.preset]
    kwargs = {}
    if args.trials is not None:
        kwargs["trials"] = args.trials
    configs = _apply_seed_override(generator(**kwargs))
    reports = benchmod.run_sweep(configs, parallelism=args.parallel,
                                 timing=args.timing)
    return _write_reports(reports, args.out, args.format)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvtri",
        description="Multi-view triangulation toolkit and benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic scene to JSON")
    p.add_argument("--config", required=True, help="scene or experiment JSON file")
    p.add_argument("--out", required=True, help="output scene JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="DLT calibration from correspondences")
    p.add_argument("--corr", required=True,
                   help="text file of 'X Y Z u v' rows (# comments allowed)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("triangulate", help="triangulate a scene's tracks")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--method", required=True, choices=METHOD_CHOICES)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_triangulate)

    p = sub.add_parser("bench", help="run experiments from a config file")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtimes (breaks byte determinism)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="run a built-in study")
    p.add_argument("--preset", required=True,
                   choices=tuple(sorted(configmod._SWEEPS)))
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--trials", type=int, default=None, metavar="N")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtimes (breaks byte determinism)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mvtri: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MvtriError as exc:
        print(f"mvtri: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"mvtri: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
