"""Experiment configuration: JSON parsing, validation, sweep generators."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from itertools import combinations
from pathlib import Path

from .errors import InvalidSpec, ParseError, ValidationError
from .scene import (ANGLE_STUDY, DISTANCE_STUDY, CUSTOM, DISTANCE_STATIONS_CM,
                    PLANAR_GRID, RANDOM_BOX, RESOLUTION_PRESETS, NoiseModel,
                    ObjectModel, RigSpec)
from .triangulation import Method

DEFAULT_TRIALS = 30
DEFAULT_BASE_SEED = 1234
DEFAULT_SIGMA_PX = 0.5
DEFAULT_DETECT_PROB = 1.0

# The measured camera-angle grid: one value per left/right placement.
ANGLE_LEFT_DEG = (5.33, 9.46, 10.72)
ANGLE_RIGHT_DEG = (8.74, 13.18, 16.79)

ALL_METHODS = (Method.LINEAR, Method.TWO_VIEW_OPTIMAL, Method.NVIEW_LM)


class TwoViewPolicy(Enum):
    ALL_PAIRS = "all-pairs"
    FIRST_PAIR = "first-pair"


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark experiment: a scene recipe plus run parameters."""

    id: str
    object: ObjectModel
    rig: RigSpec
    noise: NoiseModel
    methods: tuple = ALL_METHODS
    two_view_policy: TwoViewPolicy = TwoViewPolicy.ALL_PAIRS
    trials: int = DEFAULT_TRIALS
    base_seed: int = DEFAULT_BASE_SEED

    def __post_init__(self):
        if not self.id:
            raise ValidationError("experiment id must be a non-empty string")
        methods = tuple(self.methods)
        if not methods:
            raise ValidationError("methods must be non-empty")
        if len(set(methods)) != len(methods):
            raise ValidationError("methods must be unique")
        object.__setattr__(self, "methods", methods)
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.base_seed < 0:
            raise ValidationError("base_seed must be non-negative")


def _reject_unknown(mapping, allowed, ctx):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ParseError(f"{ctx}: unknown field(s) {', '.join(unknown)}")


def _parse_method(name, ctx):
    try:
        return Method(name)
    except ValueError:
        valid = ", ".join(m.value for m in Method)
        raise ParseError(f"{ctx}: unknown method {name!r} (expected one of {valid})") from None


def _parse_object(data, ctx):
    if data is None:
        return ObjectModel()
    _reject_unknown(data, {"kind", "extents_cm", "grid_counts", "point_count", "seed"}, ctx)
    kind = data.get("kind", PLANAR_GRID)
    kwargs = {"kind": kind}
    for key in ("extents_cm", "grid_counts", "point_count", "seed"):
        if key in data:
            kwargs[key] = tuple(data[key]) if isinstance(data[key], list) else data[key]
    try:
        return ObjectModel(**kwargs)
    except (InvalidSpec, TypeError, ValueError) as exc:
        raise ValidationError(f"{ctx}: {exc}") from None


def _parse_rig(data, ctx):
    if data is None:
        return RigSpec()
    allowed = {"kind", "middle_distance_cm", "left_angle_deg", "right_angle_deg",
               "camera_offsets_cm", "standoff_cm", "resolution", "focal_pixels",
               "custom_centers"}
    _reject_unknown(data, allowed, ctx)
    kwargs = {}
    for key in allowed:
        if key in data:
            value = data[key]
            if key in ("camera_offsets_cm", "custom_centers", "resolution") and isinstance(value, list):
                value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
            kwargs[key] = value
    try:
        return RigSpec(**kwargs)
    except (InvalidSpec, TypeError, ValueError) as exc:
        raise ValidationError(f"{ctx}: {exc}") from None


def _parse_noise(data, ctx):
    if data is None:
        return NoiseModel()
    _reject_unknown(data, {"sigma_px", "quantize", "detect_prob", "seed"}, ctx)
    try:
        return NoiseModel(**data)
    except (InvalidSpec, TypeError) as exc:
        raise ValidationError(f"{ctx}: {exc}") from None


def _parse_experiment(data, index):
    ctx = f"experiments[{index}]"
    if not isinstance(data, dict):
        raise ParseError(f"{ctx}: expected an object")
    allowed = {"id", "object", "rig", "noise", "methods", "two_view_policy",
               "trials", "base_seed"}
    _reject_unknown(data, allowed, ctx)
    if "id" not in data or not isinstance(data["id"], str):
        raise ParseError(f"{ctx}: 'id' is required and must be a string")
    cid = data["id"]
    methods = ALL_METHODS
    if "methods" in data:
        if not isinstance(data["methods"], list):
            raise ParseError(f"{ctx}.methods: expected a list")
        methods = tuple(_parse_method(m, f"{ctx}.methods") for m in data["methods"])
    policy = TwoViewPolicy.ALL_PAIRS
    if "two_view_policy" in data:
        try:
            policy = TwoViewPolicy(data["two_view_policy"])
        except ValueError:
            raise ParseError(f"{ctx}.two_view_policy: expected 'all-pairs' or 'first-pair'") from None
    try:
        return ExperimentConfig(
            id=cid,
            object=_parse_object(data.get("object"), f"{ctx}.object"),
            rig=_parse_rig(data.get("rig"), f"{ctx}.rig"),
            noise=_parse_noise(data.get("noise"), f"{ctx}.noise"),
            methods=methods,
            two_view_policy=policy,
            trials=int(data.get("trials", DEFAULT_TRIALS)),
            base_seed=int(data.get("base_seed", DEFAULT_BASE_SEED)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{ctx}: {exc}") from None


_SWEEPS = {}


def parse_config_data(data, source="<config>"):
    """Parse an already-decoded configuration object into experiment list."""
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    if "experiments" in data:
        _reject_unknown(data, {"experiments"}, source)
        if not isinstance(data["experiments"], list) or not data["experiments"]:
            raise ParseError(f"{source}: 'experiments' must be a non-empty list")
        return [_parse_experiment(e, i) for i, e in enumerate(data["experiments"])]
    if "sweep" in data:
        allowed = {"sweep", "trials", "base_seed", "noise", "methods", "two_view_policy"}
        _reject_unknown(data, allowed, source)
        name = data["sweep"]
        if name not in _SWEEPS:
            raise ParseError(f"{source}: unknown sweep {name!r} "
                             f"(expected one of {', '.join(sorted(_SWEEPS))})")
        kwargs = {}
        if "trials" in data:
            kwargs["trials"] = int(data["trials"])
        if "base_seed" in data:
            kwargs["base_seed"] = int(data["base_seed"])
        if "noise" in data:
            noise = _parse_noise(data["noise"], f"{source}.noise")
            kwargs.update(sigma_px=noise.sigma_px, quantize=noise.quantize,
                          detect_prob=noise.detect_prob)
        if "methods" in data:
            kwargs["methods"] = tuple(_parse_method(m, f"{source}.methods")
                                      for m in data["methods"])
        if "two_view_policy" in data:
            kwargs["two_view_policy"] = TwoViewPolicy(data["two_view_policy"])
        return _SWEEPS[name](**kwargs)
    raise ParseError(f"{source}: need either 'experiments' or 'sweep'")


def parse_scene_data(data, source="<scene-spec>"):
    """Parse a bare scene recipe: an object with optional 'object', 'rig'
    and 'noise' sections.  Returns (ObjectModel, RigSpec, NoiseModel)."""
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    _reject_unknown(data, {"object", "rig", "noise"}, source)
    return (_parse_object(data.get("object"), f"{source}.object"),
            _parse_rig(data.get("rig"), f"{source}.rig"),
            _parse_noise(data.get("noise"), f"{source}.noise"))


def parse_config(path):
    """Load and validate a JSON experiment configuration file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config_data(data, source=str(path))


def _sweep_noise(sigma_px, quantize, detect_prob):
    return NoiseModel(sigma_px=sigma_px, quantize=quantize, detect_prob=detect_prob)


def angle_sweep_configs(trials=DEFAULT_TRIALS, base_seed=DEFAULT_BASE_SEED,
                        sigma_px=DEFAULT_SIGMA_PX, quantize=False,
                        detect_prob=DEFAULT_DETECT_PROB, methods=ALL_METHODS,
                        two_view_policy=TwoViewPolicy.ALL_PAIRS,
                        resolution="ultrahd", object_model=None):
    """The 3x3 left/right camera-angle grid (9 experiments)."""
    obj = object_model if object_model is not None else ObjectModel()
    noise = _sweep_noise(sigma_px, quantize, detect_prob)
    configs = []
    for left in ANGLE_LEFT_DEG:
        for right in ANGLE_RIGHT_DEG:
            rig = RigSpec(kind=ANGLE_STUDY, left_angle_deg=left,
                          right_angle_deg=right, resolution=resolution)
            configs.append(ExperimentConfig(
                id=f"angle-l{left:g}-r{right:g}", object=obj, rig=rig,
                noise=noise, methods=methods, two_view_policy=two_view_policy,
                trials=trials, base_seed=base_seed))
    return configs


def distance_sweep_configs(trials=DEFAULT_TRIALS, base_seed=DEFAULT_BASE_SEED,
                           sigma_px=DEFAULT_SIGMA_PX, quantize=False,
                           detect_prob=DEFAULT_DETECT_PROB, methods=ALL_METHODS,
                           two_view_policy=TwoViewPolicy.ALL_PAIRS,
                           resolution="ultrahd", object_model=None):
    """Every 3-of-7 choice of rail stations (35 experiments)."""
    obj = object_model if object_model is not None else ObjectModel()
    noise = _sweep_noise(sigma_px, quantize, detect_prob)
    configs = []
    for offsets in combinations(DISTANCE_STATIONS_CM, 3):
        rig = RigSpec(kind=DISTANCE_STUDY, camera_offsets_cm=offsets,
                      resolution=resolution)
        label = "-".join(f"{o:g}" for o in offsets)
        configs.append(ExperimentConfig(
            id=f"dist-{label}", object=obj, rig=rig, noise=noise,
            methods=methods, two_view_policy=two_view_policy,
            trials=trials, base_seed=base_seed))
    return configs


def resolution_sweep_configs(trials=DEFAULT_TRIALS, base_seed=DEFAULT_BASE_SEED,
                             sigma_px=0.0, quantize=True,
                             detect_prob=DEFAULT_DETECT_PROB, methods=ALL_METHODS,
                             two_view_policy=TwoViewPolicy.ALL_PAIRS,
                             object_model=None):
    """The resolution ladder under quantization-only noise.

    Uses a seeded box cloud so repeated trials vary the object rather than
    the (deterministic) quantization.
    """
    obj = object_model if object_model is not None else ObjectModel(
        kind=RANDOM_BOX, extents_cm=(10.0, 10.0, 5.0), point_count=100)
    noise = _sweep_noise(sigma_px, quantize, detect_prob)
    configs = []
    for preset in ("low", "fullhd", "ultrahd", "native"):
        rig = RigSpec(kind=ANGLE_STUDY, resolution=preset)
        configs.append(ExperimentConfig(
            id=f"res-{preset}", object=obj, rig=rig, noise=noise,
            methods=methods, two_view_policy=two_view_policy,
            trials=trials, base_seed=base_seed))
    return configs


_SWEEPS.update({
    "angles": angle_sweep_configs,
    "distances": distance_sweep_configs,
    "resolutions": resolution_sweep_configs,
})


def with_base_seed(configs, base_seed):
    """Copies of the configs with a replacement base seed."""
    return [replace(c, base_seed=base_seed) for c in configs]
