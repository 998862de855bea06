"""Synthetic scene generation: planar/box objects, three-camera rigs,
pixel-noise rendering, and a JSON scene format.

All distances are centimetres.  Rigs place cameras in the y = 0 plane
looking at the object centroid (the origin), with +y as the up direction.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .geometry import CameraIntrinsics, CameraView, compose_projection, look_at_rotation
from .triangulation import Track

RESOLUTION_PRESETS = {
    "low": (480, 320),
    "fullhd": (1920, 1080),
    "ultrahd": (3840, 2160),
    "native": (4032, 3024),
}

# Focal length in pixels at the native sensor width; other resolutions
# scale it by their width ratio, which keeps the field of view fixed.
NATIVE_FOCAL_PX = 3200.0
NATIVE_WIDTH_PX = 4032

# Camera stations along the rail of the distance rig (cm from the first).
DISTANCE_STATIONS_CM = (0.0, 1.73, 3.46, 5.33, 7.2, 9.16, 10.93)
# Station that sits on the perpendicular bisector of the rail.
BISECTOR_STATION_CM = 5.33

PLANAR_GRID = "planar_grid"
RANDOM_BOX = "random_box"
ANGLE_STUDY = "angle_study"
DISTANCE_STUDY = "distance_study"
CUSTOM = "custom"

MIN_OBJECT_POINTS = 8


def _tuple3(v, name):
    t = tuple(float(x) for x in v)
    if len(t) != 3:
        raise InvalidSpec(f"{name} must have 3 components")
    return t


@dataclass(frozen=True)
class ObjectModel:
    """Deterministic synthetic object: a planar grid or a seeded box cloud."""

    kind: str = PLANAR_GRID
    extents_cm: tuple = (10.0, 10.0, 0.0)
    grid_counts: tuple = (8, 8)
    point_count: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (PLANAR_GRID, RANDOM_BOX):
            raise InvalidSpec(f"unknown object kind {self.kind!r}")
        object.__setattr__(self, "extents_cm", _tuple3(self.extents_cm, "extents_cm"))
        if any(e < 0 for e in self.extents_cm):
            raise InvalidSpec("extents_cm must be non-negative")
        gc = tuple(int(v) for v in self.grid_counts)
        if len(gc) != 2 or min(gc) < 1:
            raise InvalidSpec("grid_counts must be two positive integers")
        object.__setattr__(self, "grid_counts", gc)
        if self.kind == PLANAR_GRID and gc[0] * gc[1] < MIN_OBJECT_POINTS:
            raise InvalidSpec(f"grid needs at least {MIN_OBJECT_POINTS} points")
        if self.kind == RANDOM_BOX and self.point_count < MIN_OBJECT_POINTS:
            raise InvalidSpec(f"point_count must be at least {MIN_OBJECT_POINTS}")
        if self.seed < 0:
            raise InvalidSpec("seed must be non-negative")


def make_object(model):
    """Points of the object model, an (N, 3) array centered on the origin."""
    ex, ey, ez = model.extents_cm
    if model.kind == PLANAR_GRID:
        rows, cols = model.grid_counts

        def axis(count, extent):
            if count == 1:
                return np.zeros(1)
            return np.linspace(-extent / 2.0, extent / 2.0, count)

        xs = axis(cols, ex)
        ys = axis(rows, ey)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    rng = np.random.default_rng(model.seed)
    half = np.array([ex, ey, ez]) / 2.0
    return rng.uniform(-half, half, size=(model.point_count, 3))


@dataclass(frozen=True)
class RigSpec:
    """Three-camera geometry plus shared intrinsics.

    angle_study: cameras on a circle of radius middle_distance_cm around
    the origin, middle at azimuth 0, left/right at -left_angle_deg and
    +right_angle_deg.  distance_study: cameras on a rail at standoff_cm
    from the object plane, picked by camera_offsets_cm along the rail
    (offsets are measured from the left-most station; the bisector station
    is 5.33).  custom: explicit camera centers, all aimed at the origin.
    """

    kind: str = ANGLE_STUDY
    middle_distance_cm: float = 21.0
    left_angle_deg: float = 5.33
    right_angle_deg: float = 16.79
    camera_offsets_cm: tuple = (1.73, 5.33, 7.2)
    standoff_cm: float = 21.0
    resolution: object = "ultrahd"
    focal_pixels: float | None = None
    custom_centers: tuple = ()

    def __post_init__(self):
        if self.kind not in (ANGLE_STUDY, DISTANCE_STUDY, CUSTOM):
            raise InvalidSpec(f"unknown rig kind {self.kind!r}")
        if self.kind == ANGLE_STUDY:
            if self.middle_distance_cm <= 0:
                raise InvalidSpec("middle_distance_cm must be positive")
            for v in (self.left_angle_deg, self.right_angle_deg):
                if not 0.0 < v < 90.0:
                    raise InvalidSpec("rig angles must lie strictly between 0 and 90 degrees")
        if self.kind == DISTANCE_STUDY:
            offsets = tuple(float(v) for v in self.camera_offsets_cm)
            if len(offsets) != 3 or np.any(np.diff(offsets) <= 0):
                raise InvalidSpec("camera_offsets_cm must be three strictly increasing values")
            if self.standoff_cm <= 0:
                raise InvalidSpec("standoff_cm must be positive")
            object.__setattr__(self, "camera_offsets_cm", offsets)
        if self.kind == CUSTOM:
            centers = tuple(_tuple3(c, "custom center") for c in self.custom_centers)
            if len(centers) < 2:
                raise InvalidSpec("custom rig needs at least two cameras")
            object.__setattr__(self, "custom_centers", centers)
        if isinstance(self.resolution, str):
            if self.resolution not in RESOLUTION_PRESETS:
                raise InvalidSpec(f"unknown resolution preset {self.resolution!r}")
        else:
            wh = tuple(int(v) for v in self.resolution)
            if len(wh) != 2 or min(wh) < 1:
                raise InvalidSpec("resolution must be a preset name or positive (width, height)")
            object.__setattr__(self, "resolution", wh)
        if self.focal_pixels is not None and self.focal_pixels <= 0:
            raise InvalidSpec("focal_pixels must be positive")

    def image_size(self):
        if isinstance(self.resolution, str):
            return RESOLUTION_PRESETS[self.resolution]
        return self.resolution

    def focal(self):
        if self.focal_pixels is not None:
            return float(self.focal_pixels)
        width, _ = self.image_size()
        return NATIVE_FOCAL_PX * width / NATIVE_WIDTH_PX


def _camera_at(center, spec):
    width, height = spec.image_size()
    intr = CameraIntrinsics(f=1.0, sx=spec.focal(), sy=spec.focal(),
                            ox=width / 2.0, oy=height / 2.0)
    R = look_at_rotation(center, (0.0, 0.0, 0.0))
    return CameraView(intr, R, np.asarray(center, dtype=float), width, height)


def make_angle_rig(spec):
    """Left, middle, right cameras on the viewing circle, aimed at origin."""
    if spec.kind != ANGLE_STUDY:
        raise InvalidSpec("spec.kind must be angle_study")
    d = spec.middle_distance_cm
    views = []
    for deg in (-spec.left_angle_deg, 0.0, spec.right_angle_deg):
        theta = np.deg2rad(deg)
        center = (d * np.sin(theta), 0.0, -d * np.cos(theta))
        views.append(_camera_at(center, spec))
    return views


def make_distance_rig(spec):
    """Three rail cameras at the requested offsets, aimed at the origin."""
    if spec.kind != DISTANCE_STUDY:
        raise InvalidSpec("spec.kind must be distance_study")
    views = []
    for offset in spec.camera_offsets_cm:
        center = (offset - BISECTOR_STATION_CM, 0.0, -spec.standoff_cm)
        views.append(_camera_at(center, spec))
    return views


def make_custom_rig(spec):
    if spec.kind != CUSTOM:
        raise InvalidSpec("spec.kind must be custom")
    return [_camera_at(c, spec) for c in spec.custom_centers]


def make_rig(spec):
    if spec.kind == ANGLE_STUDY:
        return make_angle_rig(spec)
    if spec.kind == DISTANCE_STUDY:
        return make_distance_rig(spec)
    return make_custom_rig(spec)


@dataclass(frozen=True)
class NoiseModel:
    """Measurement model: Gaussian pixel noise, optional quantization to
    pixel centers, and a per-observation detection probability."""

    sigma_px: float = 0.5
    quantize: bool = False
    detect_prob: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_px < 0:
            raise InvalidSpec("sigma_px must be non-negative")
        if not 0.0 <= self.detect_prob <= 1.0:
            raise InvalidSpec("detect_prob must lie in [0, 1]")
        if self.seed < 0:
            raise InvalidSpec("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class SceneView:
    """What a consumer needs of a camera: its matrix and image bounds."""

    P: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.shape != (3, 4):
            raise InvalidSpec("view matrix must be 3x4")
        object.__setattr__(self, "P", P)


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    ground_truth: np.ndarray | None  # (N, 3) or None for imported data
    views: list
    tracks: list
    provenance: dict | None = None


def _view_matrix_and_size(view):
    if isinstance(view, CameraView):
        return compose_projection(view), view.image_width, view.image_height
    return view.P, view.width, view.height


def render_tracks(views, points, noise):
    """Observe the points with every camera and group them into tracks.

    Per view: project, keep points in front of the camera whose exact
    projection is inside [0, width) x [0, height), add Gaussian pixel
    noise, optionally quantize to pixel centers (floor + 0.5), drop
    observations that left the bounds, then apply the detection draw.
    Points seen by at least two views become tracks.  One seeded generator
    drives all draws, so a scene is reproducible from its specs alone.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    rng = np.random.default_rng(noise.seed)
    Xh = np.hstack([points, np.ones((n, 1))])
    keeps, pixels = [], []
    for view in views:
        P, width, height = _view_matrix_and_size(view)
        proj = Xh @ P.T
        w = proj[:, 2]
        in_front = w > 1e-12
        safe_w = np.where(in_front, w, 1.0)
        px = proj[:, :2] / safe_w[:, None]
        visible = (in_front
                   & (px[:, 0] >= 0.0) & (px[:, 0] < width)
                   & (px[:, 1] >= 0.0) & (px[:, 1] < height))
        px = px + rng.normal(0.0, noise.sigma_px, size=(n, 2))
        if noise.quantize:
            px = np.floor(px) + 0.5
        visible &= ((px[:, 0] >= 0.0) & (px[:, 0] < width)
                    & (px[:, 1] >= 0.0) & (px[:, 1] < height))
        visible &= rng.uniform(size=n) < noise.detect_prob
        keeps.append(visible)
        pixels.append(px)
    tracks = []
    keeps = np.asarray(keeps)
    for i in range(n):
        vis = np.flatnonzero(keeps[:, i])
        if vis.size >= 2:
            px = np.asarray([pixels[v][i] for v in vis])
            tracks.append(Track(i, vis, px))
    return tracks


def build_scene(object_model, rig_spec, noise_model):
    """Object + rig + rendering, bundled with provenance."""
    points = make_object(object_model)
    cameras = make_rig(rig_spec)
    tracks = render_tracks(cameras, points, noise_model)
    views = [SceneView(compose_projection(c), c.image_width, c.image_height)
             for c in cameras]
    provenance = {"object": asdict(object_model), "rig": asdict(rig_spec),
                  "noise": asdict(noise_model)}
    return SyntheticScene(points, views, tracks, provenance)


def scene_to_json(scene):
    """Serialize a scene deterministically (sorted keys, fixed separators)."""
    data = {
        "views": [{"P": [float(v) for v in view.P.ravel()],
                   "width": int(view.width), "height": int(view.height)}
                  for view in scene.views],
        "tracks": [{"point_id": int(t.point_id),
                    "observations": [[int(vi), float(u), float(v)]
                                     for vi, (u, v) in zip(t.view_indices, t.pixels)]}
                   for t in scene.tracks],
        "ground_truth": None if scene.ground_truth is None else
                        [[float(c) for c in p] for p in scene.ground_truth],
        "provenance": scene.provenance,
    }
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def scene_from_json(text):
    data = json.loads(text)
    views = [SceneView(np.asarray(v["P"], dtype=float).reshape(3, 4),
                       int(v["width"]), int(v["height"]))
             for v in data["views"]]
    tracks = [Track(t["point_id"],
                    np.asarray([o[0] for o in t["observations"]]),
                    np.asarray([[o[1], o[2]] for o in t["observations"]]))
              for t in data["tracks"]]
    gt = data.get("ground_truth")
    ground_truth = None if gt is None else np.asarray(gt, dtype=float)
    return SyntheticScene(ground_truth, views, tracks, data.get("provenance"))


def save_scene(scene, path):
    Path(path).write_text(scene_to_json(scene))


def load_scene(path):
    return scene_from_json(Path(path).read_text())
