"""Direct linear calibration of a projection matrix from 3D-2D pairs."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometry, DegeneratePoint, InsufficientPoints
from .geometry import PROJECTED_W_TOL
from .numerics import smallest_singular_vector

MIN_CORRESPONDENCES = 6
COPLANARITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CalibrationCorrespondence:
    """One known scene point and its measured pixel."""

    world: np.ndarray  # (3,)
    pixel: np.ndarray  # (2,)

    def __post_init__(self):
        world = np.asarray(self.world, dtype=float)
        pixel = np.asarray(self.pixel, dtype=float)
        if world.shape != (3,) or pixel.shape != (2,):
            raise ValueError("expected a 3-vector world point and 2-vector pixel")
        object.__setattr__(self, "world", world)
        object.__setattr__(self, "pixel", pixel)


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    P: np.ndarray              # (3, 4), unit Frobenius norm, sign-fixed
    algebraic_residual: float  # ||A p|| on the raw (unnormalized) system
    rms_reprojection: float    # pixels


def _world_pixel_arrays(correspondences):
    world = np.asarray([c.world for c in correspondences], dtype=float)
    pixel = np.asarray([c.pixel for c in correspondences], dtype=float)
    return world, pixel


def build_dlt_system(correspondences):
    """Stacked 2N x 12 homogeneous system in the row-major entries of P.

    Row 2i is (X, 0, 0, 0, 0, -u*X) and row 2i+1 is (0^4, X, -v*X) with X
    the homogeneous world point, so A p = 0 for a consistent P.
    """
    world, pixel = _world_pixel_arrays(correspondences)
    n = len(world)
    X = np.hstack([world, np.ones((n, 1))])
    A = np.zeros((2 * n, 12))
    A[0::2, 0:4] = X
    A[0::2, 8:12] = -pixel[:, 0:1] * X
    A[1::2, 4:8] = X
    A[1::2, 8:12] = -pixel[:, 1:2] * X
    return A


def _normalizing_similarity(points):
    # Translate the centroid to the origin and scale the mean distance to
    # sqrt(dimension).
    d = points.shape[1]
    centroid = points.mean(axis=0)
    dist = np.linalg.norm(points - centroid, axis=1).mean()
    scale = np.sqrt(d) / dist if dist > 0 else 1.0
    T = np.eye(d + 1)
    T[:d, :d] *= scale
    T[:d, d] = -scale * centroid
    return T


def calibrate_dlt(correspondences):
    """Estimate P from at least six non-coplanar correspondences.

    Both point sets are normalized (centroid to origin, mean distance
    sqrt(2) pixels / sqrt(3) world units) before the homogeneous solve;
    the result is denormalized and scaled to a unit coefficient vector
    with its largest-magnitude entry positive.
    """
    corrs = list(correspondences)
    if len(corrs) < MIN_CORRESPONDENCES:
        raise InsufficientPoints(f"need at least {MIN_CORRESPONDENCES} correspondences")
    world, pixel = _world_pixel_arrays(corrs)

    centered = world - world.mean(axis=0)
    variances = np.linalg.svd(centered, compute_uv=False) ** 2
    if variances[2] <= COPLANARITY_TOL * variances[0]:
        raise DegenerateGeometry("world points are coplanar or collapsed")

    U = _normalizing_similarity(world)
    T = _normalizing_similarity(pixel)
    world_n = world * U[0, 0] + U[:3, 3]
    pixel_n = pixel * T[0, 0] + T[:2, 2]
    normalized = [CalibrationCorrespondence(w, p) for w, p in zip(world_n, pixel_n)]
    p_n = smallest_singular_vector(build_dlt_system(normalized))
    P = np.linalg.inv(T) @ p_n.reshape(3, 4) @ U

    p = P.ravel()
    p = p / np.linalg.norm(p)
    i = int(np.argmax(np.abs(p)))
    if p[i] < 0:
        p = -p
    P = p.reshape(3, 4)

    residual = float(np.linalg.norm(build_dlt_system(corrs) @ p))
    return CalibrationResult(P, residual, rms_reprojection(P, corrs))


def rms_reprojection(P, correspondences):
    """Root-mean-square pixel distance between measured and projected."""
    P = np.asarray(P, dtype=float)
    world, pixel = _world_pixel_arrays(list(correspondences))
    X = np.hstack([world, np.ones((len(world), 1))])
    proj = X @ P.T
    w = proj[:, 2]
    if np.any(np.abs(w) < PROJECTED_W_TOL):
        raise DegeneratePoint("a correspondence projects onto the principal plane")
    diff = proj[:, :2] / w[:, None] - pixel
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=1))))


def parse_correspondences(text):
    """Parse the plain-text format: one 'X Y Z u v' line per pair.

    Blank lines and lines starting with # are ignored.
    """
    corrs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 5 values, got {len(parts)}")
        try:
            values = [float(v) for v in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric value") from None
        corrs.append(CalibrationCorrespondence(values[:3], values[3:]))
    return corrs


def load_correspondences(path):
    return parse_correspondences(Path(path).read_text())
