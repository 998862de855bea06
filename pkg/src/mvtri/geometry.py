"""Pinhole camera model in homogeneous coordinates.

Conventions used throughout the package: scene points are 4-vectors
(x, y, z, w), image points 3-vectors (u, v, w), w last.  The camera matrix
is P = K*R*[I | -C] with K holding focal length in pixel units, so the
projected w component equals the depth of the point along the optical axis
(its sign answers the in-front-of-camera question).  Scene units are
arbitrary but must be consistent; the simulator uses centimetres.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentCenters, DegeneratePoint, InvalidRotation, RankDeficient

ROTATION_TOL = 1e-10
PROJECTED_W_TOL = 1e-14
BASELINE_TOL = 1e-12


def homo_point3(x, y, z, w=1.0):
    return np.array([x, y, z, w], dtype=float)


def homo_point2(u, v, w=1.0):
    return np.array([u, v, w], dtype=float)


def dehomogenize(p):
    """Divide out the final homogeneous component."""
    p = np.asarray(p, dtype=float)
    w = p[-1]
    if abs(w) < PROJECTED_W_TOL:
        raise DegeneratePoint("cannot dehomogenize a point at infinity")
    return p[:-1] / w


def pixel2(p):
    """Coerce a pixel given as (u, v) or homogeneous (u, v, w) to (u, v)."""
    p = np.asarray(p, dtype=float)
    if p.shape == (3,):
        return dehomogenize(p)
    if p.shape != (2,):
        raise ValueError("pixel must be a 2-vector or homogeneous 3-vector")
    return p


def _check_rotation(R):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise InvalidRotation("rotation must be 3x3")
    if np.linalg.norm(R.T @ R - np.eye(3)) >= ROTATION_TOL:
        raise InvalidRotation("matrix is not orthonormal within 1e-10")
    if np.linalg.det(R) <= 0.0:
        raise InvalidRotation("rotation must have determinant +1")
    return R


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CameraIntrinsics:
    """Focal length, pixel scales, principal point (pixels) and skew."""

    f: float
    sx: float = 1.0
    sy: float = 1.0
    ox: float = 0.0
    oy: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        if not (self.f > 0 and self.sx > 0 and self.sy > 0):
            raise ValueError("f, sx and sy must be positive")

    def matrix(self):
        return np.array([
            [self.sx * self.f, self.a, self.ox],
            [0.0, self.sy * self.f, self.oy],
            [0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True, eq=False)
class CameraView:
    """One camera: intrinsics, orientation, center and image bounds."""

    intrinsics: CameraIntrinsics
    rotation: np.ndarray
    center: np.ndarray
    image_width: int
    image_height: int

    def __post_init__(self):
        object.__setattr__(self, "rotation", _readonly(_check_rotation(self.rotation)))
        center = np.asarray(self.center, dtype=float)
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite 3-vector")
        object.__setattr__(self, "center", _readonly(center))
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image size must be positive")

    def projection_matrix(self):
        return compose_projection(self)


def compose_projection(view):
    """P = K*R*[I | -C] for a camera view."""
    R = _check_rotation(view.rotation)
    K = view.intrinsics.matrix()
    P = np.empty((3, 4))
    KR = K @ R
    P[:, :3] = KR
    P[:, 3] = -KR @ view.center
    return P


def project(view, point):
    """Project a homogeneous scene point; returns the homogeneous pixel.

    The sign of the returned w component tells whether the point lies in
    front of the camera (positive for points with positive w), since the
    third row of P recovers depth along the optical axis.
    """
    X = np.asarray(point, dtype=float)
    if X.shape != (4,):
        raise ValueError("scene point must be a homogeneous 4-vector")
    if not np.any(X):
        raise ValueError("homogeneous point must not be all zero")
    x = compose_projection(view) @ X
    if abs(x[2]) < PROJECTED_W_TOL:
        raise DegeneratePoint("point on the principal plane")
    return x


def projected_depth(view, point):
    """Depth of the point along the optical axis (positive = in front)."""
    X = np.asarray(point, dtype=float)
    return float(compose_projection(view)[2] @ X)


def camera_center(P):
    """Null vector of a rank-3 projection matrix, w-normalized when finite."""
    P = np.asarray(P, dtype=float)
    if P.shape != (3, 4):
        raise ValueError("projection matrix must be 3x4")
    _, s, vt = np.linalg.svd(P)
    if s[2] <= 1e-8 * s[0]:
        raise RankDeficient("projection matrix has rank below 3")
    C = vt[3]
    if abs(C[3]) > PROJECTED_W_TOL:
        C = C / C[3]
    return C


def _cross_matrix(v):
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def _pixel_row_scale(P):
    # Rough pixel-unit scale of a projection matrix (focal-length order).
    denom = np.linalg.norm(P[2, :3])
    if denom == 0.0:
        return 1.0
    scale = (np.linalg.norm(P[0, :3]) + np.linalg.norm(P[1, :3])) / (2.0 * denom)
    return scale if scale > 0.0 else 1.0


def fundamental_from_projections(P1, P2):
    """Fundamental matrix mapping image-1 points to image-2 epipolar lines.

    Built as [e2]_x * P2 * pinv(P1) with e2 the image of the first camera
    center.  Internally both matrices are rescaled to unit pixel scale so
    the result stays accurate for pixel-unit cameras; the returned F has
    unit Frobenius norm with its largest-magnitude entry positive.
    """
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    C1 = camera_center(P1)
    C2 = camera_center(P2)
    if abs(C1[3]) < PROJECTED_W_TOL or abs(C2[3]) < PROJECTED_W_TOL:
        raise ValueError("cameras at infinity are unsupported")
    if np.linalg.norm(C1[:3] - C2[:3]) <= BASELINE_TOL:
        raise CoincidentCenters("camera centers coincide; no epipolar geometry")
    T1 = np.diag([1.0 / _pixel_row_scale(P1), 1.0 / _pixel_row_scale(P1), 1.0])
    T2 = np.diag([1.0 / _pixel_row_scale(P2), 1.0 / _pixel_row_scale(P2), 1.0])
    P1n = T1 @ P1
    P2n = T2 @ P2
    e2 = P2n @ C1
    Fn = _cross_matrix(e2) @ P2n @ np.linalg.pinv(P1n)
    F = T2 @ Fn @ T1
    F = F / np.linalg.norm(F)
    i = np.unravel_index(np.argmax(np.abs(F)), F.shape)
    return -F if F[i] < 0 else F


def look_at_rotation(center, target, up=(0.0, 1.0, 0.0)):
    """Rotation whose +z axis points from center toward target.

    Rows are the camera right / up / forward directions in world
    coordinates.  Pixel y grows along the world up direction.
    """
    center = np.asarray(center, dtype=float)
    target = np.asarray(target, dtype=float)
    up = np.asarray(up, dtype=float)
    forward = target - center
    norm = np.linalg.norm(forward)
    if norm == 0.0:
        raise ValueError("camera center coincides with the look-at target")
    forward = forward / norm
    right = np.cross(up, forward)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-12:
        raise ValueError("up direction is parallel to the viewing direction")
    right = right / rnorm
    return np.stack([right, np.cross(forward, right), forward])
