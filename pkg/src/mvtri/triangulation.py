"""Point triangulation from two or more views.

Three methods are provided: a homogeneous linear solve over all
observations, the optimal two-view method (Hartley-Sturm correction of the
measured pair followed by the linear solve, which then intersects exactly),
and n-view Levenberg-Marquardt refinement of the linear estimate.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend, _pykernels
from .errors import (DomainError, EpipoleAtPoint, InitializationFailed,
                     InsufficientObservations, RankDeficientF)
from .geometry import fundamental_from_projections, pixel2
from .numerics import LMSettings, Termination

POINT_AT_INFINITY_TOL = 1e-12


class Method(Enum):
    LINEAR = "linear"
    TWO_VIEW_OPTIMAL = "two-opt"
    NVIEW_LM = "nview-lm"


@dataclass(frozen=True, eq=False)
class Track:
    """Observations of one scene point across views.

    view_indices must be strictly increasing; pixels is the matching
    (m, 2) array of measurements.  Two observations are required for
    triangulation.
    """

    point_id: int
    view_indices: np.ndarray
    pixels: np.ndarray

    def __post_init__(self):
        vi = np.asarray(self.view_indices, dtype=int)
        px = np.asarray(self.pixels, dtype=float)
        if vi.ndim != 1 or px.shape != (vi.size, 2):
            raise ValueError("need matching view indices and (m, 2) pixels")
        if vi.size == 0:
            raise ValueError("a track needs at least one observation")
        if np.any(np.diff(vi) <= 0):
            raise ValueError("view indices must be strictly increasing")
        object.__setattr__(self, "view_indices", vi)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_observations(cls, point_id, observations):
        obs = sorted(observations, key=lambda o: o[0])
        vi = [o[0] for o in obs]
        px = [[o[1], o[2]] for o in obs]
        return cls(point_id, np.asarray(vi), np.asarray(px))

    def __len__(self):
        return int(self.view_indices.size)


@dataclass(frozen=True, eq=False)
class TriangulationResult:
    """Solver output for one point.

    point is the homogeneous solution with w = 1, or None when the solve
    failed (converged is False in that case and detail says why).
    geometric_error is the sum of squared per-view pixel residuals.
    """

    point: np.ndarray | None
    method: Method
    per_view_residual: np.ndarray
    geometric_error: float
    converged: bool
    iterations: int = 0
    detail: str = ""

    @property
    def xyz(self):
        return None if self.point is None else self.point[:3]


@dataclass(frozen=True, eq=False)
class CorrectedPair:
    """Optimally corrected pixel pair plus solver diagnostics.

    t_star is the selected epipolar-pencil parameter in the internal
    normalized frame (inf when the asymptote wins); cost is the summed
    squared pixel displacement of the correction.
    """

    x1: np.ndarray
    x2: np.ndarray
    t_star: float
    cost: float


def _as_projections(views):
    Ps = np.asarray(views, dtype=float)
    if Ps.ndim != 3 or Ps.shape[1:] != (3, 4):
        raise ValueError("views must be a sequence of 3x4 projection matrices")
    return Ps


def _gather(views, track):
    Ps = _as_projections(views)
    if len(track) < 2:
        raise InsufficientObservations("triangulation needs at least two views")
    if track.view_indices[-1] >= len(Ps):
        raise ValueError("track references a view that does not exist")
    return Ps[track.view_indices], track.pixels


def _residuals(Ps, obs, X):
    proj = Ps @ X
    w = proj[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = proj[:, :2] / w[:, None] - obs
    r = np.sqrt(np.sum(diff * diff, axis=1))
    return r, float(np.sum(r * r))


def _failure(method, detail):
    return TriangulationResult(None, method, np.empty(0), float("inf"), False,
                               detail=detail)


def _linear_result(Ps, obs, method, detail=""):
    X = _backend.kernels.triangulate_point_linear(Ps, obs)
    if abs(X[3]) < POINT_AT_INFINITY_TOL:
        return _failure(method, "point at infinity")
    X = X / X[3]
    residuals, err = _residuals(Ps, obs, X)
    return TriangulationResult(X, method, residuals, err, True, detail=detail)


def triangulate_linear(views, track):
    """Linear least-squares triangulation over all observations of a track.

    Solves the stacked homogeneous system (rows u*P3 - P1, v*P3 - P2, unit
    normalized per row) by SVD.  A solution with |w| < 1e-12 is reported
    as a non-converged result, not an exception.
    """
    Ps, obs = _gather(views, track)
    return _linear_result(Ps, obs, Method.LINEAR)


def hs_correct_pair(F, x1, x2):
    """Correct a measured pixel pair to satisfy x2' F x1 = 0 optimally.

    Implements the polynomial two-view correction: both points are moved
    the minimum summed squared pixel distance onto a corresponding pair of
    epipolar lines, found by minimizing the distance cost over the pencil
    parameter (degree-6 stationarity polynomial plus the asymptote).
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3):
        raise ValueError("F must be 3x3")
    p1 = pixel2(x1)
    p2 = pixel2(x2)
    status, x1c, x2c, t_star, cost = _backend.kernels.hs_correct(F, p1, p2)
    if status == _pykernels.HS_EPIPOLE_AT_POINT:
        raise EpipoleAtPoint("an epipole coincides with a measured point")
    if status == _pykernels.HS_RANK_DEFICIENT:
        raise RankDeficientF("fundamental matrix has rank below 2")
    return CorrectedPair(np.asarray(x1c), np.asarray(x2c), t_star, cost)


def triangulate_two_view_optimal(P1, P2, x1, x2, F=None):
    """Optimal two-view triangulation of one measured pair.

    The pair is corrected onto consistent epipolar lines first, so the
    subsequent linear solve intersects exactly; residuals are reported
    against the original measurements.  Pass a precomputed F to skip the
    epipolar setup when triangulating many pairs of the same two views.
    """
    P1 = np.asarray(P1, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    if F is None:
        F = fundamental_from_projections(P1, P2)
    pair = hs_correct_pair(F, x1, x2)
    Ps = np.stack([P1, P2])
    obs = np.stack([pixel2(x1), pixel2(x2)])
    corrected = np.stack([pair.x1, pair.x2])
    X = _backend.kernels.triangulate_point_linear(Ps, corrected)
    if abs(X[3]) < POINT_AT_INFINITY_TOL:
        return _failure(Method.TWO_VIEW_OPTIMAL, "point at infinity")
    X = X / X[3]
    residuals, err = _residuals(Ps, obs, X)
    return TriangulationResult(X, Method.TWO_VIEW_OPTIMAL, residuals, err, True)


def _ray(P, pixel):
    # Center and direction of the viewing ray of a pixel.
    M = P[:, :3]
    center = -np.linalg.solve(M, P[:, 3])
    direction = np.linalg.solve(M, np.array([pixel[0], pixel[1], 1.0]))
    return center, direction


def _midpoint_init(Ps, obs):
    # Midpoint of the closest-approach segment of the first two rays.
    try:
        c1, d1 = _ray(Ps[0], obs[0])
        c2, d2 = _ray(Ps[1], obs[1])
    except np.linalg.LinAlgError:
        return None
    a, b, c = d1 @ d1, d1 @ d2, d2 @ d2
    denom = a * c - b * b
    if abs(denom) <= 1e-12 * max(a * c, 1e-300):
        return None
    rhs = c2 - c1
    s = (c * (d1 @ rhs) - b * (d2 @ rhs)) / denom
    t = (b * (d1 @ rhs) - a * (d2 @ rhs)) / denom
    mid = 0.5 * (c1 + s * d1 + c2 + t * d2)
    return mid if np.all(np.isfinite(mid)) else None


_TERM_BY_CODE = {
    _pykernels.LM_GRADIENT_SMALL: Termination.GRADIENT_SMALL,
    _pykernels.LM_STEP_SMALL: Termination.STEP_SMALL,
    _pykernels.LM_MAX_ITERATIONS: Termination.MAX_ITERATIONS,
}


def triangulate_nview_lm(views, track, settings=None):
    """Refine the linear estimate by minimizing reprojection error.

    Initialized from the linear solve (or, when that degenerates, the
    midpoint of the first two viewing rays).  converged reflects the
    refinement termination: gradient or step convergence, not the
    iteration cap.
    """
    Ps, obs = _gather(views, track)
    s = settings if settings is not None else LMSettings()
    X = _backend.kernels.triangulate_point_linear(Ps, obs)
    if abs(X[3]) >= POINT_AT_INFINITY_TOL:
        x0 = X[:3] / X[3]
    else:
        x0 = _midpoint_init(Ps, obs)
        if x0 is None:
            raise InitializationFailed("linear stage degenerate and rays near parallel")
    x, cost, iterations, code = _backend.kernels.refine_point_lm(
        Ps, obs, np.asarray(x0, dtype=float), s.max_iterations,
        s.gradient_tolerance, s.step_tolerance, s.initial_damping)
    X = np.append(x, 1.0)
    residuals, err = _residuals(Ps, obs, X)
    term = _TERM_BY_CODE[code]
    return TriangulationResult(X, Method.NVIEW_LM, residuals, err,
                               term is not Termination.MAX_ITERATIONS,
                               iterations=iterations, detail=term.value)


def geometric_error(views, point, track):
    """Sum of squared pixel distances between observations and projections.

    Unlike the solvers, accepts single-observation tracks (the one-view
    summand is well defined).
    """
    Ps = _as_projections(views)
    if track.view_indices[-1] >= len(Ps):
        raise ValueError("track references a view that does not exist")
    Ps, obs = Ps[track.view_indices], track.pixels
    X = np.asarray(point, dtype=float)
    if X.shape == (3,):
        X = np.append(X, 1.0)
    _, err = _residuals(Ps, obs, X)
    return err


def degree_conjecture(n):
    """Conjectured degree of the optimal n-view stationarity polynomial.

    Evaluates (9*n^3 - 21*n^2 + 16*n - 8) / 2 exactly; 6 for n = 2,
    47 for n = 3.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise DomainError("n must be an integer")
    if n < 2:
        raise DomainError("n must be at least 2")
    return (9 * n**3 - 21 * n**2 + 16 * n - 8) // 2
