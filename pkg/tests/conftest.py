import numpy as np
import pytest

from mvtri import _backend
from mvtri.geometry import (CameraIntrinsics, CameraView, compose_projection,
                            look_at_rotation, project)


@pytest.fixture(params=["python", "compiled"])
def backend(request):
    """Run the test once per available kernel backend."""
    name = request.param
    if name not in _backend.available_backends():
        pytest.skip("compiled backend not built")
    previous = _backend.backend_name()
    _backend.set_backend(name)
    yield name
    _backend.set_backend(previous)


def make_view(center, target=(0.0, 0.0, 0.0), focal_px=800.0,
              width=1280, height=960):
    center = np.asarray(center, dtype=float)
    K = CameraIntrinsics(f=1.0, sx=focal_px, sy=focal_px,
                         ox=width / 2.0, oy=height / 2.0)
    R = look_at_rotation(center, np.asarray(target, dtype=float))
    return CameraView(K, R, center, width, height)


def two_view_pair(angle_deg=12.0, distance=21.0):
    """Two cameras on a circle around the origin, both aimed at it."""
    t = np.radians(angle_deg)
    c1 = np.array([0.0, 0.0, -distance])
    c2 = distance * np.array([np.sin(t), 0.0, -np.cos(t)])
    return make_view(c1), make_view(c2)


def three_view_rig(left_deg=9.46, right_deg=13.18, distance=21.0):
    views = []
    for az in (-np.radians(left_deg), 0.0, np.radians(right_deg)):
        c = distance * np.array([np.sin(az), 0.0, -np.cos(az)])
        views.append(make_view(c))
    return views


def pixel_of(view, X):
    """Dehomogenized pixel of a finite scene point (3-vector)."""
    uvw = project(view, np.append(np.asarray(X, dtype=float), 1.0))
    return uvw[:2] / uvw[2]


def projections(views):
    return [compose_projection(v) for v in views]
