"""Micro-benchmark of the pure NumPy kernels against the compiled extension.

Runs the four hot kernels (polynomial real-root extraction, two-view pair
correction, linear triangulation, LM refinement) on identical seeded
workloads under every available backend and prints microseconds per call
plus the speedup of the compiled path.  Optionally writes the raw numbers
to CSV.

Usage:
    python benchmarks/backend_bench.py
    python benchmarks/backend_bench.py --calls 2000 --repeats 5 --out bench.csv
"""
import argparse
import csv
import time

import numpy as np

from mvtri import _backend
from mvtri.geometry import (
    CameraIntrinsics,
    CameraView,
    compose_projection,
    fundamental_from_projections,
    look_at_rotation,
)

KERNELS = ("poly_real_roots", "hs_correct", "triangulate_point_linear",
           "refine_point_lm")


def make_view(center, target=(0.0, 0.0, 0.0), focal_px=800.0):
    center = np.asarray(center, dtype=float)
    R = look_at_rotation(center, np.asarray(target, dtype=float))
    K = CameraIntrinsics(f=focal_px, ox=640.0, oy=480.0)
    return CameraView(K, R, center, 1280, 960)


def build_workloads(calls, seed):
    """Precompute per-call inputs so timing loops only touch the kernels."""
    rng = np.random.default_rng(seed)

    views = [
        make_view((-4.0, 0.5, 20.0)),
        make_view((0.0, -0.5, 21.0)),
        make_view((4.5, 0.3, 20.5)),
    ]
    Ps = np.stack([compose_projection(v) for v in views])
    F = fundamental_from_projections(Ps[0], Ps[1])

    pts = rng.uniform((-3, -3, -2), (3, 3, 2), size=(calls, 3))
    Xh = np.hstack([pts, np.ones((calls, 1))])
    pix = np.empty((calls, len(views), 2))
    for j in range(len(views)):
        proj = Xh @ Ps[j].T
        pix[:, j] = proj[:, :2] / proj[:, 2:3]
    pix += rng.normal(0.0, 0.8, size=pix.shape)

    polys = rng.normal(size=(calls, 7))
    polys[np.abs(polys[:, 6]) < 0.1, 6] = 1.0

    return {
        "poly_real_roots": [(polys[i],) for i in range(calls)],
        "hs_correct": [(F, pix[i, 0], pix[i, 1]) for i in range(calls)],
        "triangulate_point_linear": [(Ps, pix[i]) for i in range(calls)],
        "refine_point_lm": [
            (Ps, pix[i], pts[i] + rng.normal(0.0, 0.05, 3), 100, 1e-10, 1e-12, 1e-3)
            for i in range(calls)
        ],
    }


def time_kernel(kernels, name, workload, repeats):
    """Best-of-repeats microseconds per call for one kernel function."""
    fn = getattr(kernels, name)
    for args in workload[:10]:
        fn(*args)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in workload:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return 1e6 * best / len(workload)


def main(args):
    backends = _backend.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{args.calls} calls per kernel, best of {args.repeats} repeats")

    workloads = build_workloads(args.calls, args.seed)
    results = {}
    active = _backend.backend_name()
    try:
        for backend in backends:
            _backend.set_backend(backend)
            k = _backend.kernels
            for name in KERNELS:
                results[(name, backend)] = time_kernel(k, name,
                                                       workloads[name],
                                                       args.repeats)
    finally:
        _backend.set_backend(active)

    print()
    header = f"{'kernel':<26}" + "".join(f"{b + ' (us)':>16}" for b in backends)
    if "compiled" in backends and "python" in backends:
        header += f"{'speedup':>10}"
    print(header)
    for name in KERNELS:
        row = f"{name:<26}"
        for backend in backends:
            row += f"{results[(name, backend)]:>16.2f}"
        if "compiled" in backends and "python" in backends:
            ratio = results[(name, "python")] / results[(name, "compiled")]
            row += f"{ratio:>9.1f}x"
        print(row)

    if args.out:
        with open(args.out, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["kernel", "backend", "us_per_call"])
            for name in KERNELS:
                for backend in backends:
                    writer.writerow([name, backend,
                                     f"{results[(name, backend)]:.4f}"])
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--calls", type=int, default=1000,
                        help="workload size per kernel")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats, best is kept")
    parser.add_argument("--seed", type=int, default=20260819,
                        help="workload RNG seed")
    parser.add_argument("--out", default=None, help="optional CSV output path")
    main(parser.parse_args())
