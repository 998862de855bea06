"""Multi-view triangulation toolkit: optimal two-view correction, n-view
refinement, DLT calibration, a synthetic scene simulator and a benchmark
harness.  Hot per-point kernels run on a compiled backend when the
extension is built, with a pure Python fallback (see backend_name)."""

from ._backend import available_backends, backend_name, set_backend
from .bench import (ExperimentReport, MethodAggregate, MethodMetrics,
                    TrialRow, dispersion, pairwise_disagreement, read_report,
                    run_experiment, run_sweep, write_report)
from .calibration import (CalibrationCorrespondence, CalibrationResult,
                          build_dlt_system, calibrate_dlt,
                          load_correspondences, parse_correspondences,
                          rms_reprojection)
from .config import (ExperimentConfig, TwoViewPolicy, angle_sweep_configs,
                     distance_sweep_configs, parse_config, parse_config_data,
                     resolution_sweep_configs)
from .errors import (CoincidentCenters, ConfigError, DegenerateGeometry,
                     DegeneratePoint, DomainError, EmptyInput,
                     EpipoleAtPoint, InitializationFailed,
                     InsufficientObservations, InsufficientPoints,
                     InvalidRotation, InvalidSpec, MvtriError,
                     NonFiniteResidual, ParseError, RankDeficient,
                     RankDeficientF, ValidationError)
from .geometry import (CameraIntrinsics, CameraView, camera_center,
                       compose_projection, fundamental_from_projections,
                       look_at_rotation, project, projected_depth)
from .numerics import (LMOutcome, LMProblem, LMSettings, Polynomial,
                       Termination, finite_difference_jacobian, lm_minimize,
                       real_roots, smallest_singular_vector)
from .scene import (NoiseModel, ObjectModel, RigSpec, SyntheticScene,
                    build_scene, load_scene, make_object, make_rig,
                    render_tracks, save_scene, scene_from_json,
                    scene_to_json)
from .triangulation import (CorrectedPair, Method, Track,
                            TriangulationResult, degree_conjecture,
                            geometric_error, hs_correct_pair,
                            triangulate_linear, triangulate_nview_lm,
                            triangulate_two_view_optimal)

__version__ = "0.1.0"

__all__ = [
    "available_backends", "backend_name", "set_backend",
    "ExperimentReport", "MethodAggregate", "MethodMetrics", "TrialRow",
    "dispersion", "pairwise_disagreement", "read_report", "run_experiment",
    "run_sweep", "write_report",
    "CalibrationCorrespondence", "CalibrationResult", "build_dlt_system",
    "calibrate_dlt", "load_correspondences", "parse_correspondences",
    "rms_reprojection",
    "ExperimentConfig", "TwoViewPolicy", "angle_sweep_configs",
    "distance_sweep_configs", "parse_config", "parse_config_data",
    "resolution_sweep_configs",
    "CoincidentCenters", "ConfigError", "DegenerateGeometry",
    "DegeneratePoint", "DomainError", "EmptyInput", "EpipoleAtPoint",
    "InitializationFailed", "InsufficientObservations", "InsufficientPoints",
    "InvalidRotation", "InvalidSpec", "MvtriError", "NonFiniteResidual",
    "ParseError", "RankDeficient", "RankDeficientF", "ValidationError",
    "CameraIntrinsics", "CameraView", "camera_center", "compose_projection",
    "fundamental_from_projections", "look_at_rotation", "project",
    "projected_depth",
    "LMOutcome", "LMProblem", "LMSettings", "Polynomial", "Termination",
    "finite_difference_jacobian", "lm_minimize", "real_roots",
    "smallest_singular_vector",
    "NoiseModel", "ObjectModel", "RigSpec", "SyntheticScene", "build_scene",
    "load_scene", "make_object", "make_rig", "render_tracks", "save_scene",
    "scene_from_json", "scene_to_json",
    "CorrectedPair", "Method", "Track", "TriangulationResult",
    "degree_conjecture", "geometric_error", "hs_correct_pair",
    "triangulate_linear", "triangulate_nview_lm",
    "triangulate_two_view_optimal",
    "__version__",
]
