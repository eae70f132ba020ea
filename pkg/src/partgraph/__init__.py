"""Bottom-up multi-person part parsing on dense 2-D lattices.

The package composes displacement pyramids into root-pointing offset
fields, detects joint candidates by Hough voting, scores and matches limb
hypotheses with a differentiable assignment solver, assembles skeletons,
and groups pixels into per-instance part masks — with synthetic scene
generation, evaluation metrics, and loss primitives alongside.
"""

from .dspf import DspfPyramid, compose_dspf, decompose_dspf, warp_backward, warp_with_flow
from .errors import (
    InvalidInputError,
    PipelineStageError,
    PlacementError,
    SceneLoadError,
)
from .fields import read_pgf, write_pgf
from .grouping import InstanceParsing, group_pixels
from .keypoints import Keypoint, KeypointSet, detect_keypoints
from .limbs import SkeletonSpec, build_score_matrices
from .matching import (
    PoseInstance,
    SolverConfig,
    assemble_poses,
    greedy_match,
    hungarian_solve,
    matcher_backward,
    pgd_solve,
    round_assignment,
)
from .metrics import EvalReport
from .pipeline import MATCHERS, Diagnostics, PipelineConfig, benchmark, run_pipeline
from .synth import (
    NoiseSpec,
    Scene,
    SceneTargets,
    generate_scene,
    load_scene,
    perturb_targets,
    render_targets,
    save_scene,
)

__version__ = "0.1.0"

__all__ = [
    "DspfPyramid",
    "compose_dspf",
    "decompose_dspf",
    "warp_with_flow",
    "warp_backward",
    "InvalidInputError",
    "PlacementError",
    "SceneLoadError",
    "PipelineStageError",
    "read_pgf",
    "write_pgf",
    "InstanceParsing",
    "group_pixels",
    "Keypoint",
    "KeypointSet",
    "detect_keypoints",
    "SkeletonSpec",
    "build_score_matrices",
    "SolverConfig",
    "PoseInstance",
    "hungarian_solve",
    "greedy_match",
    "pgd_solve",
    "matcher_backward",
    "round_assignment",
    "assemble_poses",
    "EvalReport",
    "MATCHERS",
    "PipelineConfig",
    "Diagnostics",
    "run_pipeline",
    "benchmark",
    "Scene",
    "SceneTargets",
    "NoiseSpec",
    "generate_scene",
    "render_targets",
    "perturb_targets",
    "save_scene",
    "load_scene",
    "__version__",
]
