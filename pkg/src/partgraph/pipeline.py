"""End-to-end orchestration: targets -> keypoints -> limbs -> matching ->
assembly -> grouping, plus the runtime benchmark."""

import time
from dataclasses import dataclass, field

import numpy as np

from .dspf import compose_dspf
from .errors import InvalidInputError, PipelineStageError
from .fields import argmax_labels
from .grouping import group_pixels
from .keypoints import detect_keypoints
from .limbs import build_score_matrices
from .matching import (
    SolverConfig,
    assemble_poses,
    greedy_match,
    hungarian_solve,
    matching_weight,
    pgd_solve,
    round_assignment,
)

MATCHERS = ("hungarian", "greedy_sorted", "greedy_row", "pgd")


@dataclass
class PipelineConfig:
    matcher: str = "pgd"
    solver: SolverConfig = field(default_factory=SolverConfig)
    keypoint_threshold: float = 0.7
    r_nms_fraction: float = 0.25  # NMS radius as a fraction of the vote radius
    min_peak_score: float = 0.01

    def validate(self):
        if self.matcher not in MATCHERS:
            raise InvalidInputError(
                f"unknown matcher {self.matcher!r}; expected one of {MATCHERS}"
            )
        self.solver.validate()


@dataclass
class Diagnostics:
    counts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    lp_gaps: list = field(default_factory=list)  # per-limb ILP-vs-rounded-LP weight gap
    pgd_traces: list = field(default_factory=list)


def _stage(diag, name, fn):
    start = time.perf_counter()
    try:
        out = fn()
    except Exception as exc:  # tag errors with the failing stage
        raise PipelineStageError(name, exc) from exc
    diag.timings[name] = time.perf_counter() - start
    return out


def solve_assignments(matrices, cfg, diag=None):
    """Run the configured matcher over all per-limb score matrices."""
    assignments = []
    for mat in matrices:
        if cfg.matcher == "hungarian":
            y = hungarian_solve(mat.values, cfg.solver.score_gate)
        elif cfg.matcher == "greedy_sorted":
            y = greedy_match(mat.values, "score_sorted", cfg.solver.score_gate)
        elif cfg.matcher == "greedy_row":
            y = greedy_match(mat.values, "row_sequential", cfg.solver.score_gate)
        else:
            relaxed, trace = pgd_solve(mat.values, cfg.solver)
            y = round_assignment(
                relaxed, mat.values, cfg.solver.round_threshold, cfg.solver.score_gate
            )
            if diag is not None:
                exact = hungarian_solve(mat.values, cfg.solver.score_gate)
                diag.lp_gaps.append(
                    matching_weight(mat.values, exact) - matching_weight(mat.values, y)
                )
                diag.pgd_traces.append(trace)
        assignments.append(y)
    return assignments


def run_pipeline(targets, cfg=None):
    """Full bottom-up pass over rendered (or corrupted) scene targets.

    Returns (InstanceParsing, Diagnostics).
    """
    cfg = cfg or PipelineConfig()
    cfg.validate()
    diag = Diagnostics()

    dspf = _stage(diag, "compose_dspf", lambda: compose_dspf(targets.pyramid))
    labels = _stage(diag, "semantic_labels", lambda: argmax_labels(targets.semantic))
    r_nms = max(1.0, cfg.r_nms_fraction * targets.radius)

    def detect():
        return detect_keypoints(
            targets.heatmaps,
            targets.offsets,
            dspf,
            radius=targets.radius,
            threshold=cfg.keypoint_threshold,
            r_nms=r_nms,
            min_score=cfg.min_peak_score,
        )

    keypoint_set, hough_maps = _stage(diag, "keypoints", detect)
    diag.counts["keypoints"] = sum(keypoint_set.counts)

    skeleton = targets.skeleton
    matrices = _stage(
        diag,
        "limb_scores",
        lambda: build_score_matrices(targets.limb_maps, keypoint_set, skeleton),
    )
    assignments = _stage(diag, "matching", lambda: solve_assignments(matrices, cfg, diag))
    diag.counts["matches"] = int(sum(int(y.sum()) for y in assignments))
    poses = _stage(
        diag, "assembly", lambda: assemble_poses(assignments, keypoint_set, skeleton)
    )
    diag.counts["poses"] = len(poses)
    parsing = _stage(
        diag, "grouping", lambda: group_pixels(labels, dspf, poses, hough_maps)
    )
    return parsing, diag


def benchmark(scene_sizes, person_counts, repeats=10, seed=0, cfg=None):
    """Median pipeline wall time per (size, person count) configuration."""
    from .synth import generate_scene, render_targets

    if repeats < 10:
        raise InvalidInputError("repeats must be >= 10")
    rows = []
    for width, height in scene_sizes:
        for n in person_counts:
            scene = generate_scene(n, width, height, seed)
            targets = render_targets(scene)
            run_pipeline(targets, cfg)  # warm-up (JIT compilation, caches)
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                run_pipeline(targets, cfg)
                times.append(time.perf_counter() - start)
            rows.append(
                {
                    "width": width,
                    "height": height,
                    "persons": n,
                    "median_s": float(np.median(times)),
                    "min_s": float(min(times)),
                    "max_s": float(max(times)),
                }
            )
    return rows
