"""Bipartite matching solvers and pose assembly.

Per limb, a score matrix is matched three ways: exactly (Hungarian),
greedily (two heuristic variants), or via a differentiable projected
gradient ascent on the LP relaxation whose feasible-set projection is
computed with Dykstra cycles. The differentiable route records its
projection activations so the backward pass can replay them in reverse.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .errors import InvalidInputError
from .keypoints import Keypoint

# Perturbation steering equal-weight optima toward lexicographic (n, n')
# preference; far below the 1e-6 weight-comparison tolerance.
_TIE_EPS = 1e-11


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1.0  # gradient ascent step (scores pre-scaled to [0, 1])
    pgd_iters: int = 100
    dykstra_iters: int = 50
    tol: float = 1e-9
    round_threshold: float = 0.5  # tau_y
    score_gate: float = 0.05  # tau_a

    def validate(self):
        if self.alpha <= 0 or self.pgd_iters < 1 or self.dykstra_iters < 1:
            raise InvalidInputError("alpha must be > 0 and iteration counts >= 1")
        if not 0.0 < self.round_threshold < 1.0:
            raise InvalidInputError("round_threshold must lie in (0, 1)")


@dataclass
class PoseInstance:
    joints: dict  # category -> Keypoint
    score: float = 0.0  # mean Hough score of the joints
    sigma: float = 0.0  # sqrt of the tight joint bounding-box area

    def finalize(self):
        kps = list(self.joints.values())
        self.score = float(np.mean([kp.score for kp in kps]))
        us = [kp.u for kp in kps]
        vs = [kp.v for kp in kps]
        self.sigma = float(np.sqrt((max(us) - min(us)) * (max(vs) - min(vs))))
        return self


@dataclass
class PgdTrace:
    shape: tuple
    alpha: float
    dyk_traces: list  # per projection call: (row_mask, col_mask, clamp_mask, cycles)
    min_margin: float
    objective: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    converged: bool = True


def _values(a):
    vals = a.values if hasattr(a, "values") else a
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if vals.ndim != 2:
        raise InvalidInputError(f"score matrix must be 2-D, got shape {vals.shape}")
    if not np.isfinite(vals).all():
        raise InvalidInputError("score matrix contains non-finite entries")
    return vals


def matching_weight(a, y):
    """Total weight Tr(A Y^T) of an assignment."""
    return float(np.sum(_values(a) * np.asarray(y, dtype=np.float64)))


def hungarian_solve(a, score_gate=0.05):
    """Exact maximum-weight matching with pairs at or below the gate excluded.

    Equal-weight optima resolve to the lexicographically-first pair set.
    """
    vals = _values(a)
    n, m = vals.shape
    out = np.zeros((n, m), dtype=bool)
    if n == 0 or m == 0:
        return out
    weights = np.where(vals > score_gate, vals, 0.0)
    bonus = _TIE_EPS * (n * m - (np.arange(n)[:, None] * m + np.arange(m)[None, :]))
    rows, cols = linear_sum_assignment(weights + bonus, maximize=True)
    for r, c in zip(rows, cols):
        if vals[r, c] > score_gate:
            out[r, c] = True
    return out


def greedy_match(a, variant="score_sorted", score_gate=0.05):
    """Heuristic matching.

    score_sorted: accept pairs by descending score, skipping conflicts.
    row_sequential: each row in order takes its best still-free column.
    Both gate pairs at the score threshold; ties break lexicographically.
    """
    vals = _values(a)
    n, m = vals.shape
    out = np.zeros((n, m), dtype=bool)
    row_used = np.zeros(n, dtype=bool)
    col_used = np.zeros(m, dtype=bool)
    if variant == "score_sorted":
        order = sorted(
            ((i, j) for i in range(n) for j in range(m)),
            key=lambda ij: (-vals[ij[0], ij[1]], ij[0], ij[1]),
        )
        for i, j in order:
            if vals[i, j] <= score_gate:
                break
            if row_used[i] or col_used[j]:
                continue
            out[i, j] = True
            row_used[i] = True
            col_used[j] = True
    elif variant == "row_sequential":
        for i in range(n):
            best = -1
            best_val = score_gate
            for j in range(m):
                if not col_used[j] and vals[i, j] > best_val:
                    best = j
                    best_val = vals[i, j]
            if best >= 0:
                out[i, best] = True
                col_used[best] = True
    else:
        raise InvalidInputError(f"unknown greedy variant {variant!r}")
    return out


def dykstra_project(y, max_cycles=3000, tol=1e-9):
    """Euclidean projection onto {row sums <= 1, column sums <= 1, Y >= 0}."""
    vals = _values(y)
    if vals.size == 0:
        return vals.copy()
    out, _, _, _, _, _ = kernels.dykstra(vals, max_cycles, tol)
    return out


def pgd_solve(a, cfg=SolverConfig()):
    """Projected gradient ascent on the matching LP relaxation.

    Warm-starts from the projection of A, then iterates
    Y <- project(Y + alpha * A). Returns (Y, PgdTrace); the trace holds the
    recorded projection activations for :func:`matcher_backward`, plus the
    per-iterate objective and feasibility residual.
    """
    cfg.validate()
    vals = _values(a)
    n, m = vals.shape
    trace = PgdTrace(shape=(n, m), alpha=cfg.alpha, dyk_traces=[], min_margin=np.inf)
    if n == 0 or m == 0:
        return vals.copy(), trace

    y, row_masks, col_masks, clamp_masks, cycles, margins, objectives, feas, n_steps = (
        kernels.pgd_unrolled(vals, cfg.alpha, cfg.pgd_iters, cfg.dykstra_iters, cfg.tol)
    )
    trace.dyk_traces = [
        (row_masks[i], col_masks[i], clamp_masks[i], int(cycles[i]))
        for i in range(n_steps + 1)
    ]
    trace.min_margin = float(margins[: n_steps + 1].min())
    trace.objective = objectives[:n_steps].tolist()
    trace.feasibility = feas[:n_steps].tolist()
    if len(trace.objective) >= 2 and abs(trace.objective[-1] - trace.objective[-2]) > cfg.tol * 10:
        trace.converged = False
    return y, trace


def feasibility_residual(y):
    """Largest violation of {row sums <= 1, column sums <= 1, Y >= 0}."""
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        return 0.0
    return float(
        max(
            max(0.0, y.sum(axis=1).max() - 1.0) if y.shape[0] else 0.0,
            max(0.0, y.sum(axis=0).max() - 1.0) if y.shape[1] else 0.0,
            max(0.0, -y.min()),
        )
    )


def matcher_backward(trace, grad_y):
    """Gradient of the relaxed assignment w.r.t. the score matrix.

    Replays the recorded projection activation patterns in reverse through
    every gradient step and projection, including the warm start.
    """
    grad_y = np.ascontiguousarray(grad_y, dtype=np.float64)
    if grad_y.shape != trace.shape:
        raise InvalidInputError(
            f"gradient shape {grad_y.shape} does not match trace shape {trace.shape}"
        )
    if grad_y.size == 0:
        return grad_y.copy()
    grad_a = np.zeros(trace.shape)
    g = grad_y
    for rm, cm, km, cycles in reversed(trace.dyk_traces[1:]):
        g = kernels.dykstra_backward(g, rm, cm, km, cycles)
        grad_a += trace.alpha * g
    rm, cm, km, cycles = trace.dyk_traces[0]
    grad_a += kernels.dykstra_backward(g, rm, cm, km, cycles)
    return grad_a


def round_assignment(y, a, round_threshold=0.5, score_gate=0.05):
    """Binarize a relaxed assignment: accept entries by descending value
    under exclusivity, requiring y >= tau_y and a >= tau_a."""
    yv = np.ascontiguousarray(y, dtype=np.float64)
    vals = _values(a)
    if yv.shape != vals.shape:
        raise InvalidInputError(f"Y shape {yv.shape} does not match A shape {vals.shape}")
    n, m = yv.shape
    out = np.zeros((n, m), dtype=bool)
    row_used = np.zeros(n, dtype=bool)
    col_used = np.zeros(m, dtype=bool)
    order = sorted(
        ((i, j) for i in range(n) for j in range(m)),
        key=lambda ij: (-yv[ij[0], ij[1]], ij[0], ij[1]),
    )
    for i, j in order:
        if yv[i, j] < round_threshold:
            break
        if vals[i, j] < score_gate or row_used[i] or col_used[j]:
            continue
        out[i, j] = True
        row_used[i] = True
        col_used[j] = True
    return out


def assemble_poses(assignments, keypoints, skeleton):
    """Group matched keypoints into poses along the head-outward limb order.

    A match extends the pose owning one of its endpoints, or seeds a new
    pose; matches bridging two different poses are dropped. Leftover
    keypoints become single-joint poses only for the head category.
    """
    if len(assignments) != len(skeleton.limbs):
        raise InvalidInputError(
            f"expected {len(skeleton.limbs)} assignments, got {len(assignments)}"
        )
    poses = []
    owner = {}  # (category, index) -> pose index

    def claim(key, kp, pose_idx):
        owner[key] = pose_idx
        poses[pose_idx].joints[key[0]] = kp

    for limb_idx, (ka, kb) in enumerate(skeleton.limbs):
        y = assignments[limb_idx]
        kps_a = keypoints.by_category[ka]
        kps_b = keypoints.by_category[kb]
        for i, j in zip(*np.nonzero(y)):
            key_a = (ka, int(i))
            key_b = (kb, int(j))
            pa = owner.get(key_a)
            pb = owner.get(key_b)
            if pa is not None and pb is not None:
                continue  # same pose: redundant; different poses: conflict, drop
            if pa is not None:
                claim(key_b, kps_b[j], pa)
            elif pb is not None:
                claim(key_a, kps_a[i], pb)
            else:
                poses.append(PoseInstance(joints={}))
                claim(key_a, kps_a[i], len(poses) - 1)
                claim(key_b, kps_b[j], len(poses) - 1)
    for idx, kp in enumerate(keypoints.by_category[skeleton.head_category]):
        if (skeleton.head_category, idx) not in owner:
            poses.append(PoseInstance(joints={skeleton.head_category: kp}))
    return [p.finalize() for p in poses]
