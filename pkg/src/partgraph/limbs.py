"""Limb maps and limb-hypothesis scoring.

A limb map is an unnormalized Gaussian of the distance to the limb
segment; candidate limb hypotheses are scored by averaging samples of
that map along the hypothesized segment.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .fields import bilinear_sample_many

DEFAULT_SIGMA = 9.0  # limb Gaussian std, pixels
DEFAULT_N_SAMPLES = 10

# 16 joint categories, MPII-style ordering.
JOINT_NAMES = (
    "head_top", "upper_neck", "thorax",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "pelvis",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
)

# Tree limbs in head-outward traversal order.
DEFAULT_LIMBS = (
    (0, 1), (1, 2),
    (2, 3), (3, 4), (4, 5),
    (2, 6), (6, 7), (7, 8),
    (2, 9),
    (9, 10), (10, 11), (11, 12),
    (9, 13), (13, 14), (14, 15),
)

# Synthetic 6-part label scheme (0 is background).
PART_NAMES = ("background", "head", "torso", "upper_arm", "lower_arm", "upper_leg", "lower_leg")

# Part class rendered for each limb, aligned with DEFAULT_LIMBS.
DEFAULT_LIMB_PARTS = (1, 2, 2, 3, 4, 2, 3, 4, 2, 2, 5, 6, 2, 5, 6)


@dataclass(frozen=True)
class SkeletonSpec:
    n_categories: int = 16
    limbs: tuple = DEFAULT_LIMBS
    head_category: int = 0
    limb_parts: tuple = DEFAULT_LIMB_PARTS

    def validate(self):
        seen = set()
        touched = set()
        for a, b in self.limbs:
            if not (0 <= a < self.n_categories and 0 <= b < self.n_categories):
                raise InvalidInputError(f"limb ({a}, {b}) outside category range")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise InvalidInputError(f"duplicate limb {key}")
            seen.add(key)
            touched.update(key)
        if len(self.limbs) != self.n_categories - 1 or len(touched) != self.n_categories:
            raise InvalidInputError("limbs must form a spanning tree over the categories")


@dataclass
class ScoreMatrix:
    values: np.ndarray  # (N_k, N_k') in [0, 1]
    cat_a: int
    cat_b: int
    keypoints_a: list
    keypoints_b: list


def render_limb_map(endpoint_a, endpoint_b, sigma, lattice_shape):
    """Q(u) = exp(-d(u)^2 / (2 sigma^2)), d = distance to the segment.

    Coincident endpoints degrade to a point source.
    """
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    h, w = lattice_shape
    ax, ay = float(endpoint_a[0]), float(endpoint_a[1])
    bx, by = float(endpoint_b[0]), float(endpoint_b[1])
    d = kernels.segment_distance_field(ax, ay, bx, by, h, w)
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def score_limb_pair(limb_map, kp_a, kp_b, n_samples=DEFAULT_N_SAMPLES):
    """Mean of bilinear samples at n_samples points equally spaced on the
    segment between the two keypoints, endpoints included."""
    if n_samples < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n_samples}")
    t = np.linspace(0.0, 1.0, n_samples)
    us = kp_a.u + t * (kp_b.u - kp_a.u)
    vs = kp_a.v + t * (kp_b.v - kp_a.v)
    return float(np.mean(bilinear_sample_many(limb_map, us, vs)))


def build_score_matrices(limb_maps, keypoints, skeleton, n_samples=DEFAULT_N_SAMPLES):
    """One ScoreMatrix per skeleton limb; empty categories give 0-sized axes."""
    if len(limb_maps) != len(skeleton.limbs):
        raise InvalidInputError(
            f"expected {len(skeleton.limbs)} limb maps, got {len(limb_maps)}"
        )
    if n_samples < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n_samples}")
    t = np.linspace(0.0, 1.0, n_samples)
    matrices = []
    for limb_idx, (ka, kb) in enumerate(skeleton.limbs):
        kps_a = keypoints.by_category[ka]
        kps_b = keypoints.by_category[kb]
        n, m = len(kps_a), len(kps_b)
        q = limb_maps[limb_idx]
        if n and m:
            # all pair segments sampled in one batched call
            ua = np.array([kp.u for kp in kps_a])[:, None, None]
            va = np.array([kp.v for kp in kps_a])[:, None, None]
            ub = np.array([kp.u for kp in kps_b])[None, :, None]
            vb = np.array([kp.v for kp in kps_b])[None, :, None]
            us = (ua + t * (ub - ua)).ravel()
            vs = (va + t * (vb - va)).ravel()
            vals = bilinear_sample_many(q, us, vs).reshape(n, m, n_samples).mean(axis=2)
        else:
            vals = np.zeros((n, m))
        matrices.append(ScoreMatrix(vals, ka, kb, kps_a, kps_b))
    return matrices
