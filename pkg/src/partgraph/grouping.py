"""Pixel-to-instance grouping via the DSPF.

Every foreground pixel projects through the DSPF and is assigned to the
pose whose joints it lands closest to, normalized by joint score,
instance score, and instance scale.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .fields import bilinear_sample

SIGMA_FLOOR = 1.0  # px; guards the scale division for degenerate poses


@dataclass
class InstanceParsing:
    part_labels: np.ndarray  # (H, W) int, 0 = background
    instance_ids: np.ndarray  # (H, W) int, 0 = none
    poses: list
    no_poses: bool = False  # foreground existed but no pose could claim it
    psi: np.ndarray = None  # winning affinity per pixel (diagnostics)


def _joint_arrays(poses, hough_maps):
    """Flatten pose joints into contiguous per-pose arrays with their
    affinity denominators (s_joint + s_pose) * max(sigma, floor)."""
    ju, jv, denom, start = [], [], [], [0]
    for pose in poses:
        sigma = max(pose.sigma, SIGMA_FLOOR)
        for kp in pose.joints.values():
            s_joint = bilinear_sample(hough_maps[kp.category], kp.u, kp.v)
            ju.append(kp.u)
            jv.append(kp.v)
            denom.append((s_joint + pose.score) * sigma)
        start.append(len(ju))
    return (
        np.array(ju, dtype=np.float64),
        np.array(jv, dtype=np.float64),
        np.array(denom, dtype=np.float64),
        np.array(start, dtype=np.int64),
    )


def instance_affinity(u, v, dspf, pose, hough_maps):
    """psi = min over pose joints of |u + D(u) - p| / ((s_joint + s_pose) * sigma)."""
    if not pose.joints:
        raise InvalidInputError("pose has no joints")
    proj_u = u + bilinear_sample(dspf[..., 0], u, v)
    proj_v = v + bilinear_sample(dspf[..., 1], u, v)
    sigma = max(pose.sigma, SIGMA_FLOOR)
    best = np.inf
    for kp in pose.joints.values():
        s_joint = bilinear_sample(hough_maps[kp.category], kp.u, kp.v)
        d = np.hypot(proj_u - kp.u, proj_v - kp.v)
        best = min(best, d / ((s_joint + pose.score) * sigma))
    return best


def group_pixels(labels, dspf, poses, hough_maps):
    """Assign each foreground pixel the pose index minimizing its affinity.

    Instance ids are 1-based in pose-list order; ties go to the lowest
    pose index; background stays 0.
    """
    labels = np.asarray(labels)
    dspf = np.asarray(dspf, dtype=np.float64)
    if labels.shape != dspf.shape[:2]:
        raise InvalidInputError(
            f"labels {labels.shape} and DSPF {dspf.shape[:2]} lattices differ"
        )
    h, w = labels.shape
    ids = np.zeros((h, w), dtype=np.int64)
    psi_map = np.full((h, w), np.inf)
    fg_v, fg_u = np.nonzero(labels > 0)
    if fg_u.size == 0:
        return InstanceParsing(labels.copy(), ids, list(poses), psi=psi_map)
    if not poses:
        return InstanceParsing(labels.copy(), ids, [], no_poses=True, psi=psi_map)
    ju, jv, denom, start = _joint_arrays(poses, hough_maps)
    pus = np.ascontiguousarray(fg_u + dspf[fg_v, fg_u, 0])
    pvs = np.ascontiguousarray(fg_v + dspf[fg_v, fg_u, 1])
    best, psi = kernels.group_argmin(pus, pvs, ju, jv, denom, start, len(poses))
    ids[fg_v, fg_u] = best + 1
    psi_map[fg_v, fg_u] = psi
    return InstanceParsing(labels.copy(), ids, list(poses), psi=psi_map)
