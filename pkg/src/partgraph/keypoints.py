"""Hough-voting keypoint localization.

Per category: heatmap mass is displaced by the offset field and splatted
bilinearly into a score map; peaks survive greedy NMS and a projection
evidence check against the DSPF.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidInputError

DEFAULT_RADIUS = 32.0  # vote disk radius, pixels
DEFAULT_NMS = DEFAULT_RADIUS / 4.0
DEFAULT_SCORE_GATE = 0.7
PEAK_PREFILTER = 0.01

_GRID_CACHE = {}


def _coord_grids(h, w):
    """(v, u) float coordinate grids, cached per lattice shape."""
    key = (h, w)
    if key not in _GRID_CACHE:
        _GRID_CACHE.clear()  # pipelines work on one lattice shape at a time
        _GRID_CACHE[key] = np.mgrid[0:h, 0:w].astype(np.float64)
    return _GRID_CACHE[key]


@dataclass(frozen=True)
class Keypoint:
    category: int
    u: float
    v: float
    score: float


@dataclass
class KeypointSet:
    by_category: list = field(default_factory=list)  # list of lists of Keypoint

    @property
    def counts(self):
        return [len(c) for c in self.by_category]

    def all_keypoints(self):
        return [kp for cat in self.by_category for kp in cat]


def hough_score_map(heatmap, offsets, radius):
    """H(u) = sum_{u'} M(u') / (pi R^2) splatted at u' + O(u').

    Each voter deposits its own heatmap mass onto the four neighbors of
    its vote target; votes landing outside the lattice are dropped.
    """
    heatmap = np.asarray(heatmap, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    if heatmap.shape != offsets.shape[:2]:
        raise InvalidInputError(
            f"heatmap {heatmap.shape} and offsets {offsets.shape[:2]} lattices differ"
        )
    if radius <= 0:
        raise InvalidInputError(f"vote radius must be positive, got {radius}")
    h, w = heatmap.shape
    vg, ug = _coord_grids(h, w)
    tus = np.ascontiguousarray((ug + offsets[..., 0]).ravel())
    tvs = np.ascontiguousarray((vg + offsets[..., 1]).ravel())
    mass = np.ascontiguousarray(heatmap.ravel() / (np.pi * radius * radius))
    return kernels.hough_splat(mass, tus, tvs, h, w)


def extract_peaks(score_map, min_score=PEAK_PREFILTER, r_nms=DEFAULT_NMS):
    """Greedy NMS: repeatedly take the global max >= min_score and suppress
    all cells strictly within r_nms. Ordered by descending score, ties by
    (v, u); survivors are pairwise >= r_nms apart."""
    if not 0.0 <= min_score <= 1.0:
        raise InvalidInputError(f"min_score must be in [0, 1], got {min_score}")
    if r_nms < 1.0:
        raise InvalidInputError(f"r_nms must be >= 1, got {r_nms}")
    score_map = np.asarray(score_map, dtype=np.float64)
    h, w = score_map.shape
    # Cells below min_score can never become peaks, so greedy suppression
    # only needs the candidate cells, in (-score, v, u) order — identical to
    # a repeated full-map argmax with row-major tie-breaking.
    vs, us = np.nonzero(score_map >= min_score)
    scores = score_map[vs, us]
    order = np.lexsort((us, vs, -scores))
    us, vs, scores = us[order], vs[order], scores[order]
    alive = np.ones(us.shape[0], dtype=bool)
    r2 = r_nms * r_nms
    peaks = []
    for i in range(us.shape[0]):
        if not alive[i]:
            continue
        u, v = int(us[i]), int(vs[i])
        peaks.append(((float(u), float(v)), float(scores[i])))
        alive &= (us - u) ** 2 + (vs - v) ** 2 >= r2
    return peaks


def select_candidates(peaks_per_category, dspf, threshold=DEFAULT_SCORE_GATE, r_nms=DEFAULT_NMS):
    """Keep peaks whose Hough score exceeds the gate and which are backed by
    at least one DSPF projection landing within r_nms."""
    dspf = np.asarray(dspf, dtype=np.float64)
    h, w = dspf.shape[:2]
    vg, ug = _coord_grids(h, w)
    pus = np.ascontiguousarray((ug + dspf[..., 0]).ravel())
    pvs = np.ascontiguousarray((vg + dspf[..., 1]).ravel())
    out = KeypointSet(by_category=[])
    for k, peaks in enumerate(peaks_per_category):
        kept = []
        for (u, v), score in peaks:
            if score <= threshold:
                continue
            if not kernels.any_projection_near(pus, pvs, u, v, r_nms):
                continue
            kept.append(Keypoint(category=k, u=u, v=v, score=min(max(score, 0.0), 1.0)))
        out.by_category.append(kept)
    return out


def detect_keypoints(heatmaps, offset_fields, dspf, radius=DEFAULT_RADIUS,
                     threshold=DEFAULT_SCORE_GATE, r_nms=DEFAULT_NMS,
                     min_score=PEAK_PREFILTER):
    """Full per-category detection: voting, NMS, DSPF-backed selection.

    Returns (KeypointSet, list of Hough score maps).
    """
    hough_maps = [hough_score_map(m, o, radius) for m, o in zip(heatmaps, offset_fields)]
    peaks = [extract_peaks(hm, min_score, r_nms) for hm in hough_maps]
    kps = select_candidates(peaks, dspf, threshold, r_nms)
    return kps, hough_maps
