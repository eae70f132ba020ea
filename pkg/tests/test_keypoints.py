import numpy as np
import pytest

from partgraph.errors import InvalidInputError
from partgraph.keypoints import (
    Keypoint,
    detect_keypoints,
    extract_peaks,
    hough_score_map,
    select_candidates,
)


def _single_voter_setup(h=32, w=32, target=(10.0, 12.0), radius=4.0):
    heatmap = np.zeros((h, w))
    offsets = np.zeros((h, w, 2))
    heatmap[5, 5] = 1.0
    offsets[5, 5] = (target[0] - 5.0, target[1] - 5.0)
    return heatmap, offsets, radius


def test_hough_single_integer_vote_lands_whole_mass():
    heatmap, offsets, radius = _single_voter_setup()
    score = hough_score_map(heatmap, offsets, radius)
    expected = 1.0 / (np.pi * radius * radius)
    assert score[12, 10] == pytest.approx(expected)
    assert score.sum() == pytest.approx(expected)


def test_hough_fractional_vote_splits_bilinearly():
    h, w = 16, 16
    heatmap = np.zeros((h, w))
    offsets = np.zeros((h, w, 2))
    heatmap[2, 2] = 1.0
    offsets[2, 2] = (1.5, 2.25)  # vote target (3.5, 4.25)
    score = hough_score_map(heatmap, offsets, 2.0)
    norm = 1.0 / (np.pi * 4.0)
    assert score[4, 3] == pytest.approx(0.5 * 0.75 * norm)
    assert score[4, 4] == pytest.approx(0.5 * 0.75 * norm)
    assert score[5, 3] == pytest.approx(0.5 * 0.25 * norm)
    assert score[5, 4] == pytest.approx(0.5 * 0.25 * norm)
    assert score.sum() == pytest.approx(norm)


def test_hough_out_of_lattice_votes_dropped():
    heatmap, offsets, radius = _single_voter_setup(target=(-10.0, -10.0))
    score = hough_score_map(heatmap, offsets, radius)
    assert score.sum() == 0.0


def test_hough_validates_inputs():
    with pytest.raises(InvalidInputError):
        hough_score_map(np.zeros((4, 4)), np.zeros((5, 4, 2)), 2.0)
    with pytest.raises(InvalidInputError):
        hough_score_map(np.zeros((4, 4)), np.zeros((4, 4, 2)), 0.0)


def test_extract_peaks_orders_and_suppresses():
    score = np.zeros((20, 20))
    score[5, 5] = 0.9
    score[5, 7] = 0.8  # within r_nms of the first peak: suppressed
    score[15, 15] = 0.7
    peaks = extract_peaks(score, min_score=0.1, r_nms=4.0)
    assert peaks == [((5.0, 5.0), 0.9), ((15.0, 15.0), 0.7)]


def test_extract_peaks_tie_break_row_major():
    score = np.zeros((10, 10))
    score[3, 8] = 0.5
    score[3, 2] = 0.5
    score[1, 9] = 0.5
    peaks = extract_peaks(score, min_score=0.1, r_nms=2.0)
    assert [p[0] for p in peaks] == [(9.0, 1.0), (2.0, 3.0), (8.0, 3.0)]


def test_extract_peaks_pairwise_separation():
    rng = np.random.default_rng(4)
    score = rng.uniform(0, 1, size=(40, 40))
    r = 5.0
    peaks = extract_peaks(score, min_score=0.2, r_nms=r)
    pts = np.array([p[0] for p in peaks])
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert np.hypot(*(pts[i] - pts[j])) >= r


def test_select_candidates_requires_projection_evidence():
    dspf = np.zeros((16, 16, 2))  # every pixel projects onto itself
    peaks = [[((5.0, 5.0), 0.9)]]
    kept = select_candidates(peaks, dspf, threshold=0.5, r_nms=2.0)
    assert len(kept.by_category[0]) == 1
    kp = kept.by_category[0][0]
    assert isinstance(kp, Keypoint)
    assert (kp.category, kp.u, kp.v) == (0, 5.0, 5.0)

    # push all projections far from the peak: the peak loses its backing
    far = np.full((16, 16, 2), 100.0)
    kept = select_candidates(peaks, far, threshold=0.5, r_nms=2.0)
    assert kept.by_category[0] == []


def test_select_candidates_gates_on_score():
    dspf = np.zeros((16, 16, 2))
    peaks = [[((5.0, 5.0), 0.4)]]
    kept = select_candidates(peaks, dspf, threshold=0.5, r_nms=2.0)
    assert kept.by_category[0] == []


def test_detect_keypoints_recovers_planted_joints():
    h = w = 64
    radius = 8.0
    joints = [(20.0, 20.0), (44.0, 40.0)]
    vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
    heatmap = np.zeros((h, w))
    offsets = np.zeros((h, w, 2))
    dspf = np.zeros((h, w, 2))
    d2 = np.stack([(ug - u) ** 2 + (vg - v) ** 2 for u, v in joints])
    nearest = np.argmin(d2, axis=0)
    for i, (u, v) in enumerate(joints):
        disk = (d2[i] < radius * radius) & (nearest == i)
        heatmap[disk] = 1.0
        offsets[disk, 0] = u - ug[disk]
        offsets[disk, 1] = v - vg[disk]
        dspf[nearest == i, 0] = u - ug[nearest == i]
        dspf[nearest == i, 1] = v - vg[nearest == i]
    kps, hough_maps = detect_keypoints(
        [heatmap], [offsets], dspf, radius=radius, threshold=0.5, r_nms=4.0
    )
    assert len(hough_maps) == 1
    found = sorted((kp.u, kp.v) for kp in kps.by_category[0])
    assert len(found) == 2
    for (fu, fv), (ju, jv) in zip(found, joints):
        assert abs(fu - ju) <= 1.0 and abs(fv - jv) <= 1.0
