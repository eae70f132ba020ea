import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partgraph.errors import InvalidInputError
from partgraph.keypoints import Keypoint
from partgraph.matching import PoseInstance
from partgraph.metrics import (
    AP_THRESHOLDS,
    GtPose,
    InstanceMasks,
    _average_precision,
    ap_part,
    instances_from_grids,
    miou,
    oks,
    partitions_equal,
    pcp50,
    pose_map_oks,
)


def test_miou_perfect_and_disjoint():
    gt = np.array([[0, 1], [2, 2]])
    assert miou(gt, gt, 3) == 1.0
    pred = np.array([[1, 0], [0, 0]])
    # class 0: inter 0; class 1: inter 0; class 2: inter 0
    assert miou(pred, gt, 3) == 0.0


def test_miou_partial_overlap():
    gt = np.zeros((4, 4), dtype=int)
    gt[:2] = 1
    pred = np.zeros((4, 4), dtype=int)
    pred[:1] = 1
    # class 0: 8/12, class 1: 4/8
    assert miou(pred, gt, 2) == pytest.approx((8 / 12 + 4 / 8) / 2)


def test_miou_ignores_absent_classes():
    gt = np.zeros((2, 2), dtype=int)
    pred = np.zeros((2, 2), dtype=int)
    assert miou(pred, gt, 5) == 1.0
    with pytest.raises(InvalidInputError):
        miou(np.zeros((2, 2)), np.zeros((3, 2)), 2)


def test_partitions_equal_under_relabeling():
    a = np.array([[0, 1, 1], [2, 2, 0]])
    b = np.array([[0, 5, 5], [3, 3, 0]])
    assert partitions_equal(a, b)
    assert partitions_equal(a, a)
    # merged instances are a different partition
    c = np.array([[0, 1, 1], [1, 1, 0]])
    assert not partitions_equal(a, c)
    # background must coincide
    d = np.array([[1, 1, 1], [2, 2, 0]])
    assert not partitions_equal(a, d)
    assert not partitions_equal(a, np.zeros((3, 3), dtype=int))
    assert partitions_equal(np.zeros((2, 2)), np.zeros((2, 2)))


@given(st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_partitions_equal_is_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, 4, size=(6, 6))
    perm = np.array([0, *rng.permutation(np.arange(1, 4))])
    assert partitions_equal(ids, perm[ids])


def _mask(h, w, sl):
    m = np.zeros((h, w), dtype=bool)
    m[sl] = True
    return m


def test_instances_from_grids():
    parts = np.array([[1, 1, 0], [2, 2, 0]])
    ids = np.array([[1, 2, 0], [1, 2, 0]])
    insts = instances_from_grids(parts, ids)
    assert len(insts) == 2
    assert set(insts[0].parts) == {1, 2}
    assert insts[0].parts[1].sum() == 1


def test_ap_part_perfect_predictions():
    gt = InstanceMasks(parts={1: _mask(4, 4, np.s_[:2, :2])})
    ap = ap_part([([InstanceMasks(parts=gt.parts, confidence=0.9)], [gt])])
    for t in AP_THRESHOLDS:
        assert ap[t] == 1.0
    assert ap["vol"] == 1.0


def test_ap_part_false_positive_ranked_below():
    gt = InstanceMasks(parts={1: _mask(4, 4, np.s_[:2, :2])})
    good = InstanceMasks(parts=gt.parts, confidence=0.9)
    bogus = InstanceMasks(parts={1: _mask(4, 4, np.s_[3:, 3:])}, confidence=0.1)
    ap = ap_part([([good, bogus], [gt])])
    # high-confidence TP first: precision at full recall stays 1
    assert ap[0.5] == 1.0
    # with the ranking flipped, the FP costs precision
    good.confidence, bogus.confidence = 0.1, 0.9
    ap = ap_part([([good, bogus], [gt])])
    assert ap[0.5] == pytest.approx(0.5)


def test_ap_part_missed_instance():
    gt_a = InstanceMasks(parts={1: _mask(4, 4, np.s_[:2, :2])})
    gt_b = InstanceMasks(parts={1: _mask(4, 4, np.s_[2:, 2:])})
    ap = ap_part([([InstanceMasks(parts=gt_a.parts, confidence=1.0)], [gt_a, gt_b])])
    assert ap[0.5] == pytest.approx(0.5)  # recall caps at 1/2


def test_average_precision_edge_cases():
    assert _average_precision([], [], 0) == 1.0
    assert _average_precision([True], [0.5], 0) == 0.0
    assert _average_precision([], [], 3) == 0.0
    assert _average_precision([True, False], [0.9, 0.8], 1) == 1.0


def test_pcp50_counts_parts_of_matched_instances():
    gt = InstanceMasks(parts={1: _mask(6, 6, np.s_[:3, :3]), 2: _mask(6, 6, np.s_[3:, 3:])})
    # part 1 reproduced exactly, part 2 shifted to IoU < 0.5
    pred = InstanceMasks(
        parts={1: _mask(6, 6, np.s_[:3, :3]), 2: _mask(6, 6, np.s_[3:, 1:4])},
        confidence=1.0,
    )
    assert pcp50([([pred], [gt])]) == pytest.approx(0.5)
    assert pcp50([([], [])]) == 1.0


def _pred_pose(pts, score=1.0):
    return PoseInstance(
        joints={k: Keypoint(category=k, u=u, v=v, score=score) for k, (u, v) in pts.items()},
        score=score,
        sigma=1.0,
    )


def test_oks_exact_and_decay():
    gt = GtPose(
        joints=np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]),
        visible=np.array([True, True, True]),
    )
    exact = _pred_pose({0: (0, 0), 1: (10, 0), 2: (0, 10)})
    assert oks(exact, gt) == pytest.approx(1.0)
    # one joint displaced: similarity drops by the Gaussian factor
    off = _pred_pose({0: (0, 0), 1: (10, 0), 2: (3, 10)})
    denom = 2.0 * (gt.sigma ** 2) * 0.01
    assert oks(off, gt) == pytest.approx((2.0 + np.exp(-9.0 / denom)) / 3.0)
    # missing joints contribute zero
    partial = _pred_pose({0: (0, 0)})
    assert oks(partial, gt) == pytest.approx(1.0 / 3.0)
    with pytest.raises(InvalidInputError):
        oks(exact, gt, kappa=0.0)


def test_pose_map_perfect_and_empty():
    gt = GtPose(joints=np.array([[0.0, 0.0], [20.0, 20.0]]), visible=np.ones(2, bool))
    pred = _pred_pose({0: (0, 0), 1: (20, 20)})
    assert pose_map_oks([([pred], [gt])]) == 1.0
    assert pose_map_oks([([], [gt])]) == 0.0
    assert pose_map_oks([([], [])]) == 1.0


def test_pose_map_penalizes_bad_poses():
    gt = GtPose(joints=np.array([[0.0, 0.0], [20.0, 20.0]]), visible=np.ones(2, bool))
    bad = _pred_pose({0: (100, 100), 1: (120, 120)})
    assert pose_map_oks([([bad], [gt])]) == 0.0
