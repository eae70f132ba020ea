"""Evaluation metrics: mIoU, part-based instance AP, PCP, and OKS pose mAP.

Instance-level protocols: instance similarity is the mean part-wise IoU
over part categories present in the ground-truth instance; detections
match greedily in descending confidence, one-to-one; AP uses all-point
precision-recall interpolation pooled across scenes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

AP_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 10))
OKS_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_KAPPA = 0.1


@dataclass
class EvalReport:
    miou: float
    ap_p: dict  # threshold -> AP, plus "vol"
    pcp50: float
    pose_map: float
    per_scene: list

    def to_json_dict(self):
        ap = {f"{int(round(t * 100))}": v for t, v in self.ap_p.items() if t != "vol"}
        ap["vol"] = self.ap_p["vol"]
        return {
            "miou": self.miou,
            "ap_p": ap,
            "pcp": {"50": self.pcp50},
            "pose_map": self.pose_map,
            "per_scene": self.per_scene,
        }


def miou(pred_labels, gt_labels, n_classes):
    """Mean IoU over the classes present in the ground truth."""
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise InvalidInputError(
            f"label lattices differ: {pred_labels.shape} vs {gt_labels.shape}"
        )
    ious = []
    for c in range(n_classes):
        gt_c = gt_labels == c
        pred_c = pred_labels == c
        if not gt_c.any() and not pred_c.any():
            continue
        if not gt_c.any():
            continue
        union = np.logical_or(gt_c, pred_c).sum()
        ious.append(np.logical_and(gt_c, pred_c).sum() / union)
    return float(np.mean(ious)) if ious else 1.0


def partitions_equal(ids_a, ids_b):
    """True iff two instance-id grids induce the same pixel partition.

    Label values are irrelevant: background (0) must coincide and the
    nonzero labels must map one-to-one between the grids.
    """
    ids_a = np.asarray(ids_a)
    ids_b = np.asarray(ids_b)
    if ids_a.shape != ids_b.shape:
        return False
    if not np.array_equal(ids_a == 0, ids_b == 0):
        return False
    fg = ids_a > 0
    pairs = np.unique(np.stack([ids_a[fg], ids_b[fg]], axis=1), axis=0)
    return (
        pairs.shape[0] == np.unique(ids_a[fg]).size == np.unique(ids_b[fg]).size
        if fg.any()
        else True
    )


@dataclass
class InstanceMasks:
    """One instance: per-part boolean masks and a detection confidence."""

    parts: dict  # part class -> (H, W) bool
    confidence: float = 1.0


def instances_from_grids(part_labels, instance_ids, confidences=None):
    """Split (part label, instance id) grids into per-instance part masks."""
    out = []
    ids = sorted(int(i) for i in np.unique(instance_ids) if i > 0)
    for idx, inst in enumerate(ids):
        mask = instance_ids == inst
        parts = {}
        for c in np.unique(part_labels[mask]):
            if c > 0:
                parts[int(c)] = mask & (part_labels == c)
        conf = 1.0 if confidences is None else float(confidences[idx])
        out.append(InstanceMasks(parts=parts, confidence=conf))
    return out


def _part_similarity(pred: InstanceMasks, gt: InstanceMasks):
    """Mean IoU over the gt-present part categories."""
    vals = []
    for c, gt_mask in gt.parts.items():
        pred_mask = pred.parts.get(c)
        if pred_mask is None:
            vals.append(0.0)
            continue
        union = np.logical_or(gt_mask, pred_mask).sum()
        vals.append(np.logical_and(gt_mask, pred_mask).sum() / union if union else 0.0)
    return float(np.mean(vals)) if vals else 0.0


def _greedy_instance_matches(scene_pairs):
    """Per scene, match predictions to gts greedily by descending confidence.

    Returns (records, n_gt): records are (confidence, similarity-to-matched-gt,
    matched-gt-or-None) pooled across scenes.
    """
    records = []
    n_gt = 0
    for preds, gts in scene_pairs:
        n_gt += len(gts)
        taken = [False] * len(gts)
        for pred in sorted(preds, key=lambda p: -p.confidence):
            sims = [
                -1.0 if taken[g] else _part_similarity(pred, gts[g])
                for g in range(len(gts))
            ]
            best = int(np.argmax(sims)) if sims else -1
            if best >= 0 and sims[best] > 0.0:
                taken[best] = True
                records.append((pred.confidence, sims[best], gts[best]))
            else:
                records.append((pred.confidence, 0.0, None))
    return records, n_gt


def _average_precision(flags, confidences, n_gt):
    """All-point interpolated AP from TP flags sorted by confidence."""
    if n_gt == 0:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    order = np.argsort(-np.asarray(confidences), kind="stable")
    tp = np.asarray(flags, dtype=np.float64)[order]
    cum_tp = np.cumsum(tp)
    precision = cum_tp / np.arange(1, tp.size + 1)
    recall = cum_tp / n_gt
    # precision envelope, right to left
    for i in range(precision.size - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev_r = 0.0
    for p, r in zip(precision, recall):
        ap += p * (r - prev_r)
        prev_r = r
    return float(ap)


def ap_part(scene_pairs, thresholds=AP_THRESHOLDS):
    """Instance AP at each similarity threshold plus the threshold mean."""
    records, n_gt = _greedy_instance_matches(scene_pairs)
    out = {}
    for t in thresholds:
        flags = [sim > t for _, sim, _ in records]
        confs = [conf for conf, _, _ in records]
        out[t] = _average_precision(flags, confs, n_gt)
    out["vol"] = float(np.mean([out[t] for t in thresholds]))
    return out


def pcp50(scene_pairs):
    """Correctly parsed part fraction: matched instances (similarity > 0.5)
    contribute their parts with IoU > 0.5; denominator is all gt parts."""
    total_parts = 0
    correct = 0
    for preds, gts in scene_pairs:
        for gt in gts:
            total_parts += len(gt.parts)
    for preds, gts in scene_pairs:
        taken = [False] * len(gts)
        for pred in sorted(preds, key=lambda p: -p.confidence):
            sims = [
                -1.0 if taken[g] else _part_similarity(pred, gts[g])
                for g in range(len(gts))
            ]
            best = int(np.argmax(sims)) if sims else -1
            if best >= 0 and sims[best] > 0.5:
                taken[best] = True
                gt = gts[best]
                for c, gt_mask in gt.parts.items():
                    pred_mask = pred.parts.get(c)
                    if pred_mask is None:
                        continue
                    union = np.logical_or(gt_mask, pred_mask).sum()
                    if union and np.logical_and(gt_mask, pred_mask).sum() / union > 0.5:
                        correct += 1
    return correct / total_parts if total_parts else 1.0


@dataclass
class GtPose:
    joints: np.ndarray  # (K, 2)
    visible: np.ndarray  # (K,) bool

    @property
    def sigma(self):
        pts = self.joints[self.visible]
        if pts.shape[0] == 0:
            return 1.0
        area = (pts[:, 0].max() - pts[:, 0].min()) * (pts[:, 1].max() - pts[:, 1].min())
        return max(np.sqrt(area), 1.0)


def oks(pred_pose, gt: GtPose, kappa=DEFAULT_KAPPA):
    """Object keypoint similarity over the gt-visible joints."""
    if kappa <= 0:
        raise InvalidInputError("kappa must be positive")
    vis = np.nonzero(gt.visible)[0]
    if vis.size == 0:
        return 0.0
    denom = 2.0 * (gt.sigma ** 2) * (kappa ** 2)
    total = 0.0
    for k in vis:
        kp = pred_pose.joints.get(int(k))
        if kp is None:
            continue
        d2 = (kp.u - gt.joints[k, 0]) ** 2 + (kp.v - gt.joints[k, 1]) ** 2
        total += np.exp(-d2 / denom)
    return float(total / vis.size)


def pose_map_oks(scene_pose_pairs, kappa=DEFAULT_KAPPA, thresholds=OKS_THRESHOLDS):
    """COCO-style mAP: greedy OKS matching by descending instance score,
    AP per threshold from the pooled PR curve, averaged over thresholds."""
    aps = []
    for t in thresholds:
        flags = []
        confs = []
        n_gt = 0
        for preds, gts in scene_pose_pairs:
            n_gt += len(gts)
            taken = [False] * len(gts)
            for pred in sorted(preds, key=lambda p: -p.score):
                best = -1
                best_oks = -1.0
                for g, gt in enumerate(gts):
                    if taken[g]:
                        continue
                    val = oks(pred, gt, kappa)
                    if val > best_oks:
                        best_oks = val
                        best = g
                if best >= 0 and best_oks >= t:
                    taken[best] = True
                    flags.append(True)
                else:
                    flags.append(False)
                confs.append(pred.score)
        aps.append(_average_precision(flags, confs, n_gt))
    return float(np.mean(aps))
