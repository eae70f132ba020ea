"""Scene-level evaluation glue: pipeline outputs vs. generator ground truth."""

import numpy as np

from .metrics import (
    AP_THRESHOLDS,
    EvalReport,
    GtPose,
    InstanceMasks,
    ap_part,
    instances_from_grids,
    miou,
    partitions_equal,
    pcp50,
    pose_map_oks,
)
from .synth import N_PARTS


def predicted_instances(parsing):
    """Per-pose part masks from the grouped parsing, scored by pose score."""
    out = []
    for idx, pose in enumerate(parsing.poses, start=1):
        mask = parsing.instance_ids == idx
        parts = {}
        for c in np.unique(parsing.part_labels[mask]):
            if c > 0:
                parts[int(c)] = mask & (parsing.part_labels == c)
        if parts:
            out.append(InstanceMasks(parts=parts, confidence=pose.score))
    return out


def gt_poses(scene):
    return [GtPose(joints=p.joints, visible=p.visible) for p in scene.persons]


def evaluate_scenes(pairs, ap_thresholds=AP_THRESHOLDS):
    """Aggregate an EvalReport over (scene, parsing) pairs."""
    inst_pairs = []
    pose_pairs = []
    mious = []
    per_scene = []
    for scene, parsing in pairs:
        preds = predicted_instances(parsing)
        gts = instances_from_grids(scene.part_labels, scene.instance_ids)
        inst_pairs.append((preds, gts))
        pose_pairs.append((parsing.poses, gt_poses(scene)))
        mious.append(miou(parsing.part_labels, scene.part_labels, N_PARTS))
        per_scene.append(
            {
                "seed": scene.seed,
                "persons": len(scene.persons),
                "pred_instances": len(preds),
                "miou": mious[-1],
                "ids_exact": partitions_equal(parsing.instance_ids, scene.instance_ids),
            }
        )
    ap = ap_part(inst_pairs, ap_thresholds)
    return EvalReport(
        miou=float(np.mean(mious)) if mious else 1.0,
        ap_p=ap,
        pcp50=pcp50(inst_pairs),
        pose_map=pose_map_oks(pose_pairs),
        per_scene=per_scene,
    )
