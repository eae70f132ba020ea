"""Deterministic stick-figure scene generator with exact ground truth.

Scenes carry per-person joints, capsule part masks, painter's-order
instance ids, and a ground-truth DSPF whose vector at each foreground
pixel points to the nearest visible joint of the owning instance.
Targets rendered from a scene substitute for trained network heads.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .dspf import DspfPyramid, decompose_dspf
from .errors import InvalidInputError, PlacementError, SceneLoadError
from .fields import one_hot, write_pgf
from .limbs import PART_NAMES, SkeletonSpec, render_limb_map

SCENE_VERSION = 1
N_PARTS = len(PART_NAMES)

# Canonical joint layout, MPII-16 ordering, pelvis origin, unit height,
# u right / v down.
_CANONICAL = np.array([
    [0.00, -0.50],   # head_top
    [0.00, -0.38],   # upper_neck
    [0.00, -0.30],   # thorax
    [-0.11, -0.30],  # r_shoulder
    [-0.16, -0.14],  # r_elbow
    [-0.20, 0.01],   # r_wrist
    [0.11, -0.30],   # l_shoulder
    [0.16, -0.14],   # l_elbow
    [0.20, 0.01],    # l_wrist
    [0.00, 0.00],    # pelvis
    [-0.07, 0.00],   # r_hip
    [-0.08, 0.24],   # r_knee
    [-0.09, 0.48],   # r_ankle
    [0.07, 0.00],    # l_hip
    [0.08, 0.24],    # l_knee
    [0.09, 0.48],    # l_ankle
])

# Capsule radius per part class as a fraction of person height.
_PART_RADIUS_FRAC = {1: 0.10, 2: 0.08, 3: 0.035, 4: 0.03, 5: 0.04, 6: 0.035}

# Limb Gaussian std: 9 px at 256-px lattices, scaled with the short side.
LIMB_SIGMA_FRACTION = 9.0 / 256.0

_ANGLE_JITTER = np.deg2rad(10.0)
_BASE_HEIGHT_FRAC = 0.40
_PLACEMENT_ATTEMPTS = 1000
_SCENE_RESTARTS = 64


@dataclass
class PersonGT:
    joints: np.ndarray  # (K, 2) float, (u, v) pixels
    visible: np.ndarray  # (K,) bool
    height_px: float


@dataclass
class Scene:
    width: int
    height: int
    seed: int
    skeleton: SkeletonSpec
    persons: list
    part_labels: np.ndarray
    instance_ids: np.ndarray
    dspf: np.ndarray


@dataclass(frozen=True)
class NoiseSpec:
    offset_sigma: float = 0.0  # px, Gaussian on offset fields and DSPF
    heatmap_sigma: float = 0.0  # additive std on heatmaps and limb maps
    drop_prob: float = 0.0  # per-keypoint disk dropout probability
    seed: int = 0

    def validate(self):
        if self.offset_sigma < 0 or self.heatmap_sigma < 0:
            raise InvalidInputError("noise magnitudes must be nonnegative")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise InvalidInputError("drop_prob must lie in [0, 1]")


@dataclass
class SceneTargets:
    semantic: np.ndarray  # (H, W, P) probabilities
    heatmaps: list  # K arrays (H, W)
    offsets: list  # K arrays (H, W, 2)
    radius: float
    limb_maps: list  # one (H, W) map per skeleton limb
    limb_sigma: float
    pyramid: DspfPyramid
    joints_by_category: list  # K arrays (N_k, 2), visible joints
    skeleton: SkeletonSpec = None


def vote_radius(width, height):
    """Disk radius: 32 px at 256-px lattices, scaled with the short side."""
    return min(width, height) / 8.0


def part_radius(part_class, height_px):
    return max(1.5, _PART_RADIUS_FRAC[part_class] * height_px)


def _build_person(rng, root_u, root_v, height_px, skeleton):
    """Articulated figure: global rotation plus per-limb angle jitter."""
    theta = rng.uniform(-_ANGLE_JITTER, _ANGLE_JITTER)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    joints = np.zeros((skeleton.n_categories, 2))
    pelvis = 9
    joints[pelvis] = (root_u, root_v)
    placed = {pelvis}
    # walk limbs until all joints hang off the pelvis-rooted tree
    pending = list(skeleton.limbs)
    while pending:
        rest = []
        for a, b in pending:
            if a in placed and b in placed:
                continue
            if a not in placed and b not in placed:
                rest.append((a, b))
                continue
            parent, child = (a, b) if a in placed else (b, a)
            off = (_CANONICAL[child] - _CANONICAL[parent]) * height_px
            phi = rng.uniform(-_ANGLE_JITTER, _ANGLE_JITTER)
            jrot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
            joints[child] = joints[parent] + rot @ jrot @ off
            placed.add(child)
        pending = rest
    return np.round(joints)


def _person_bbox(joints, pad):
    return (
        joints[:, 0].min() - pad,
        joints[:, 1].min() - pad,
        joints[:, 0].max() + pad,
        joints[:, 1].max() + pad,
    )


def _bbox_disjoint(a, b):
    return a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1]


def generate_scene(n_persons, width, height, seed, overlap="forbidden"):
    """Place articulated stick figures deterministically in the seed.

    ``overlap='forbidden'`` additionally keeps person boxes disjoint and
    same-category joints of different persons well separated (so their
    vote disks stay distinct).
    """
    if n_persons < 0:
        raise InvalidInputError("n_persons must be >= 0")
    if width < 64 or height < 64:
        raise InvalidInputError("lattice must be at least 64x64")
    if overlap not in ("allowed", "forbidden"):
        raise InvalidInputError(f"overlap must be 'allowed' or 'forbidden', got {overlap!r}")
    skeleton = SkeletonSpec()
    radius = vote_radius(width, height)
    margin = radius + 2.0
    short = min(width, height)
    base_h = _BASE_HEIGHT_FRAC * short
    usable = short - 2.0 * margin
    scale_cap = min(2.0, 0.95 * usable / base_h)
    if n_persons > 1:
        scale_cap = min(scale_cap, 1.9 / np.sqrt(n_persons))
    scale_cap = max(scale_cap, 0.5)
    min_same_cat = 1.35 * radius

    # Greedy placement can paint itself into a corner on crowded scenes, so
    # the whole layout restarts from a derived substream when it dead-ends.
    persons = None
    for restart in range(_SCENE_RESTARTS):
        rng = np.random.default_rng([seed, restart])
        try:
            persons = _place_persons(
                rng, n_persons, width, height, margin, base_h, scale_cap,
                min_same_cat, overlap, skeleton,
            )
            break
        except PlacementError:
            continue
    if persons is None:
        raise PlacementError(
            f"could not place {n_persons} persons on a {width}x{height} lattice "
            f"after {_SCENE_RESTARTS} layout restarts"
        )

    part_labels, instance_ids = rasterize_masks(width, height, skeleton, persons)
    _update_visibility(persons, instance_ids)
    dspf_gt = ground_truth_dspf(part_labels, instance_ids, persons)
    return Scene(width, height, seed, skeleton, persons, part_labels, instance_ids, dspf_gt)


def _place_persons(
    rng, n_persons, width, height, margin, base_h, scale_cap, min_same_cat,
    overlap, skeleton,
):
    persons = []
    bboxes = []
    for _ in range(n_persons):
        for attempt in range(_PLACEMENT_ATTEMPTS):
            scale = rng.uniform(0.5, scale_cap)
            height_px = base_h * scale
            root_u = rng.uniform(margin, width - 1 - margin)
            root_v = rng.uniform(margin, height - 1 - margin)
            joints = _build_person(rng, root_u, root_v, height_px, skeleton)
            if joints[:, 0].min() < margin or joints[:, 0].max() > width - 1 - margin:
                continue
            if joints[:, 1].min() < margin or joints[:, 1].max() > height - 1 - margin:
                continue
            if overlap == "forbidden":
                pad = part_radius(2, height_px) + 2.0
                box = _person_bbox(joints, pad)
                ok = all(_bbox_disjoint(box, other) for other in bboxes)
                if ok:
                    for prev in persons:
                        d = np.hypot(*(joints - prev.joints).T)
                        if d.min() < min_same_cat:
                            ok = False
                            break
                if not ok:
                    continue
                bboxes.append(box)
            person = PersonGT(
                joints=joints,
                visible=np.ones(skeleton.n_categories, dtype=bool),
                height_px=height_px,
            )
            persons.append(person)
            break
        else:
            raise PlacementError(
                f"could not place person {len(persons) + 1}/{n_persons} "
                f"after {_PLACEMENT_ATTEMPTS} attempts"
            )
    return persons


def rasterize_masks(width, height, skeleton, persons):
    """Paint capsule part masks in painter's order (later persons on top)."""
    part_labels = np.zeros((height, width), dtype=np.int64)
    instance_ids = np.zeros((height, width), dtype=np.int64)
    for idx, person in enumerate(persons, start=1):
        for limb_idx, (a, b) in enumerate(skeleton.limbs):
            part = skeleton.limb_parts[limb_idx]
            r = part_radius(part, person.height_px)
            d = kernels.segment_distance_field(
                float(person.joints[a, 0]), float(person.joints[a, 1]),
                float(person.joints[b, 0]), float(person.joints[b, 1]),
                height, width,
            )
            mask = d <= r
            part_labels[mask] = part
            instance_ids[mask] = idx
    return part_labels, instance_ids


def _update_visibility(persons, instance_ids):
    """A joint is visible while its own instance still owns its pixel."""
    h, w = instance_ids.shape
    for idx, person in enumerate(persons, start=1):
        for k, (u, v) in enumerate(person.joints):
            ui = int(np.clip(round(u), 0, w - 1))
            vi = int(np.clip(round(v), 0, h - 1))
            person.visible[k] = instance_ids[vi, ui] == idx


def ground_truth_dspf(part_labels, instance_ids, persons):
    """Foreground vectors to the nearest visible joint of the owning person."""
    h, w = part_labels.shape
    out = np.zeros((h, w, 2))
    for idx, person in enumerate(persons, start=1):
        mask = instance_ids == idx
        if not mask.any():
            continue
        vis = person.joints[person.visible]
        if vis.shape[0] == 0:
            vis = person.joints
        field_ = kernels.nearest_point_field(
            np.ascontiguousarray(vis[:, 0]), np.ascontiguousarray(vis[:, 1]), h, w
        )
        out[mask] = field_[mask]
    return out


def _smooth_flow(h, w, amplitude=0.5):
    vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
    return amplitude * np.stack(
        [np.sin(2.0 * np.pi * vg / max(h, 1)), np.cos(2.0 * np.pi * ug / max(w, 1))],
        axis=-1,
    )


def render_targets(scene, levels=4, flow_mode="zero"):
    """Exact targets: disk heatmaps, nearest-joint offsets, limb Gaussians,
    one-hot semantics, and a DSPF pyramid decomposed to recompose exactly."""
    h, w = scene.height, scene.width
    skeleton = scene.skeleton
    radius = vote_radius(w, h)
    semantic = one_hot(scene.part_labels, N_PARTS)

    joints_by_cat = []
    for k in range(skeleton.n_categories):
        pts = [p.joints[k] for p in scene.persons if p.visible[k]]
        joints_by_cat.append(np.array(pts) if pts else np.zeros((0, 2)))

    heatmaps, offsets = [], []
    vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
    for k in range(skeleton.n_categories):
        pts = joints_by_cat[k]
        if pts.shape[0] == 0:
            heatmaps.append(np.zeros((h, w)))
            offsets.append(np.zeros((h, w, 2)))
            continue
        off = kernels.nearest_point_field(
            np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), h, w
        )
        dist = np.hypot(off[..., 0], off[..., 1])
        heatmaps.append((dist < radius).astype(np.float64))
        offsets.append(off)

    sigma = max(2.0, LIMB_SIGMA_FRACTION * min(w, h))
    limb_maps = []
    for limb_idx, (a, b) in enumerate(skeleton.limbs):
        q = np.zeros((h, w))
        for person in scene.persons:
            if not (person.visible[a] and person.visible[b]):
                continue
            q = np.maximum(
                q, render_limb_map(person.joints[a], person.joints[b], sigma, (h, w))
            )
        limb_maps.append(q)

    flows = None
    if flow_mode == "smooth":
        flows = [
            _smooth_flow(h >> i, w >> i) for i in range(levels - 1)
        ]
    elif flow_mode != "zero":
        raise InvalidInputError(f"flow_mode must be 'zero' or 'smooth', got {flow_mode!r}")
    pyramid = decompose_dspf(scene.dspf, levels, flows)
    return SceneTargets(
        semantic=semantic,
        heatmaps=heatmaps,
        offsets=offsets,
        radius=radius,
        limb_maps=limb_maps,
        limb_sigma=sigma,
        pyramid=pyramid,
        joints_by_category=joints_by_cat,
        skeleton=skeleton,
    )


def perturb_targets(targets, noise: NoiseSpec):
    """Seeded corruption: Gaussian offset/DSPF noise, clamped additive
    heatmap noise, and whole-disk keypoint dropout."""
    noise.validate()
    rng = np.random.default_rng(noise.seed)
    heatmaps = [m.copy() for m in targets.heatmaps]
    offsets = [o.copy() for o in targets.offsets]
    limb_maps = [q.copy() for q in targets.limb_maps]
    residues = [r.copy() for r in targets.pyramid.residues]

    if noise.drop_prob > 0.0:
        for k, pts in enumerate(targets.joints_by_category):
            if pts.shape[0] == 0:
                continue
            drops = rng.random(pts.shape[0]) < noise.drop_prob
            if not drops.any():
                continue
            h, w = heatmaps[k].shape
            vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
            d2 = (ug[None] - pts[:, 0, None, None]) ** 2 + (vg[None] - pts[:, 1, None, None]) ** 2
            nearest = np.argmin(d2, axis=0)
            heatmaps[k][np.isin(nearest, np.nonzero(drops)[0])] = 0.0

    if noise.offset_sigma > 0.0:
        for o in offsets:
            o += rng.normal(0.0, noise.offset_sigma, o.shape)
        residues[0] = residues[0] + rng.normal(0.0, noise.offset_sigma, residues[0].shape)

    if noise.heatmap_sigma > 0.0:
        for m in heatmaps:
            np.clip(m + rng.normal(0.0, noise.heatmap_sigma, m.shape), 0.0, 1.0, out=m)
        for q in limb_maps:
            np.clip(q + rng.normal(0.0, noise.heatmap_sigma, q.shape), 0.0, 1.0, out=q)

    pyramid = DspfPyramid(
        coarsest=targets.pyramid.coarsest.copy(),
        residues=residues,
        flows=[f.copy() for f in targets.pyramid.flows],
    )
    return replace(
        targets,
        heatmaps=heatmaps,
        offsets=offsets,
        limb_maps=limb_maps,
        pyramid=pyramid,
    )


def save_scene(scene, path, sidecars=True):
    """Scene JSON plus optional 'PGF1' sidecar dumps next to it."""
    path = str(path)
    doc = {
        "scene_version": SCENE_VERSION,
        "width": scene.width,
        "height": scene.height,
        "seed": scene.seed,
        "skeleton": {
            "n_categories": scene.skeleton.n_categories,
            "limbs": [list(l) for l in scene.skeleton.limbs],
            "head_category": scene.skeleton.head_category,
            "limb_parts": list(scene.skeleton.limb_parts),
        },
        "persons": [
            {
                "joints": [
                    [float(u), float(v), bool(vis)]
                    for (u, v), vis in zip(p.joints, p.visible)
                ],
                "height_px": float(p.height_px),
            }
            for p in scene.persons
        ],
    }
    if sidecars:
        stem = path[:-5] if path.endswith(".json") else path
        doc["sidecars"] = {
            "part_labels": stem + ".parts.pgf",
            "instance_ids": stem + ".ids.pgf",
            "dspf": stem + ".dspf.pgf",
        }
        write_pgf(doc["sidecars"]["part_labels"], scene.part_labels.astype(np.float64))
        write_pgf(doc["sidecars"]["instance_ids"], scene.instance_ids.astype(np.float64))
        write_pgf(doc["sidecars"]["dspf"], scene.dspf)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    return doc


def load_scene(path):
    """Rebuild a Scene from JSON; grids are re-derived deterministically."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise SceneLoadError(f"scene file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SceneLoadError(f"scene file is not valid JSON: {path}: {exc}") from exc
    for key in ("scene_version", "width", "height", "seed", "skeleton", "persons"):
        if key not in doc:
            raise SceneLoadError(f"scene file missing field '{key}'")
    if doc["scene_version"] != SCENE_VERSION:
        raise SceneLoadError(f"unsupported scene_version {doc['scene_version']}")
    sk = doc["skeleton"]
    for key in ("n_categories", "limbs", "head_category", "limb_parts"):
        if key not in sk:
            raise SceneLoadError(f"scene file missing field 'skeleton.{key}'")
    skeleton = SkeletonSpec(
        n_categories=int(sk["n_categories"]),
        limbs=tuple(tuple(l) for l in sk["limbs"]),
        head_category=int(sk["head_category"]),
        limb_parts=tuple(sk["limb_parts"]),
    )
    skeleton.validate()
    persons = []
    for i, p in enumerate(doc["persons"]):
        if "joints" not in p or "height_px" not in p:
            raise SceneLoadError(f"scene file missing field 'persons[{i}].joints/height_px'")
        joints = np.array([[j[0], j[1]] for j in p["joints"]], dtype=np.float64)
        visible = np.array([bool(j[2]) for j in p["joints"]])
        if joints.shape[0] != skeleton.n_categories:
            raise SceneLoadError(
                f"persons[{i}] has {joints.shape[0]} joints, expected {skeleton.n_categories}"
            )
        persons.append(PersonGT(joints=joints, visible=visible, height_px=float(p["height_px"])))
    width, height = int(doc["width"]), int(doc["height"])
    part_labels, instance_ids = rasterize_masks(width, height, skeleton, persons)
    dspf_gt = ground_truth_dspf(part_labels, instance_ids, persons)
    return Scene(width, height, int(doc["seed"]), skeleton, persons, part_labels, instance_ids, dspf_gt)
