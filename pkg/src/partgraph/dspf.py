"""Flow-guided warping and coarse-to-fine composition of the
dense-to-sparse projection field (DSPF).

A DSPF pyramid stores the coarsest field plus per-level residues and
feature flows; composition runs coarse to fine, doubling offsets at each
level to rescale them to the finer lattice.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError


@dataclass(frozen=True)
class DspfPyramid:
    """coarsest: (h, w, 2); residues/flows: fine-to-coarse lists, one per
    level below the coarsest, each at its own level's resolution."""

    coarsest: np.ndarray
    residues: list  # residues[0] is the finest level
    flows: list

    @property
    def levels(self):
        return len(self.residues) + 1

    def validate(self):
        if len(self.residues) != len(self.flows):
            raise InvalidInputError("residue and flow lists must have equal length")
        prev = self.coarsest
        for res, flow in zip(reversed(self.residues), reversed(self.flows)):
            if res.shape != flow.shape:
                raise InvalidInputError(
                    f"residue {res.shape} and flow {flow.shape} differ at a level"
                )
            if res.shape[0] != 2 * prev.shape[0] or res.shape[1] != 2 * prev.shape[1]:
                raise InvalidInputError(
                    f"level {res.shape[:2]} is not 2x the coarser level {prev.shape[:2]}"
                )
            prev = res


def _check_warp_shapes(source, flow):
    source = np.asarray(source, dtype=np.float64)
    flow = np.ascontiguousarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise InvalidInputError(f"flow must be (H, W, 2), got {flow.shape}")
    squeeze = source.ndim == 2
    src3 = source[..., None] if squeeze else source
    if flow.shape[0] != 2 * src3.shape[0] or flow.shape[1] != 2 * src3.shape[1]:
        raise InvalidInputError(
            f"flow resolution {flow.shape[:2]} must be exactly 2x source {src3.shape[:2]}"
        )
    return np.ascontiguousarray(src3), flow, squeeze


def warp_with_flow(source, flow):
    """Bilinearly upsample the source by 2, then resample it at u + flow(u).

    Applies identically to feature stacks and to 2-vector DSPFs.
    """
    src3, flow, squeeze = _check_warp_shapes(source, flow)
    up = kernels.upsample(src3, 2)
    out = kernels.warp_gather(up, flow)
    return out[..., 0] if squeeze else out


def warp_backward(source, flow, grad):
    """Exact gradients of :func:`warp_with_flow` w.r.t. source and flow.

    Sample points on integer lattice lines take the derivative from the
    right-side cell.
    """
    src3, flow, squeeze = _check_warp_shapes(source, flow)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    g3 = grad[..., None] if squeeze else grad
    if g3.shape != flow.shape[:2] + (src3.shape[2],):
        raise InvalidInputError(
            f"upstream gradient shape {grad.shape} inconsistent with warp output"
        )
    up = kernels.upsample(src3, 2)
    g_up, g_flow = kernels.warp_gather_backward(up, flow, g3)
    g_src = kernels.upsample_backward(g_up, 2, src3.shape[0], src3.shape[1])
    return (g_src[..., 0] if squeeze else g_src), g_flow


def compose_dspf(pyr: DspfPyramid):
    """Fuse the pyramid coarse to fine: D_l = residue_l + 2 * warp(D_{l+1}, F_l)."""
    pyr.validate()
    d = np.asarray(pyr.coarsest, dtype=np.float64)
    for res, flow in zip(reversed(pyr.residues), reversed(pyr.flows)):
        d = np.asarray(res, dtype=np.float64) + 2.0 * warp_with_flow(d, flow)
    return d


def decompose_dspf(target, levels, flows=None):
    """Build a pyramid whose composition reproduces ``target`` exactly.

    Per-level targets are the ground-truth field averaged onto each coarser
    lattice with offsets rescaled; residues solve the composition rule
    level by level, so the round trip is exact for any choice of flows.
    With ``flows=None`` all flows are zero.
    """
    target = np.asarray(target, dtype=np.float64)
    h, w = target.shape[:2]
    if levels < 2:
        raise InvalidInputError("pyramid needs at least 2 levels")
    if h % (1 << (levels - 1)) or w % (1 << (levels - 1)):
        raise InvalidInputError(
            f"lattice {h}x{w} not divisible by 2^{levels - 1} for {levels} levels"
        )
    per_level = [target]
    for _ in range(levels - 1):
        fine = per_level[-1]
        coarse = 0.5 * (
            fine[0::2, 0::2] + fine[1::2, 0::2] + fine[0::2, 1::2] + fine[1::2, 1::2]
        ) / 2.0  # average pool, offsets halved for the coarser lattice
        per_level.append(coarse)
    if flows is None:
        flows = [np.zeros(per_level[i].shape[:2] + (2,)) for i in range(levels - 1)]
    residues = []
    for i in range(levels - 1):
        warped = warp_with_flow(per_level[i + 1], flows[i])
        residues.append(per_level[i] - 2.0 * warped)
    return DspfPyramid(coarsest=per_level[-1], residues=residues, flows=list(flows))
