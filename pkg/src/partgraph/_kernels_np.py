"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in ``_kernels_nb`` with the same
signature and semantics; ``kernels`` picks one of the two at import time
(override with PARTGRAPH_BACKEND=numpy|numba).

Conventions: fields are (H, W) or (H, W, C) float64 arrays, row-major,
origin top-left, u = column, v = row. Point sampling uses zero padding;
upsampling replicates edges (half-pixel / align-corners-false).
"""

import numpy as np

BACKEND_NAME = "numpy"

_CORNERS = ((0, 0), (1, 0), (0, 1), (1, 1))


def sample_bilinear(field, us, vs):
    """Zero-padded bilinear sampling of an (H, W, C) field at real coords."""
    h, w, c = field.shape
    u0f = np.floor(us)
    v0f = np.floor(vs)
    au = us - u0f
    av = vs - v0f
    u0 = u0f.astype(np.int64)
    v0 = v0f.astype(np.int64)
    out = np.zeros((us.shape[0], c))
    for du, dv in _CORNERS:
        uu = u0 + du
        vv = v0 + dv
        wgt = (au if du else 1.0 - au) * (av if dv else 1.0 - av)
        inb = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        idx = np.nonzero(inb)[0]
        out[idx] += wgt[idx, None] * field[vv[idx], uu[idx]]
    return out


def _axis_weights(n_src, factor):
    n_out = n_src * factor
    xs = (np.arange(n_out) + 0.5) / factor - 0.5
    x0 = np.floor(xs).astype(np.int64)
    a = xs - x0
    mat = np.zeros((n_out, n_src))
    rows = np.arange(n_out)
    mat[rows, np.clip(x0, 0, n_src - 1)] += 1.0 - a
    mat[rows, np.clip(x0 + 1, 0, n_src - 1)] += a
    return mat


def upsample(field, factor):
    """Half-pixel bilinear upsampling with edge replication."""
    h, w, _ = field.shape
    wv = _axis_weights(h, factor)
    wu = _axis_weights(w, factor)
    return np.einsum("Hh,hwc,Ww->HWc", wv, field, wu)


def upsample_backward(grad, factor, h, w):
    """Transpose of :func:`upsample` applied to an upstream gradient."""
    wv = _axis_weights(h, factor)
    wu = _axis_weights(w, factor)
    return np.einsum("Hh,HWc,Ww->hwc", wv, grad, wu)


def warp_gather(up, flow):
    """out(u) = sample_bilinear(up, u + flow(u)), zero padding."""
    hh, ww = flow.shape[:2]
    vg, ug = np.mgrid[0:hh, 0:ww].astype(np.float64)
    us = (ug + flow[..., 0]).ravel()
    vs = (vg + flow[..., 1]).ravel()
    return sample_bilinear(up, us, vs).reshape(hh, ww, up.shape[2])


def warp_gather_backward(up, flow, grad):
    """Gradients of warp_gather w.r.t. the upsampled source and the flow.

    At integer sample coordinates the derivative is taken from the
    right-side cell (floor-based fractional part).
    """
    h, w, c = up.shape
    hh, ww = flow.shape[:2]
    vg, ug = np.mgrid[0:hh, 0:ww].astype(np.float64)
    us = (ug + flow[..., 0]).ravel()
    vs = (vg + flow[..., 1]).ravel()
    g2 = grad.reshape(-1, c)
    u0 = np.floor(us).astype(np.int64)
    v0 = np.floor(vs).astype(np.int64)
    au = us - u0
    av = vs - v0
    g_up = np.zeros_like(up)
    g_fu = np.zeros(us.shape[0])
    g_fv = np.zeros(us.shape[0])
    for du, dv in _CORNERS:
        uu = u0 + du
        vv = v0 + dv
        wu = au if du else 1.0 - au
        su = 1.0 if du else -1.0
        wv_ = av if dv else 1.0 - av
        sv = 1.0 if dv else -1.0
        inb = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        idx = np.nonzero(inb)[0]
        np.add.at(g_up, (vv[idx], uu[idx]), (wu[idx] * wv_[idx])[:, None] * g2[idx])
        gdot = np.einsum("nc,nc->n", g2[idx], up[vv[idx], uu[idx]])
        g_fu[idx] += su * wv_[idx] * gdot
        g_fv[idx] += wu[idx] * sv * gdot
    g_flow = np.stack([g_fu.reshape(hh, ww), g_fv.reshape(hh, ww)], axis=-1)
    return g_up, g_flow


def hough_splat(mass, tus, tvs, h, w):
    """Splat each vote mass onto the 4 neighbors of its target coordinate."""
    out = np.zeros((h, w))
    u0 = np.floor(tus).astype(np.int64)
    v0 = np.floor(tvs).astype(np.int64)
    au = tus - u0
    av = tvs - v0
    for du, dv in _CORNERS:
        uu = u0 + du
        vv = v0 + dv
        wgt = (au if du else 1.0 - au) * (av if dv else 1.0 - av)
        inb = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        np.add.at(out, (vv[inb], uu[inb]), (mass * wgt)[inb])
    return out


def segment_distance_field(ax, ay, bx, by, h, w):
    """Euclidean distance from every grid cell to the closed segment [A, B]."""
    vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return np.hypot(ug - ax, vg - ay)
    t = np.clip(((ug - ax) * dx + (vg - ay) * dy) / den, 0.0, 1.0)
    return np.hypot(ug - (ax + t * dx), vg - (ay + t * dy))


def nearest_point_field(pxs, pys, h, w):
    """Per-cell offset (du, dv) to the nearest of the given points."""
    vg, ug = np.mgrid[0:h, 0:w].astype(np.float64)
    d2 = (ug[None] - pxs[:, None, None]) ** 2 + (vg[None] - pys[:, None, None]) ** 2
    best = np.argmin(d2, axis=0)
    return np.stack([pxs[best] - ug, pys[best] - vg], axis=-1)


def any_projection_near(pus, pvs, qx, qy, radius):
    return bool(((pus - qx) ** 2 + (pvs - qy) ** 2 <= radius * radius).any())


def group_argmin(pus, pvs, joint_u, joint_v, denom, pose_start, n_poses):
    """Per pixel, pose index minimizing min-over-joints of dist/denom.

    Joints are laid out contiguously per pose; ``pose_start`` holds the
    start offset of each pose (length n_poses + 1). Ties go to the lowest
    pose index.
    """
    d = np.hypot(pus[:, None] - joint_u[None, :], pvs[:, None] - joint_v[None, :])
    scores = d / denom[None, :]
    psi = np.minimum.reduceat(scores, pose_start[:-1], axis=1)
    best = np.argmin(psi, axis=1)
    return best.astype(np.int64), psi[np.arange(psi.shape[0]), best]


def dykstra(y, max_cycles, tol):
    """Dykstra cycles over row/column halfspaces and the nonnegativity clamp.

    Returns (projected, cycles_run, boundary_margin, row_mask, col_mask,
    clamp_mask). Masks record which elementary projections were active in
    each cycle; the margin is the smallest distance of any projection
    input to its constraint boundary (used for boundary-avoiding tests).
    """
    n, m = y.shape
    row_mask = np.zeros((max_cycles, n), dtype=np.uint8)
    col_mask = np.zeros((max_cycles, m), dtype=np.uint8)
    clamp_mask = np.zeros((max_cycles, n, m), dtype=np.uint8)
    x = y.astype(np.float64).copy()
    p1 = np.zeros_like(x)
    p2 = np.zeros_like(x)
    p3 = np.zeros_like(x)
    margin = np.inf
    cycles = 0
    for k in range(max_cycles):
        # Convergence is judged on the full Dykstra state: the iterate can
        # plateau while the corrections still drift toward feasibility.
        x_prev = x.copy()
        p1_prev = p1.copy()
        p2_prev = p2.copy()
        p3_prev = p3.copy()
        t = x + p1
        s = t.sum(axis=1)
        margin = min(margin, float(np.abs(s - 1.0).min()))
        act = s > 1.0
        x = t - (act * (s - 1.0) / m)[:, None]
        p1 = t - x
        row_mask[k] = act
        t = x + p2
        s = t.sum(axis=0)
        margin = min(margin, float(np.abs(s - 1.0).min()))
        act = s > 1.0
        x = t - (act * (s - 1.0) / n)[None, :]
        p2 = t - x
        col_mask[k] = act
        t = x + p3
        margin = min(margin, float(np.abs(t).min()))
        act = t > 0.0
        x = t * act
        p3 = t - x
        clamp_mask[k] = act
        cycles = k + 1
        disp = (
            ((x - x_prev) ** 2).sum()
            + ((p1 - p1_prev) ** 2).sum()
            + ((p2 - p2_prev) ** 2).sum()
            + ((p3 - p3_prev) ** 2).sum()
        )
        if np.sqrt(disp) < tol:
            break
    return x, cycles, margin, row_mask, col_mask, clamp_mask


def pgd_unrolled(vals, alpha, iters, max_cycles, tol):
    """Warm-started projected gradient ascent, fully unrolled in one call.

    Projection 0 is the warm start project(vals); projections 1..iters are
    project(y + alpha * vals). Returns the final iterate plus per-projection
    activation masks/cycle counts/margins and per-step objective and
    feasibility residuals.
    """
    n, m = vals.shape
    total = iters + 1
    row_masks = np.zeros((total, max_cycles, n), dtype=np.uint8)
    col_masks = np.zeros((total, max_cycles, m), dtype=np.uint8)
    clamp_masks = np.zeros((total, max_cycles, n, m), dtype=np.uint8)
    cycles = np.zeros(total, dtype=np.int64)
    margins = np.empty(total)
    objectives = np.empty(iters)
    feas = np.empty(iters)
    y = vals.copy()
    n_steps = iters
    for step in range(total):
        y_prev = y
        if step > 0:
            y = y + alpha * vals
        y, cyc, margin, rm, cm, km = dykstra(y, max_cycles, tol)
        cycles[step] = cyc
        margins[step] = margin
        row_masks[step] = rm
        col_masks[step] = cm
        clamp_masks[step] = km
        if step > 0:
            objectives[step - 1] = float(np.sum(vals * y))
            feas[step - 1] = max(
                float(max(0.0, y.sum(axis=1).max() - 1.0)),
                float(max(0.0, y.sum(axis=0).max() - 1.0)),
                float(max(0.0, -y.min())),
            )
            # stationary iterate = solved; remaining steps would be no-ops
            if np.sqrt(((y - y_prev) ** 2).sum()) < tol:
                n_steps = step
                break
    return y, row_masks, col_masks, clamp_masks, cycles, margins, objectives, feas, n_steps


def dykstra_backward(grad, row_mask, col_mask, clamp_mask, cycles):
    """Reverse-mode replay of the recorded Dykstra cycles."""
    n, m = grad.shape
    gx = grad.astype(np.float64).copy()
    gp1 = np.zeros_like(gx)
    gp2 = np.zeros_like(gx)
    gp3 = np.zeros_like(gx)
    for k in range(cycles - 1, -1, -1):
        gy = gx - gp3
        gt = gp3 + clamp_mask[k] * gy
        gx = gt
        gp3 = gt.copy()
        gy = gx - gp2
        corr = col_mask[k] * (gy.sum(axis=0) / n)
        gt = gp2 + gy - corr[None, :]
        gx = gt
        gp2 = gt.copy()
        gy = gx - gp1
        corr = row_mask[k] * (gy.sum(axis=1) / m)
        gt = gp1 + gy - corr[:, None]
        gx = gt
        gp1 = gt.copy()
    return gx
