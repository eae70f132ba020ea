"""Numba-jitted implementations of the hot kernels.

Loop-level twins of ``_kernels_np`` with identical signatures; selected by
default when numba imports cleanly (see ``kernels``).
"""

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def sample_bilinear(field, us, vs):
    h, w, c = field.shape
    n = us.shape[0]
    out = np.zeros((n, c))
    for i in range(n):
        u0 = int(np.floor(us[i]))
        v0 = int(np.floor(vs[i]))
        au = us[i] - u0
        av = vs[i] - v0
        for dv in range(2):
            vv = v0 + dv
            if vv < 0 or vv >= h:
                continue
            wv = av if dv else 1.0 - av
            for du in range(2):
                uu = u0 + du
                if uu < 0 or uu >= w:
                    continue
                wgt = (au if du else 1.0 - au) * wv
                for ch in range(c):
                    out[i, ch] += wgt * field[vv, uu, ch]
    return out


@njit(cache=True)
def upsample(field, factor):
    h, w, c = field.shape
    hh = h * factor
    ww = w * factor
    out = np.empty((hh, ww, c))
    for j in range(hh):
        vs = (j + 0.5) / factor - 0.5
        v0 = int(np.floor(vs))
        av = vs - v0
        v0c = min(max(v0, 0), h - 1)
        v1c = min(max(v0 + 1, 0), h - 1)
        for i in range(ww):
            us = (i + 0.5) / factor - 0.5
            u0 = int(np.floor(us))
            au = us - u0
            u0c = min(max(u0, 0), w - 1)
            u1c = min(max(u0 + 1, 0), w - 1)
            for ch in range(c):
                top = (1.0 - au) * field[v0c, u0c, ch] + au * field[v0c, u1c, ch]
                bot = (1.0 - au) * field[v1c, u0c, ch] + au * field[v1c, u1c, ch]
                out[j, i, ch] = (1.0 - av) * top + av * bot
    return out


@njit(cache=True)
def upsample_backward(grad, factor, h, w):
    hh, ww, c = grad.shape
    out = np.zeros((h, w, c))
    for j in range(hh):
        vs = (j + 0.5) / factor - 0.5
        v0 = int(np.floor(vs))
        av = vs - v0
        v0c = min(max(v0, 0), h - 1)
        v1c = min(max(v0 + 1, 0), h - 1)
        for i in range(ww):
            us = (i + 0.5) / factor - 0.5
            u0 = int(np.floor(us))
            au = us - u0
            u0c = min(max(u0, 0), w - 1)
            u1c = min(max(u0 + 1, 0), w - 1)
            for ch in range(c):
                g = grad[j, i, ch]
                out[v0c, u0c, ch] += (1.0 - av) * (1.0 - au) * g
                out[v0c, u1c, ch] += (1.0 - av) * au * g
                out[v1c, u0c, ch] += av * (1.0 - au) * g
                out[v1c, u1c, ch] += av * au * g
    return out


@njit(cache=True)
def warp_gather(up, flow):
    h, w, c = up.shape
    hh, ww = flow.shape[:2]
    out = np.zeros((hh, ww, c))
    for j in range(hh):
        for i in range(ww):
            us = i + flow[j, i, 0]
            vs = j + flow[j, i, 1]
            u0 = int(np.floor(us))
            v0 = int(np.floor(vs))
            au = us - u0
            av = vs - v0
            for dv in range(2):
                vv = v0 + dv
                if vv < 0 or vv >= h:
                    continue
                wv = av if dv else 1.0 - av
                for du in range(2):
                    uu = u0 + du
                    if uu < 0 or uu >= w:
                        continue
                    wgt = (au if du else 1.0 - au) * wv
                    for ch in range(c):
                        out[j, i, ch] += wgt * up[vv, uu, ch]
    return out


@njit(cache=True)
def warp_gather_backward(up, flow, grad):
    h, w, c = up.shape
    hh, ww = flow.shape[:2]
    g_up = np.zeros((h, w, c))
    g_flow = np.zeros((hh, ww, 2))
    for j in range(hh):
        for i in range(ww):
            us = i + flow[j, i, 0]
            vs = j + flow[j, i, 1]
            u0 = int(np.floor(us))
            v0 = int(np.floor(vs))
            au = us - u0
            av = vs - v0
            for dv in range(2):
                vv = v0 + dv
                if vv < 0 or vv >= h:
                    continue
                wv = av if dv else 1.0 - av
                sv = 1.0 if dv else -1.0
                for du in range(2):
                    uu = u0 + du
                    if uu < 0 or uu >= w:
                        continue
                    wu = au if du else 1.0 - au
                    su = 1.0 if du else -1.0
                    gdot = 0.0
                    for ch in range(c):
                        g = grad[j, i, ch]
                        g_up[vv, uu, ch] += wu * wv * g
                        gdot += g * up[vv, uu, ch]
                    g_flow[j, i, 0] += su * wv * gdot
                    g_flow[j, i, 1] += wu * sv * gdot
    return g_up, g_flow


@njit(cache=True)
def hough_splat(mass, tus, tvs, h, w):
    out = np.zeros((h, w))
    for i in range(mass.shape[0]):
        u0 = int(np.floor(tus[i]))
        v0 = int(np.floor(tvs[i]))
        au = tus[i] - u0
        av = tvs[i] - v0
        for dv in range(2):
            vv = v0 + dv
            if vv < 0 or vv >= h:
                continue
            wv = av if dv else 1.0 - av
            for du in range(2):
                uu = u0 + du
                if uu < 0 or uu >= w:
                    continue
                out[vv, uu] += mass[i] * (au if du else 1.0 - au) * wv
    return out


@njit(cache=True)
def segment_distance_field(ax, ay, bx, by, h, w):
    out = np.empty((h, w))
    dx = bx - ax
    dy = by - ay
    den = dx * dx + dy * dy
    for j in range(h):
        for i in range(w):
            if den == 0.0:
                out[j, i] = np.hypot(i - ax, j - ay)
            else:
                t = ((i - ax) * dx + (j - ay) * dy) / den
                t = min(max(t, 0.0), 1.0)
                out[j, i] = np.hypot(i - (ax + t * dx), j - (ay + t * dy))
    return out


@njit(cache=True)
def nearest_point_field(pxs, pys, h, w):
    out = np.empty((h, w, 2))
    npts = pxs.shape[0]
    for j in range(h):
        for i in range(w):
            best = 0
            bd = (pxs[0] - i) ** 2 + (pys[0] - j) ** 2
            for p in range(1, npts):
                d = (pxs[p] - i) ** 2 + (pys[p] - j) ** 2
                if d < bd:
                    bd = d
                    best = p
            out[j, i, 0] = pxs[best] - i
            out[j, i, 1] = pys[best] - j
    return out


@njit(cache=True)
def any_projection_near(pus, pvs, qx, qy, radius):
    r2 = radius * radius
    for i in range(pus.shape[0]):
        du = pus[i] - qx
        dv = pvs[i] - qy
        if du * du + dv * dv <= r2:
            return True
    return False


@njit(cache=True)
def group_argmin(pus, pvs, joint_u, joint_v, denom, pose_start, n_poses):
    n = pus.shape[0]
    best = np.zeros(n, dtype=np.int64)
    best_psi = np.empty(n)
    nj = joint_u.shape[0]
    inv_d2 = np.empty(nj)
    for jj in range(nj):
        inv_d2[jj] = 1.0 / (denom[jj] * denom[jj])
    for i in range(n):
        bpsi = np.inf  # compared on squared ratios, sqrt taken once at the end
        bp = 0
        for p in range(n_poses):
            psi = np.inf
            for jj in range(pose_start[p], pose_start[p + 1]):
                du = pus[i] - joint_u[jj]
                dv = pvs[i] - joint_v[jj]
                d = (du * du + dv * dv) * inv_d2[jj]
                if d < psi:
                    psi = d
            if psi < bpsi:
                bpsi = psi
                bp = p
        best[i] = bp
        best_psi[i] = np.sqrt(bpsi)
    return best, best_psi


@njit(cache=True)
def dykstra(y, max_cycles, tol):
    n, m = y.shape
    row_mask = np.zeros((max_cycles, n), dtype=np.uint8)
    col_mask = np.zeros((max_cycles, m), dtype=np.uint8)
    clamp_mask = np.zeros((max_cycles, n, m), dtype=np.uint8)
    x = y.copy()
    p1 = np.zeros((n, m))
    p2 = np.zeros((n, m))
    p3 = np.zeros((n, m))
    x_prev = np.empty((n, m))
    p1_prev = np.empty((n, m))
    p2_prev = np.empty((n, m))
    p3_prev = np.empty((n, m))
    margin = np.inf
    cycles = 0
    for k in range(max_cycles):
        # Convergence is judged on the full Dykstra state: the iterate can
        # plateau while the corrections still drift toward feasibility.
        for r in range(n):
            for cc in range(m):
                x_prev[r, cc] = x[r, cc]
                p1_prev[r, cc] = p1[r, cc]
                p2_prev[r, cc] = p2[r, cc]
                p3_prev[r, cc] = p3[r, cc]
        # C1: per-row halfspace (row sum <= 1)
        for r in range(n):
            s = 0.0
            for cc in range(m):
                p1[r, cc] += x[r, cc]  # p1 temporarily holds t = x + p1
                s += p1[r, cc]
            if abs(s - 1.0) < margin:
                margin = abs(s - 1.0)
            if s > 1.0:
                row_mask[k, r] = 1
                corr = (s - 1.0) / m
                for cc in range(m):
                    x[r, cc] = p1[r, cc] - corr
                    p1[r, cc] = corr
            else:
                for cc in range(m):
                    x[r, cc] = p1[r, cc]
                    p1[r, cc] = 0.0
        # C2: per-column halfspace (column sum <= 1)
        for cc in range(m):
            s = 0.0
            for r in range(n):
                p2[r, cc] += x[r, cc]
                s += p2[r, cc]
            if abs(s - 1.0) < margin:
                margin = abs(s - 1.0)
            if s > 1.0:
                col_mask[k, cc] = 1
                corr = (s - 1.0) / n
                for r in range(n):
                    x[r, cc] = p2[r, cc] - corr
                    p2[r, cc] = corr
            else:
                for r in range(n):
                    x[r, cc] = p2[r, cc]
                    p2[r, cc] = 0.0
        # C3: nonnegativity clamp
        for r in range(n):
            for cc in range(m):
                t = x[r, cc] + p3[r, cc]
                if abs(t) < margin:
                    margin = abs(t)
                if t > 0.0:
                    clamp_mask[k, r, cc] = 1
                    x[r, cc] = t
                    p3[r, cc] = 0.0
                else:
                    x[r, cc] = 0.0
                    p3[r, cc] = t
        cycles = k + 1
        disp = 0.0
        for r in range(n):
            for cc in range(m):
                d = x[r, cc] - x_prev[r, cc]
                disp += d * d
                d = p1[r, cc] - p1_prev[r, cc]
                disp += d * d
                d = p2[r, cc] - p2_prev[r, cc]
                disp += d * d
                d = p3[r, cc] - p3_prev[r, cc]
                disp += d * d
        if np.sqrt(disp) < tol:
            break
    return x, cycles, margin, row_mask, col_mask, clamp_mask


@njit(cache=True)
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
    y_prev = np.empty((n, m))
    n_steps = iters
    for step in range(total):
        for r in range(n):
            for cc in range(m):
                y_prev[r, cc] = y[r, cc]
        if step > 0:
            for r in range(n):
                for cc in range(m):
                    y[r, cc] += alpha * vals[r, cc]
        y, cyc, margin, rm, cm, km = dykstra(y, max_cycles, tol)
        cycles[step] = cyc
        margins[step] = margin
        row_masks[step] = rm
        col_masks[step] = cm
        clamp_masks[step] = km
        if step > 0:
            obj = 0.0
            rexc = 0.0
            neg = 0.0
            disp = 0.0
            for r in range(n):
                s = 0.0
                for cc in range(m):
                    obj += vals[r, cc] * y[r, cc]
                    s += y[r, cc]
                    if -y[r, cc] > neg:
                        neg = -y[r, cc]
                    d = y[r, cc] - y_prev[r, cc]
                    disp += d * d
                if s - 1.0 > rexc:
                    rexc = s - 1.0
            for cc in range(m):
                s = 0.0
                for r in range(n):
                    s += y[r, cc]
                if s - 1.0 > rexc:
                    rexc = s - 1.0
            objectives[step - 1] = obj
            feas[step - 1] = max(rexc, neg)
            # stationary iterate = solved; remaining steps would be no-ops
            if np.sqrt(disp) < tol:
                n_steps = step
                break
    return y, row_masks, col_masks, clamp_masks, cycles, margins, objectives, feas, n_steps


@njit(cache=True)
def dykstra_backward(grad, row_mask, col_mask, clamp_mask, cycles):
    n, m = grad.shape
    gx = grad.copy()
    gp1 = np.zeros((n, m))
    gp2 = np.zeros((n, m))
    gp3 = np.zeros((n, m))
    for k in range(cycles - 1, -1, -1):
        # clamp
        for r in range(n):
            for cc in range(m):
                gy = gx[r, cc] - gp3[r, cc]
                gt = gp3[r, cc] + (gy if clamp_mask[k, r, cc] else 0.0)
                gx[r, cc] = gt
                gp3[r, cc] = gt
        # columns
        for cc in range(m):
            s = 0.0
            for r in range(n):
                s += gx[r, cc] - gp2[r, cc]
            corr = s / n if col_mask[k, cc] else 0.0
            for r in range(n):
                gt = gp2[r, cc] + (gx[r, cc] - gp2[r, cc]) - corr
                gx[r, cc] = gt
                gp2[r, cc] = gt
        # rows
        for r in range(n):
            s = 0.0
            for cc in range(m):
                s += gx[r, cc] - gp1[r, cc]
            corr = s / m if row_mask[k, r] else 0.0
            for cc in range(m):
                gt = gp1[r, cc] + (gx[r, cc] - gp1[r, cc]) - corr
                gx[r, cc] = gt
                gp1[r, cc] = gt
    return gx
