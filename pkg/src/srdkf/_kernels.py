"""Compiled inner loops (numba) shared by the set algebra and risk modules."""

import numpy as np
from numba import njit


@njit(cache=True)
def box_qp_cd(W, u, tol, max_sweeps):
    """Minimize ||u - W b||^2 over the box b in [-1, 1]^e.

    Cyclic coordinate descent with exact clamped 1-D minimization per
    coordinate.  Converged when the max coordinate change over a sweep is
    below ``tol``, or when the (monotone) objective has stalled at machine
    precision for several sweeps; the latter handles rank-deficient W,
    where the minimizing set is an affine piece and coordinates can wander
    along it long after the value has converged.

    Returns (beta, residual, sweeps, converged).
    """
    m, e = W.shape
    beta = np.zeros(e)
    r = u.copy()
    wsq = np.empty(e)
    for j in range(e):
        s = 0.0
        for i in range(m):
            s += W[i, j] * W[i, j]
        wsq[j] = s

    sweeps = 0
    converged = False
    obj_prev = 1e300
    stalled = 0
    for _ in range(max_sweeps):
        sweeps += 1
        max_delta = 0.0
        for j in range(e):
            if wsq[j] == 0.0:
                continue
            dot = 0.0
            for i in range(m):
                dot += W[i, j] * r[i]
            b_new = beta[j] + dot / wsq[j]
            if b_new > 1.0:
                b_new = 1.0
            elif b_new < -1.0:
                b_new = -1.0
            d = b_new - beta[j]
            if d != 0.0:
                beta[j] = b_new
                for i in range(m):
                    r[i] -= W[i, j] * d
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            converged = True
            break
        obj = 0.0
        for i in range(m):
            obj += r[i] * r[i]
        if obj_prev - obj <= 1e-14 * (obj + 1e-300):
            stalled += 1
            if stalled >= 3:
                converged = True
                break
        else:
            stalled = 0
        obj_prev = obj
    return beta, r, sweeps, converged


@njit(cache=True)
def compact2d(G, angle_tol, drop_tol):
    """Conservative 2-D generator compaction (see netsim.compact_generators).

    Merges near-parallel columns along the cluster leader and absorbs
    sub-threshold columns plus merge residuals into an axis-aligned box.
    The result spans a superset of the input zonotope.
    """
    e = G.shape[1]
    norms = np.empty(e)
    total = 0.0
    for j in range(e):
        norms[j] = np.hypot(G[0, j], G[1, j])
        total += norms[j]
    if total == 0.0:
        return np.zeros((2, 0))
    # canonical upper-half-plane directions
    flipped = np.empty((2, e))
    for j in range(e):
        if G[1, j] < 0.0 or (G[1, j] == 0.0 and G[0, j] < 0.0):
            flipped[0, j] = -G[0, j]
            flipped[1, j] = -G[1, j]
        else:
            flipped[0, j] = G[0, j]
            flipped[1, j] = G[1, j]
    angles = np.empty(e)
    for j in range(e):
        angles[j] = np.arctan2(flipped[1, j], flipped[0, j])
    order = np.argsort(angles)

    out = np.empty((2, e + 2))
    n_out = 0
    bx = 0.0
    by = 0.0
    ux = 0.0
    uy = 0.0
    length = 0.0
    open_angle = -1e30
    for idx in range(e):
        j = order[idx]
        if norms[j] <= drop_tol * total:
            bx += abs(flipped[0, j])
            by += abs(flipped[1, j])
            continue
        if angles[j] - open_angle > angle_tol:
            if length > 0.0:
                out[0, n_out] = ux * length
                out[1, n_out] = uy * length
                n_out += 1
            ux = flipped[0, j] / norms[j]
            uy = flipped[1, j] / norms[j]
            length = 0.0
            open_angle = angles[j]
        proj = flipped[0, j] * ux + flipped[1, j] * uy
        length += proj
        rx = flipped[0, j] - proj * ux
        ry = flipped[1, j] - proj * uy
        bx += abs(rx)
        by += abs(ry)
    if length > 0.0:
        out[0, n_out] = ux * length
        out[1, n_out] = uy * length
        n_out += 1
    if bx > 0.0:
        out[0, n_out] = bx
        out[1, n_out] = 0.0
        n_out += 1
    if by > 0.0:
        out[0, n_out] = 0.0
        out[1, n_out] = by
        n_out += 1
    return out[:, :n_out].copy()


@njit(cache=True)
def clipped_strip_area(verts, alert_limit):
    """Area of a convex polygon outside the strip |x| < alert_limit.

    Sutherland-Hodgman clip against x >= AL and x <= -AL, shoelace on each
    clipped polygon.  ``verts`` is (m, 2), counter-clockwise.
    """
    m = verts.shape[0]
    if m < 3:
        return 0.0
    total = 0.0
    # side = +1 clips against x >= AL, side = -1 against x <= -AL
    for side in (1.0, -1.0):
        buf = np.empty((m + 4, 2))
        nout = 0
        px = verts[m - 1, 0]
        py = verts[m - 1, 1]
        pin = side * px >= alert_limit
        for i in range(m):
            cx = verts[i, 0]
            cy = verts[i, 1]
            cin = side * cx >= alert_limit
            if cin != pin:
                # edge crosses the clip line x = side*AL
                t = (side * alert_limit - px) / (cx - px)
                buf[nout, 0] = side * alert_limit
                buf[nout, 1] = py + t * (cy - py)
                nout += 1
            if cin:
                buf[nout, 0] = cx
                buf[nout, 1] = cy
                nout += 1
            px = cx
            py = cy
            pin = cin
        if nout >= 3:
            area2 = 0.0
            for i in range(nout):
                j = i + 1
                if j == nout:
                    j = 0
                area2 += buf[i, 0] * buf[j, 1] - buf[j, 0] * buf[i, 1]
            total += abs(area2) * 0.5
    return total


@njit(cache=True)
def leveled_strip_areas(dirs, is_tail, gammas, cx, cy, alert_limit):
    """Unsafe-strip intersection areas for a family of confidence polytopes.

    ``dirs`` is (2, e) of canonicalized generator directions (y >= 0) sorted
    by angle, covering both the fixed generators and the two covariance
    square-root columns; ``is_tail`` marks the latter, whose lengths scale
    with each entry of ``gammas``.  (cx, cy) is the common center.  Returns
    one area per gamma.
    """
    e = dirs.shape[1]
    n_lev = gammas.shape[0]
    areas = np.empty(n_lev)
    verts = np.empty((2 * e + 2, 2))
    for L in range(n_lev):
        g = gammas[L]
        # scaled generator sweep: upper chain from c - S to c + S
        sx = 0.0
        sy = 0.0
        for j in range(e):
            f = g if is_tail[j] else 1.0
            sx += f * dirs[0, j]
            sy += f * dirs[1, j]
        nv = 0
        vx = cx - sx
        vy = cy - sy
        verts[nv, 0] = vx
        verts[nv, 1] = vy
        nv += 1
        for j in range(e):
            f = g if is_tail[j] else 1.0
            dx = 2.0 * f * dirs[0, j]
            dy = 2.0 * f * dirs[1, j]
            if dx == 0.0 and dy == 0.0:
                continue
            vx += dx
            vy += dy
            verts[nv, 0] = vx
            verts[nv, 1] = vy
            nv += 1
        # lower chain: central reflections of the interior upper points,
        # repeating the generator sequence from the start
        top = nv
        for j in range(1, top - 1):
            verts[nv, 0] = 2.0 * cx - verts[j, 0]
            verts[nv, 1] = 2.0 * cy - verts[j, 1]
            nv += 1
        areas[L] = clipped_strip_area(verts[:nv], alert_limit)
    return areas
