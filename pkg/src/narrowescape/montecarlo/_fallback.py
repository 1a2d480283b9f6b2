"""Vectorised numpy version of the compiled kernels.

Same algorithm and the same per-path SplitMix64 streams as `_kernels.pyx`;
paths advance in lock step over masked arrays. Results match the compiled
kernel up to floating-point rounding in libm.
"""
from __future__ import annotations

import numpy as np

from ._layout import MAX_REFLECT

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
STREAM_MUL = np.uint64(0xD1B54A32D192ED03)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
U53 = 1.1102230246251565e-16


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * M1
    z = (z ^ (z >> np.uint64(27))) * M2
    return z ^ (z >> np.uint64(31))


def stream_states(seed, idx):
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed) + GOLDEN)
        return _mix64(base ^ (np.asarray(idx, dtype=np.uint64) * STREAM_MUL + np.uint64(1)))


def next_uniform(state, sel):
    """Advance the streams at positions `sel` and return one uniform each."""
    with np.errstate(over="ignore"):
        state[sel] += GOLDEN
        z = _mix64(state[sel])
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * U53


def polar_pairs(state, sel):
    n = sel.size
    n1 = np.empty(n)
    n2 = np.empty(n)
    todo = np.arange(n)
    while todo.size:
        v1 = 2.0 * next_uniform(state, sel[todo]) - 1.0
        v2 = 2.0 * next_uniform(state, sel[todo]) - 1.0
        r2 = v1 * v1 + v2 * v2
        ok = (r2 < 1.0) & (r2 > 0.0)
        f = np.sqrt(-2.0 * np.log(r2[ok]) / r2[ok])
        n1[todo[ok]] = v1[ok] * f
        n2[todo[ok]] = v2[ok] * f
        todo = todo[~ok]
    return n1, n2


def uniforms(seed, idx, count):
    state = stream_states(seed, np.array([idx]))
    sel = np.zeros(1, dtype=np.intp)
    return np.array([next_uniform(state, sel)[0] for _ in range(count)])


# ---------------------------------------------------------------------------
# planar primitives
# ---------------------------------------------------------------------------

def prim_dist(p, x, y):
    kind = int(p[0])
    if kind == 0:
        return p[3] - np.hypot(x - p[1], y - p[2])
    if kind == 1:
        return np.hypot(x - p[1], y - p[2]) - p[3]
    return p[3] - (p[1] * x + p[2] * y)


def prim_cross(p, x, y, dx, dy):
    kind = int(p[0])
    out = np.full(x.shape, 2.0)
    if kind == 2:
        f0 = p[1] * x + p[2] * y - p[3]
        f1 = f0 + p[1] * dx + p[2] * dy
        hit = f1 > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(f0 >= 0.0, 0.0, -f0 / (f1 - f0))
        out[hit] = s[hit]
        return out
    fx = x - p[1]
    fy = y - p[2]
    a = dx * dx + dy * dy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - p[3] * p[3]
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == 0:
            hit = (a != 0.0) & (c + 2.0 * b + a > 0.0)
            disc = np.maximum(b * b - a * c, 0.0)
            s = (-b + np.sqrt(disc)) / a
        else:
            disc = b * b - a * c
            hit = (a != 0.0) & (b < 0.0) & (disc > 0.0)
            s = (-b - np.sqrt(np.maximum(disc, 0.0))) / a
            hit &= s <= 1.0
    out[hit] = np.clip(s[hit], 0.0, 1.0)
    return out


def prim_normal(p, x, y):
    kind = int(p[0])
    if kind == 2:
        return np.full(x.shape, p[1]), np.full(x.shape, p[2])
    rx = x - p[1]
    ry = y - p[2]
    r = np.hypot(rx, ry)
    zero = r == 0.0
    rx = np.where(zero, 1.0, rx)
    ry = np.where(zero, 0.0, ry)
    r = np.where(zero, 1.0, r)
    sgn = 1.0 if kind == 0 else -1.0
    return sgn * rx / r, sgn * ry / r


def in_window(p, x, y):
    wk = int(p[5])
    if wk < 0:
        return np.zeros(x.shape, dtype=bool)
    if wk == 0:
        rx = x - p[1]
        ry = y - p[2]
        r = np.hypot(rx, ry)
        return (r != 0.0) & (rx * p[6] + ry * p[7] >= p[8] * r)
    if wk == 1:
        t = x * p[2] - y * p[1]
        return (t >= p[6]) & (t <= p[7])
    if wk == 2:
        return x * x + y * y < p[6] * p[6]
    return np.ones(x.shape, dtype=bool)


def window_dist(p, x, y):
    wk = int(p[5])
    inside = in_window(p, x, y)
    if wk == 3:
        return np.abs(prim_dist(p, x, y))
    if wk == 2:
        return np.where(inside, 0.0, np.hypot(x, y) - p[6])
    along = inside
    if wk == 1:
        t = x * p[2] - y * p[1]
        along = (t >= p[6]) & (t <= p[7])
    ends = np.minimum(np.hypot(x - p[9], y - p[10]), np.hypot(x - p[11], y - p[12]))
    return np.where(along, np.abs(prim_dist(p, x, y)), ends)


def project(p, x, y):
    kind = int(p[0])
    if kind == 2:
        f = p[1] * x + p[2] * y - p[3]
        return x - f * p[1], y - f * p[2]
    rx = x - p[1]
    ry = y - p[2]
    r = np.hypot(rx, ry)
    zero = r == 0.0
    r = np.where(zero, 1.0, r)
    return (np.where(zero, x, p[1] + p[3] * rx / r), np.where(zero, y, p[2] + p[3] * ry / r))


def planar_step_size(prims, x, y, par):
    D, dt, hmax = par[0], par[1], par[2]
    dtl = np.full(x.shape, dt)
    if par[5] != 0.0:
        r2 = ((x - par[6]) ** 2 + (y - par[7]) ** 2) / par[8]
        dtl = dt * np.clip(r2, 1e-4, 1.0)
    if par[4] == 0.0:
        return dtl
    h = np.full(x.shape, hmax)
    windowed = [p for p in prims if p[5] >= 0.0]
    curved = [p for p in prims if p[4] > 0.0]
    if windowed:
        dmin = np.min([window_dist(p, x, y) for p in windowed], axis=0)
        h = np.minimum(h, (dmin / 5.0) ** 2 / (2.0 * D))
    if curved:
        dists = np.array([prim_dist(p, x, y) for p in curved])
        if len(curved) >= 2:
            two = np.sort(dists, axis=0)[:2]
            gap = two[0] + two[1]
        else:
            gap = np.full(x.shape, 1e300)
        for p, d in zip(curved, dists):
            floor = np.minimum(p[4], gap / 4.0)
            h = np.minimum(h, np.maximum(d / 3.0, floor) ** 2 / (2.0 * D))
    return np.maximum(h, dtl)


def planar(starts, prims, par, seed, nthreads=1):
    """Run one path per row of `starts`; returns (tau, status, steps)."""
    starts = np.ascontiguousarray(starts, dtype=np.float64)
    prims = np.ascontiguousarray(prims, dtype=np.float64)
    n = starts.shape[0]
    D, max_time, bridge = par[0], par[3], par[9] != 0.0
    x = starts[:, 0].copy()
    y = starts[:, 1].copy()
    t = np.zeros(n)
    tau = np.zeros(n)
    status = np.ones(n, dtype=np.int8)
    steps = np.zeros(n, dtype=np.int64)
    state = stream_states(seed, np.arange(n))
    live = np.arange(n)
    windowed = [k for k in range(len(prims)) if prims[k, 5] >= 0.0]
    while True:
        live = live[t[live] < max_time]
        if live.size == 0:
            break
        xl, yl = x[live], y[live]
        h = planar_step_size(prims, xl, yl, par)
        sig = np.sqrt(2.0 * D * h)
        n1, n2 = polar_pairs(state, live)
        dx, dy = sig * n1, sig * n2
        used = np.zeros(live.size)
        rem = np.ones(live.size)
        nref = np.zeros(live.size, dtype=np.int64)
        steps[live] += 1
        absorbed = np.zeros(live.size, dtype=bool)
        moving = np.arange(live.size)
        while moving.size:
            xm, ym, dxm, dym = xl[moving], yl[moving], dx[moving], dy[moving]
            cross = np.array([prim_cross(p, xm, ym, dxm, dym) for p in prims])
            kbest = np.argmin(cross, axis=0)
            sbest = cross[kbest, np.arange(moving.size)]
            hit = sbest < 2.0
            moving, kbest, sbest = moving[hit], kbest[hit], sbest[hit]
            if moving.size == 0:
                break
            px = xl[moving] + sbest * dx[moving]
            py = yl[moving] + sbest * dy[moving]
            used[moving] += sbest * rem[moving]
            rem[moving] *= 1.0 - sbest
            win = np.zeros(moving.size, dtype=bool)
            for k in windowed:
                sel = kbest == k
                win[sel] = in_window(prims[k], px[sel], py[sel])
            ia = moving[win]
            tau[live[ia]] = t[live[ia]] + used[ia] * h[ia]
            status[live[ia]] = 0
            absorbed[ia] = True
            keep = ~win
            moving, kbest, sbest, px, py = moving[keep], kbest[keep], sbest[keep], px[keep], py[keep]
            nref[moving] += 1
            stuck = nref[moving] > MAX_REFLECT
            st = moving[stuck]
            xl[st], yl[st], dx[st], dy[st] = px[stuck], py[stuck], 0.0, 0.0
            go = ~stuck
            moving, kbest, sbest, px, py = moving[go], kbest[go], sbest[go], px[go], py[go]
            for k in range(len(prims)):
                sel = kbest == k
                if not sel.any():
                    continue
                idx = moving[sel]
                nx, ny = prim_normal(prims[k], px[sel], py[sel])
                rx = dx[idx] * (1.0 - sbest[sel])
                ry = dy[idx] * (1.0 - sbest[sel])
                dot = rx * nx + ry * ny
                dx[idx] = rx - 2.0 * dot * nx
                dy[idx] = ry - 2.0 * dot * ny
            xl[moving] = px
            yl[moving] = py
        rest = ~absorbed
        xs, ys = xl.copy(), yl.copy()
        xl = xl + dx
        yl = yl + dy
        if bridge:
            cand = np.nonzero(rest & (rem > 0.0))[0]
            for k in windowed:
                if cand.size == 0:
                    break
                p = prims[k]
                d0 = np.maximum(prim_dist(p, xs[cand], ys[cand]), 0.0)
                d1 = np.maximum(prim_dist(p, xl[cand], yl[cand]), 0.0)
                tot = d0 + d1
                with np.errstate(divide="ignore", invalid="ignore"):
                    arg = d0 * d1 / (D * h[cand] * rem[cand])
                    f = d0 / tot
                ok = (tot > 0.0) & (arg < 40.0)
                c2, f, arg = cand[ok], f[ok], arg[ok]
                qx, qy = project(p, xs[c2] + f * dx[c2], ys[c2] + f * dy[c2])
                inw = in_window(p, qx, qy)
                c2, f, arg = c2[inw], f[inw], arg[inw]
                u = next_uniform(state, live[c2])
                hit = u < np.exp(-arg)
                ih = c2[hit]
                tau[live[ih]] = t[live[ih]] + (used[ih] + f[hit] * rem[ih]) * h[ih]
                status[live[ih]] = 0
                absorbed[ih] = True
                cand = cand[~np.isin(cand, ih)]
        x[live] = xl
        y[live] = yl
        t[live] += h
        live = live[~absorbed]
    cens = status == 1
    tau[cens] = t[cens]
    return tau, status, steps


# ---------------------------------------------------------------------------
# decapitated sphere
# ---------------------------------------------------------------------------

def _rim_window(par, x, y):
    if par[8] == 0.0:
        return np.ones(x.shape, dtype=bool)
    r = np.hypot(x, y)
    return (r != 0.0) & (x * par[9] + y * par[10] >= par[11] * r)


def sphere_step_size(par, x, y, z):
    R, D, dt, hmax = par[0], par[1], par[2], par[3]
    if par[5] == 0.0:
        return np.full(x.shape, dt)
    th = np.arccos(np.clip(z / R, -1.0, 1.0))
    drim = np.maximum(R * (th - par[17]), 0.0)
    h = np.full(x.shape, hmax)
    far = z < par[15]
    if par[8] == 0.0:
        d = drim / 5.0
    else:
        d1 = np.sqrt((x - par[18]) ** 2 + (y - par[19]) ** 2 + (z - par[20]) ** 2)
        d2 = np.sqrt((x - par[21]) ** 2 + (y - par[22]) ** 2 + (z - par[20]) ** 2)
        d = np.where(_rim_window(par, x, y), drim, np.minimum(d1, d2)) / 5.0
        w = np.maximum(drim / 3.0, par[12])
        h = np.minimum(h, w * w / (2.0 * D))
    h = np.minimum(h, d * d / (2.0 * D))
    return np.where(far, hmax, np.maximum(h, dt))


def sphere(starts, par, seed, nthreads=1):
    """Run one path per row of `starts` (Cartesian points on the sphere)."""
    starts = np.ascontiguousarray(starts, dtype=np.float64)
    n = starts.shape[0]
    R, D, max_time = par[0], par[1], par[4]
    zc, delta = R * par[6], par[17]
    cos2d, sin2d = par[13], par[14]
    bridge = par[16] != 0.0
    x, y, z = (starts[:, i].copy() for i in range(3))
    t = np.zeros(n)
    tau = np.zeros(n)
    status = np.ones(n, dtype=np.int8)
    steps = np.zeros(n, dtype=np.int64)
    state = stream_states(seed, np.arange(n))
    live = np.arange(n)
    while True:
        live = live[t[live] < max_time]
        if live.size == 0:
            break
        xl, yl, zl = x[live], y[live], z[live]
        h = sphere_step_size(par, xl, yl, zl)
        sig = np.sqrt(2.0 * D * h)
        n1, n2 = polar_pairs(state, live)
        steps[live] += 1
        ux, uy, uz = xl / R, yl / R, zl / R
        sg = np.where(uz >= 0.0, 1.0, -1.0)
        a = -1.0 / (sg + uz)
        b = ux * uy * a
        qx = xl + sig * (n1 * (1.0 + sg * ux * ux * a) + n2 * b)
        qy = yl + sig * (n1 * sg * b + n2 * (sg + uy * uy * a))
        qz = zl + sig * (n1 * (-sg * ux) + n2 * (-uy))
        q = R / np.sqrt(qx * qx + qy * qy + qz * qz)
        qx, qy, qz = qx * q, qy * q, qz * q
        absorbed = np.zeros(live.size, dtype=bool)
        up = qz > zc
        with np.errstate(divide="ignore", invalid="ignore"):
            f = (zc - zl) / (qz - zl)
        hit = up & _rim_window(par, xl + f * (qx - xl), yl + f * (qy - yl))
        ih = np.nonzero(hit)[0]
        tau[live[ih]] = t[live[ih]] + f[ih] * h[ih]
        status[live[ih]] = 0
        absorbed[ih] = True
        refl = up & ~hit
        rho = np.hypot(qx, qy)
        c1 = qz / R
        st = sin2d * c1 - cos2d * rho / R
        ct = cos2d * c1 + sin2d * rho / R
        safe = np.where(rho > 0.0, rho, 1.0)
        nxr = np.where(rho > 0.0, R * st * qx / safe, R * st)
        nyr = np.where(rho > 0.0, R * st * qy / safe, 0.0)
        if bridge:
            cand = np.nonzero(~up)[0]
            d0 = np.maximum(R * (np.arccos(np.minimum(zl[cand] / R, 1.0)) - delta), 0.0)
            d1 = np.maximum(R * (np.arccos(np.maximum(qz[cand] / R, -1.0)) - delta), 0.0)
            tot = d0 + d1
            with np.errstate(divide="ignore", invalid="ignore"):
                arg = d0 * d1 / (D * h[cand])
                fb = d0 / tot
            ok = (tot > 0.0) & (arg < 40.0)
            cand, arg, fb = cand[ok], arg[ok], fb[ok]
            mx = xl[cand] + fb * (qx[cand] - xl[cand])
            my = yl[cand] + fb * (qy[cand] - yl[cand])
            inw = _rim_window(par, mx, my)
            cand, arg, fb = cand[inw], arg[inw], fb[inw]
            u = next_uniform(state, live[cand])
            bh = u < np.exp(-arg)
            ib = cand[bh]
            tau[live[ib]] = t[live[ib]] + fb[bh] * h[ib]
            status[live[ib]] = 0
            absorbed[ib] = True
        x[live] = np.where(refl, nxr, qx)
        y[live] = np.where(refl, nyr, qy)
        z[live] = np.where(refl, R * ct, qz)
        t[live] += h
        live = live[~absorbed]
    cens = status == 1
    tau[cens] = t[cens]
    return tau, status, steps
