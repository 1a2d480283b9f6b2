# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled reflected Brownian motion kernels.

Each path owns a SplitMix64 stream derived from (seed, path index), so the
per-path output does not depend on how paths are spread over threads. The
layout of `prims` and `par` is documented in `_layout.py`.
"""
from cython.parallel cimport prange
from libc.math cimport sqrt, log, exp, acos, fabs, hypot
from libc.stdint cimport uint64_t, int64_t, int8_t

import numpy as np

cdef enum:
    NCOL = 13
    MAX_REFLECT = 64

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MUL = 0xD1B54A32D192ED03ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_state(uint64_t seed, uint64_t idx) noexcept nogil:
    return mix64(mix64(seed + GOLDEN) ^ (idx * STREAM_MUL + 1))


cdef inline double next_uniform(uint64_t* s) noexcept nogil:
    s[0] += GOLDEN
    return (<double>(mix64(s[0]) >> 11) + 0.5) * 1.1102230246251565e-16


cdef inline void polar_pair(uint64_t* s, double* n1, double* n2) noexcept nogil:
    cdef double v1, v2, r2, f
    while True:
        v1 = 2.0 * next_uniform(s) - 1.0
        v2 = 2.0 * next_uniform(s) - 1.0
        r2 = v1 * v1 + v2 * v2
        if r2 < 1.0 and r2 > 0.0:
            break
    f = sqrt(-2.0 * log(r2) / r2)
    n1[0] = v1 * f
    n2[0] = v2 * f


# ---------------------------------------------------------------------------
# planar primitives
# ---------------------------------------------------------------------------

cdef inline double prim_dist(const double* p, double x, double y) noexcept nogil:
    """Signed distance to the primitive, positive on the domain side."""
    cdef int kind = <int>p[0]
    if kind == 0:
        return p[3] - hypot(x - p[1], y - p[2])
    if kind == 1:
        return hypot(x - p[1], y - p[2]) - p[3]
    return p[3] - (p[1] * x + p[2] * y)


cdef inline double prim_cross(const double* p, double x, double y, double dx, double dy) noexcept nogil:
    """Fraction in [0, 1] where the segment leaves the domain side, or 2."""
    cdef int kind = <int>p[0]
    cdef double fx, fy, a, b, c, e, disc, s, f0, f1
    if kind == 2:
        f0 = p[1] * x + p[2] * y - p[3]
        f1 = f0 + p[1] * dx + p[2] * dy
        if f1 <= 0.0:
            return 2.0
        if f0 >= 0.0:
            return 0.0
        return -f0 / (f1 - f0)
    fx = x - p[1]
    fy = y - p[2]
    a = dx * dx + dy * dy
    if a == 0.0:
        return 2.0
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - p[3] * p[3]
    if kind == 0:
        e = c + 2.0 * b + a
        if e <= 0.0:
            return 2.0
        disc = b * b - a * c
        if disc < 0.0:
            disc = 0.0
        s = (-b + sqrt(disc)) / a
    else:
        if b >= 0.0:
            return 2.0
        disc = b * b - a * c
        if disc <= 0.0:
            return 2.0
        s = (-b - sqrt(disc)) / a
        if s > 1.0:
            return 2.0
    if s < 0.0:
        s = 0.0
    if s > 1.0:
        s = 1.0
    return s


cdef inline void prim_normal(const double* p, double x, double y, double* nx, double* ny) noexcept nogil:
    """Outward unit normal (pointing out of the domain) at a boundary point."""
    cdef int kind = <int>p[0]
    cdef double rx, ry, r
    if kind == 2:
        nx[0] = p[1]
        ny[0] = p[2]
        return
    rx = x - p[1]
    ry = y - p[2]
    r = hypot(rx, ry)
    if r == 0.0:
        rx = 1.0
        ry = 0.0
        r = 1.0
    if kind == 0:
        nx[0] = rx / r
        ny[0] = ry / r
    else:
        nx[0] = -rx / r
        ny[0] = -ry / r


cdef inline int in_window(const double* p, double x, double y) noexcept nogil:
    cdef int wk = <int>p[5]
    cdef double rx, ry, r, t
    if wk < 0:
        return 0
    if wk == 0:
        rx = x - p[1]
        ry = y - p[2]
        r = hypot(rx, ry)
        if r == 0.0:
            return 0
        return (rx * p[6] + ry * p[7]) >= p[8] * r
    if wk == 1:
        t = x * p[2] - y * p[1]
        return t >= p[6] and t <= p[7]
    if wk == 2:
        return x * x + y * y < p[6] * p[6]
    return 1


cdef inline double window_dist(const double* p, double x, double y) noexcept nogil:
    cdef int wk = <int>p[5]
    cdef double d1, d2, t
    if wk == 3 or in_window(p, x, y):
        if wk == 2:
            return 0.0
        return fabs(prim_dist(p, x, y))
    if wk == 2:
        return hypot(x, y) - p[6]
    if wk == 1:
        t = x * p[2] - y * p[1]
        if t >= p[6] and t <= p[7]:
            return fabs(prim_dist(p, x, y))
    d1 = hypot(x - p[9], y - p[10])
    d2 = hypot(x - p[11], y - p[12])
    return d1 if d1 < d2 else d2


cdef inline void project(const double* p, double x, double y, double* qx, double* qy) noexcept nogil:
    cdef int kind = <int>p[0]
    cdef double rx, ry, r, f
    if kind == 2:
        f = p[1] * x + p[2] * y - p[3]
        qx[0] = x - f * p[1]
        qy[0] = y - f * p[2]
        return
    rx = x - p[1]
    ry = y - p[2]
    r = hypot(rx, ry)
    if r == 0.0:
        qx[0] = x
        qy[0] = y
        return
    qx[0] = p[1] + p[3] * rx / r
    qy[0] = p[2] + p[3] * ry / r


cdef double planar_step_size(const double* prims, int npr, double x, double y,
                             const double* par) noexcept nogil:
    cdef double D = par[0], dt = par[1], hmax = par[2]
    cdef double dtl = dt, r2, h, d, floor, gap, m1, m2, dmin
    cdef int k, ncurved = 0
    cdef const double* p
    if par[5] != 0.0:
        r2 = ((x - par[6]) * (x - par[6]) + (y - par[7]) * (y - par[7])) / par[8]
        if r2 < 1e-4:
            r2 = 1e-4
        if r2 > 1.0:
            r2 = 1.0
        dtl = dt * r2
    if par[4] == 0.0:
        return dtl
    h = hmax
    dmin = 1e300
    m1 = 1e300
    m2 = 1e300
    for k in range(npr):
        p = prims + k * NCOL
        if p[5] >= 0.0:
            d = window_dist(p, x, y)
            if d < dmin:
                dmin = d
        if p[4] > 0.0:
            ncurved += 1
            d = prim_dist(p, x, y)
            if d < m1:
                m2 = m1
                m1 = d
            elif d < m2:
                m2 = d
    if dmin < 1e300:
        d = dmin / 5.0
        if d * d / (2.0 * D) < h:
            h = d * d / (2.0 * D)
    gap = m1 + m2 if ncurved >= 2 else 1e300
    for k in range(npr):
        p = prims + k * NCOL
        if p[4] > 0.0:
            floor = p[4]
            if gap / 4.0 < floor:
                floor = gap / 4.0
            d = prim_dist(p, x, y) / 3.0
            if d < floor:
                d = floor
            if d * d / (2.0 * D) < h:
                h = d * d / (2.0 * D)
    if h < dtl:
        h = dtl
    return h


cdef void walk_planar(const double* prims, int npr, const double* par, double x, double y,
                      uint64_t seed, uint64_t idx, double* tau, int8_t* status,
                      int64_t* nsteps) noexcept nogil:
    cdef double D = par[0], max_time = par[3]
    cdef int bridge = par[9] != 0.0
    cdef uint64_t s = stream_state(seed, idx)
    cdef double t = 0.0, h, sig, n1, n2, dx, dy, used, rem, sk, sbest
    cdef double px, py, nx, ny, dot, xs, ys, d0, d1, arg, f, qx, qy
    cdef int k, kbest, nref, done = 0
    cdef int64_t steps = 0
    cdef const double* p
    while t < max_time:
        h = planar_step_size(prims, npr, x, y, par)
        sig = sqrt(2.0 * D * h)
        polar_pair(&s, &n1, &n2)
        dx = sig * n1
        dy = sig * n2
        used = 0.0
        rem = 1.0
        nref = 0
        steps += 1
        while True:
            kbest = -1
            sbest = 2.0
            for k in range(npr):
                sk = prim_cross(prims + k * NCOL, x, y, dx, dy)
                if sk < sbest:
                    sbest = sk
                    kbest = k
            if kbest < 0:
                break
            p = prims + kbest * NCOL
            px = x + sbest * dx
            py = y + sbest * dy
            used += sbest * rem
            rem *= 1.0 - sbest
            if in_window(p, px, py):
                tau[0] = t + used * h
                status[0] = 0
                nsteps[0] = steps
                return
            nref += 1
            if nref > MAX_REFLECT:
                dx = 0.0
                dy = 0.0
                x = px
                y = py
                break
            prim_normal(p, px, py, &nx, &ny)
            dx *= 1.0 - sbest
            dy *= 1.0 - sbest
            dot = dx * nx + dy * ny
            dx -= 2.0 * dot * nx
            dy -= 2.0 * dot * ny
            x = px
            y = py
        xs = x
        ys = y
        x += dx
        y += dy
        if bridge and rem > 0.0:
            for k in range(npr):
                p = prims + k * NCOL
                if p[5] < 0.0:
                    continue
                d0 = prim_dist(p, xs, ys)
                d1 = prim_dist(p, x, y)
                if d0 < 0.0:
                    d0 = 0.0
                if d1 < 0.0:
                    d1 = 0.0
                if d0 + d1 <= 0.0:
                    continue
                arg = d0 * d1 / (D * h * rem)
                if arg >= 40.0:
                    continue
                f = d0 / (d0 + d1)
                project(p, xs + f * dx, ys + f * dy, &qx, &qy)
                if not in_window(p, qx, qy):
                    continue
                if next_uniform(&s) < exp(-arg):
                    tau[0] = t + (used + f * rem) * h
                    status[0] = 0
                    nsteps[0] = steps
                    return
        t += h
    tau[0] = t
    status[0] = 1
    nsteps[0] = steps


def planar(double[:, ::1] starts, double[:, ::1] prims, double[::1] par, uint64_t seed,
           int nthreads=1):
    """Run one path per row of `starts`; returns (tau, status, steps)."""
    cdef Py_ssize_t n = starts.shape[0], i
    cdef int npr = prims.shape[0]
    if prims.shape[1] != NCOL:
        raise ValueError(f"prims must have {NCOL} columns")
    tau = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.int8)
    steps = np.empty(n, dtype=np.int64)
    cdef double[::1] tv = tau
    cdef int8_t[::1] sv = status
    cdef int64_t[::1] nv = steps
    cdef const double* pp = &prims[0, 0]
    cdef const double* pa = &par[0]
    for i in prange(n, nogil=True, schedule="dynamic", chunksize=16, num_threads=nthreads):
        walk_planar(pp, npr, pa, starts[i, 0], starts[i, 1], seed, <uint64_t>i,
                    &tv[i], &sv[i], &nv[i])
    return tau, status, steps


# ---------------------------------------------------------------------------
# decapitated sphere
# ---------------------------------------------------------------------------

cdef inline int rim_window(const double* par, double x, double y) noexcept nogil:
    cdef double r
    if par[8] == 0.0:
        return 1
    r = hypot(x, y)
    if r == 0.0:
        return 0
    return (x * par[9] + y * par[10]) >= par[11] * r


cdef double sphere_step_size(const double* par, double x, double y, double z) noexcept nogil:
    cdef double R = par[0], D = par[1], dt = par[2], h = par[3]
    cdef double c, th, drim, d, d1, d2
    if par[5] == 0.0:
        return dt
    if z < par[15]:
        # far from the whole rim: no constraint can bind
        return h
    c = z / R
    if c > 1.0:
        c = 1.0
    if c < -1.0:
        c = -1.0
    th = acos(c)
    drim = R * (th - par[17])
    if drim < 0.0:
        drim = 0.0
    if par[8] == 0.0:
        d = drim / 5.0
    else:
        if rim_window(par, x, y):
            d = drim
        else:
            d1 = sqrt((x - par[18]) ** 2 + (y - par[19]) ** 2 + (z - par[20]) ** 2)
            d2 = sqrt((x - par[21]) ** 2 + (y - par[22]) ** 2 + (z - par[20]) ** 2)
            d = d1 if d1 < d2 else d2
        d /= 5.0
        d1 = drim / 3.0
        if d1 < par[12]:
            d1 = par[12]
        if d1 * d1 / (2.0 * D) < h:
            h = d1 * d1 / (2.0 * D)
    if d * d / (2.0 * D) < h:
        h = d * d / (2.0 * D)
    if h < dt:
        h = dt
    return h


cdef void walk_sphere(const double* par, double x, double y, double z, uint64_t seed,
                      uint64_t idx, double* tau, int8_t* status, int64_t* nsteps) noexcept nogil:
    cdef double R = par[0], D = par[1], max_time = par[4]
    cdef double cosd = par[6], sind = par[7], cos2d = par[13], sin2d = par[14]
    cdef double zc = R * cosd, delta = par[17]
    cdef int bridge = par[16] != 0.0
    cdef uint64_t s = stream_state(seed, idx)
    cdef double t = 0.0, h, sig, n1, n2, ux, uy, uz, sg, a, b
    cdef double e1x, e1y, e1z, e2x, e2y, e2z, qx, qy, qz, q, f, rho, c1, st, ct
    cdef double d0, d1, arg, mx, my, c
    cdef int64_t steps = 0
    while t < max_time:
        h = sphere_step_size(par, x, y, z)
        sig = sqrt(2.0 * D * h)
        polar_pair(&s, &n1, &n2)
        steps += 1
        ux = x / R
        uy = y / R
        uz = z / R
        sg = 1.0 if uz >= 0.0 else -1.0
        a = -1.0 / (sg + uz)
        b = ux * uy * a
        e1x = 1.0 + sg * ux * ux * a
        e1y = sg * b
        e1z = -sg * ux
        e2x = b
        e2y = sg + uy * uy * a
        e2z = -uy
        qx = x + sig * (n1 * e1x + n2 * e2x)
        qy = y + sig * (n1 * e1y + n2 * e2y)
        qz = z + sig * (n1 * e1z + n2 * e2z)
        q = R / sqrt(qx * qx + qy * qy + qz * qz)
        qx *= q
        qy *= q
        qz *= q
        if qz > zc:
            f = (zc - z) / (qz - z)
            if rim_window(par, x + f * (qx - x), y + f * (qy - y)):
                tau[0] = t + f * h
                status[0] = 0
                nsteps[0] = steps
                return
            rho = hypot(qx, qy)
            c1 = qz / R
            st = sin2d * c1 - cos2d * rho / R
            ct = cos2d * c1 + sin2d * rho / R
            if rho > 0.0:
                x = R * st * qx / rho
                y = R * st * qy / rho
            else:
                x = R * st
                y = 0.0
            z = R * ct
        else:
            if bridge:
                c = z / R
                if c > 1.0:
                    c = 1.0
                d0 = R * (acos(c) - delta)
                c = qz / R
                if c < -1.0:
                    c = -1.0
                d1 = R * (acos(c) - delta)
                if d0 < 0.0:
                    d0 = 0.0
                if d1 < 0.0:
                    d1 = 0.0
                if d0 + d1 > 0.0:
                    arg = d0 * d1 / (D * h)
                    if arg < 40.0:
                        f = d0 / (d0 + d1)
                        mx = x + f * (qx - x)
                        my = y + f * (qy - y)
                        if rim_window(par, mx, my) and next_uniform(&s) < exp(-arg):
                            tau[0] = t + f * h
                            status[0] = 0
                            nsteps[0] = steps
                            return
            x = qx
            y = qy
            z = qz
        t += h
    tau[0] = t
    status[0] = 1
    nsteps[0] = steps


def sphere(double[:, ::1] starts, double[::1] par, uint64_t seed, int nthreads=1):
    """Run one path per row of `starts` (Cartesian points on the sphere)."""
    cdef Py_ssize_t n = starts.shape[0], i
    tau = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.int8)
    steps = np.empty(n, dtype=np.int64)
    cdef double[::1] tv = tau
    cdef int8_t[::1] sv = status
    cdef int64_t[::1] nv = steps
    cdef const double* pa = &par[0]
    for i in prange(n, nogil=True, schedule="dynamic", chunksize=16, num_threads=nthreads):
        walk_sphere(pa, starts[i, 0], starts[i, 1], starts[i, 2], seed, <uint64_t>i,
                    &tv[i], &sv[i], &nv[i])
    return tau, status, steps


def uniforms(uint64_t seed, uint64_t idx, int count):
    """First `count` uniforms of the stream for path `idx` (for testing)."""
    cdef uint64_t s = stream_state(seed, idx)
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] ov = out
    cdef int i
    for i in range(count):
        ov[i] = next_uniform(&s)
    return out
