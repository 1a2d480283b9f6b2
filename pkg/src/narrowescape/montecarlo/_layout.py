"""Flat array encoding of domains and windows shared by both kernels.

Planar boundaries are a list of primitives, one row of NCOL numbers each:

    0      kind: 0 circle with the domain inside, 1 circle with the domain
           outside, 2 half-plane n.x <= c
    1-3    circle (cx, cy, r) or half-plane (nx, ny, c)
    4      wall length scale s used by the far-field step rule (0 for flat
           walls, which need no step restriction)
    5      window kind: -1 none, 0 arc, 1 interval along a line,
           2 disk |x| < rho around the origin (cusp), 3 whole primitive
    6-8    arc: (cos phi0, sin phi0, cos hw); interval: (lo, hi) of the
           tangential coordinate x*ny - y*nx; cusp: rho
    9-12   window end points (x1, y1, x2, y2) for arc and interval windows

Planar `par`: D, dt, hmax, max_time, far_field, adaptive, cusp_x, cusp_y,
cusp_scale^2, bridge.

Sphere `par`: R, D, dt, hmax, max_time, far_field, cos delta, sin delta,
has_window, cos phi0, sin phi0, cos eps, rim wall scale, cos 2delta,
sin 2delta, z_far, bridge, delta, x1, y1, z_rim, x2, y2.
"""
from __future__ import annotations

import math

import numpy as np

from ..geometry import (Annulus, DecapitatedSphere, Disk, GeometryError, Rectangle,
                        TangentCircles, window_measures)

NCOL = 13
MAX_REFLECT = 64

# wall scale as a fraction of the radius of curvature
WALL_FRACTION = 0.05
# far-field step cap as a fraction of (domain scale)^2 / D
PLANAR_HMAX = 0.01
SPHERE_HMAX = 2.5e-4


def _row(kind, a, b, c, wall=0.0):
    row = np.zeros(NCOL)
    row[:5] = (kind, a, b, c, wall)
    row[5] = -1.0
    return row


def _arc_window(row, phi0, hw):
    cx, cy, r = row[1:4]
    row[5] = 0.0
    row[6:9] = (math.cos(phi0), math.sin(phi0), math.cos(hw))
    row[9:13] = (cx + r * math.cos(phi0 - hw), cy + r * math.sin(phi0 - hw),
                 cx + r * math.cos(phi0 + hw), cy + r * math.sin(phi0 + hw))


def domain_scale(domain):
    if isinstance(domain, Disk):
        return domain.R
    if isinstance(domain, Annulus):
        return domain.R2
    if isinstance(domain, Rectangle):
        return min(domain.a, domain.b)
    if isinstance(domain, TangentCircles):
        return domain.R
    if isinstance(domain, DecapitatedSphere):
        return domain.R
    raise GeometryError(f"no simulator for {type(domain).__name__}")


def planar_prims(domain, window):
    """Primitive table for a planar domain.

    window None absorbs nothing and "all" makes the whole boundary absorbing.
    """
    rows = []
    if isinstance(domain, Disk):
        rows.append(_row(0, 0.0, 0.0, domain.R, WALL_FRACTION * domain.R))
    elif isinstance(domain, Annulus):
        rows.append(_row(0, 0.0, 0.0, domain.R2, WALL_FRACTION * domain.R2))
        rows.append(_row(1, 0.0, 0.0, domain.R1, WALL_FRACTION * domain.R1))
    elif isinstance(domain, Rectangle):
        a, b = domain.a, domain.b
        rows.append(_row(2, 0.0, 1.0, b))      # top
        rows.append(_row(2, 0.0, -1.0, 0.0))   # bottom
        rows.append(_row(2, 1.0, 0.0, a))      # right
        rows.append(_row(2, -1.0, 0.0, 0.0))   # left
    elif isinstance(domain, TangentCircles):
        R, d = domain.R, domain.d
        rows.append(_row(0, R, 0.0, R, WALL_FRACTION * R))
        rows.append(_row(1, d * R, 0.0, d * R, WALL_FRACTION * d * R))
    else:
        raise GeometryError(f"simulate_planar needs a planar domain, got {type(domain).__name__}")
    prims = np.array(rows)
    if window is None:
        return prims
    if isinstance(window, str):
        if window != "all":
            raise GeometryError(f"unknown window {window!r}; use a Window, None or 'all'")
        prims[:, 5] = 3.0
        return prims
    m = window_measures(window, domain)
    if isinstance(domain, (Disk, Annulus)):
        k = 1 if window.component == "inner" else 0
        _arc_window(prims[k], window.center, m.angular)
    elif isinstance(domain, Rectangle):
        lo = window.center - 0.5 * m.arclength
        hi = window.center + 0.5 * m.arclength
        prims[0, 5] = 1.0
        prims[0, 6:9] = (lo, hi, 0.0)
        prims[0, 9:13] = (lo, domain.b, hi, domain.b)
    else:
        # both horns: |z| < rho on either circle, rho = arc length on one side
        rho = 0.25 * m.arclength
        for k in (0, 1):
            prims[k, 5] = 2.0
            prims[k, 6] = rho
    return prims


def sphere_par(domain, window, D, dt, hmax, max_time, far_field, bridge):
    R, delta = domain.R, domain.delta
    par = np.zeros(23)
    par[:8] = (R, D, dt, hmax, max_time, float(far_field), math.cos(delta), math.sin(delta))
    par[12] = WALL_FRACTION * R * math.sin(delta)
    par[13:15] = (math.cos(2.0 * delta), math.sin(2.0 * delta))
    par[16] = float(bridge)
    par[17] = delta
    # below z_far every rim distance exceeds 6 sqrt(2 D hmax), so h = hmax
    far = 6.0 * math.sqrt(2.0 * D * hmax) / R
    par[15] = R * math.cos(delta + far) if delta + far < math.pi else -2.0 * R
    if window is not None:
        eps = window_measures(window, domain).angular
        phi0 = window.center
        rr = R * math.sin(delta)
        par[8] = 1.0
        par[9:12] = (math.cos(phi0), math.sin(phi0), math.cos(eps))
        par[18:23] = (rr * math.cos(phi0 - eps), rr * math.sin(phi0 - eps), R * math.cos(delta),
                      rr * math.cos(phi0 + eps), rr * math.sin(phi0 + eps))
    return par
