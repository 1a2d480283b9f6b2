"""Reflected Brownian motion estimates of mean first passage times.

Each step is an Euler step with variance 2*D*h per coordinate. Steps that
leave the domain are mirrored at the crossing point (repeatedly, up to
MAX_REFLECT times) and a crossing inside the window absorbs at the linearly
interpolated crossing time. Away from the window the step h grows with the
distance to the absorbing set (`far_field`), so the configured dt is the
step used next to the window, and a Brownian-bridge test catches excursions
into the window between two interior positions (`bridge`).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ..geometry import (PLANAR_TYPES, Annulus, DecapitatedSphere, Disk, GeometryError, Rectangle,
                        TangentCircles, window_measures)
from . import _fallback, _layout

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

CENSOR_LIMIT = 1e-3
CSV_FIELDS = ("epsilon", "mean", "stderr", "n_absorbed", "n_censored")
# stream indices at or above this offset seed the start positions
_START_STREAM = 1 << 63


class CensoringError(RuntimeError):
    """Too many paths reached the time limit; `.estimate` has the partial result."""

    def __init__(self, msg, estimate):
        super().__init__(msg)
        self.estimate = estimate


class ResolutionError(ValueError):
    """Time step too coarse for the smallest geometric feature."""


def available_backends():
    return ("compiled", "numpy") if _compiled is not None else ("numpy",)


def default_backend():
    if os.environ.get("NARROWESCAPE_PURE_PYTHON", "") not in ("", "0"):
        return "numpy"
    return "compiled" if _compiled is not None else "numpy"


def _kernel_module(name):
    name = name or default_backend()
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with a C compiler or use backend='numpy'")
        return _compiled
    if name == "numpy":
        return _fallback
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'numpy'")


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Start:
    """Initial position: a fixed point or uniform over the domain.

    Point coordinates are (x, y) in the plane and (theta, phi) on the
    sphere. `band` restricts a uniform start to lo <= c <= hi for the
    coordinate c = r (disk, annulus), y (rectangle), x (tangent circles) or
    theta (sphere).
    """
    kind: str = "uniform"
    coords: tuple = ()
    band: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "point"):
            raise ValueError(f"start kind must be 'uniform' or 'point', got {self.kind!r}")
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if self.kind == "point" and len(self.coords) != 2:
            raise ValueError(f"a point start needs two coordinates, got {self.coords}")
        if self.band is not None:
            lo, hi = (float(v) for v in self.band)
            if not lo < hi:
                raise ValueError(f"start band needs lo < hi, got {self.band}")
            object.__setattr__(self, "band", (lo, hi))

    @classmethod
    def point(cls, c1, c2):
        return cls("point", (c1, c2))

    @classmethod
    def uniform(cls, band=None):
        return cls("uniform", (), band)

    @classmethod
    def parse(cls, obj):
        if isinstance(obj, Start):
            return obj
        if obj is None or obj == "uniform":
            return cls.uniform()
        if isinstance(obj, dict):
            if obj.get("kind", "point") == "uniform" or "coords" not in obj:
                return cls.uniform(obj.get("band"))
            return cls.point(*obj["coords"])
        return cls.point(*obj)

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "point":
            out["coords"] = list(self.coords)
        if self.band is not None:
            out["band"] = list(self.band)
        return out


@dataclass(frozen=True)
class McConfig:
    dt: float = 1e-5
    n_paths: int = 10_000
    seed: int = 0
    max_steps: int = 100_000_000
    start: Start = field(default_factory=Start)
    adaptive_near_singularity: bool = False
    far_field: bool = True
    bridge: bool = True
    hmax: float | None = None
    threads: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_paths) < 100:
            raise ValueError(f"n_paths must be at least 100, got {self.n_paths}")
        if int(self.max_steps) < 1:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")
        if self.hmax is not None and not self.hmax > 0:
            raise ValueError(f"hmax must be positive, got {self.hmax}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "max_steps", int(self.max_steps))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "start", Start.parse(self.start))

    @property
    def max_time(self):
        return self.max_steps * self.dt

    def to_dict(self):
        out = asdict(self)
        out["start"] = self.start.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        if "paths" in obj:
            obj["n_paths"] = obj.pop("paths")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown run options {sorted(extra)}")
        return cls(**obj)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_absorbed: int
    n_censored: int
    dt_used: float
    n_paths: int = 0
    mean_steps: float = 0.0

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


def _summarise(tau, status, steps, config):
    ok = status == 0
    n_abs = int(ok.sum())
    n_cens = int((~ok).sum())
    t = tau[ok]
    mean = float(np.mean(t)) if n_abs else math.nan
    stderr = float(np.std(t, ddof=1) / math.sqrt(n_abs)) if n_abs > 1 else math.nan
    est = McEstimate(mean, stderr, n_abs, n_cens, config.dt, int(tau.size), float(np.mean(steps)))
    if n_cens / tau.size > CENSOR_LIMIT:
        raise CensoringError(
            f"{n_cens} of {tau.size} paths censored at t={config.max_time:g} "
            f"(limit {CENSOR_LIMIT:.1%}); raise max_steps", est)
    if n_abs and config.max_time < 50.0 * mean:
        warnings.warn(f"max_steps*dt = {config.max_time:g} is below 50x the estimated MFPT {mean:.4g}; "
                      "censoring may bias the mean", stacklevel=3)
    return est


# ---------------------------------------------------------------------------
# start positions
# ---------------------------------------------------------------------------

def _start_streams(seed, n):
    """Streams for the start positions, disjoint from the path streams."""
    state = _fallback.stream_states(seed, np.arange(n, dtype=np.uint64) + np.uint64(_START_STREAM))
    sel = np.arange(n)
    return state, sel


def _band_coord(domain, x, y):
    if isinstance(domain, (Disk, Annulus)):
        return np.hypot(x, y)
    if isinstance(domain, Rectangle):
        return y
    return x


def _bounding_box(domain):
    if isinstance(domain, Disk):
        return -domain.R, domain.R, -domain.R, domain.R
    if isinstance(domain, Annulus):
        return -domain.R2, domain.R2, -domain.R2, domain.R2
    if isinstance(domain, Rectangle):
        return 0.0, domain.a, 0.0, domain.b
    return 0.0, 2.0 * domain.R, -domain.R, domain.R


def _interior(prims, x, y):
    inside = np.ones(x.shape, dtype=bool)
    for p in prims:
        inside &= _fallback.prim_dist(p, x, y) > 0.0
    return inside


def planar_starts(domain, start, n, seed):
    prims = _layout.planar_prims(domain, None)
    if start.kind == "point":
        x, y = start.coords
        if not _interior(prims, np.array([x]), np.array([y]))[0]:
            raise GeometryError(f"start point ({x}, {y}) is not strictly inside the domain")
        return np.tile([x, y], (n, 1))
    x0, x1, y0, y1 = _bounding_box(domain)
    state, sel = _start_streams(seed, n)
    out = np.empty((n, 2))
    todo = np.arange(n)
    for _ in range(10_000):
        if todo.size == 0:
            break
        x = x0 + (x1 - x0) * _fallback.next_uniform(state, sel[todo])
        y = y0 + (y1 - y0) * _fallback.next_uniform(state, sel[todo])
        ok = _interior(prims, x, y)
        if start.band is not None:
            c = _band_coord(domain, x, y)
            ok &= (c >= start.band[0]) & (c <= start.band[1])
        out[todo[ok], 0] = x[ok]
        out[todo[ok], 1] = y[ok]
        todo = todo[~ok]
    if todo.size:
        raise GeometryError(f"start band {start.band} does not intersect the domain")
    return out


def sphere_starts(domain, start, n, seed):
    R, delta = domain.R, domain.delta
    if start.kind == "point":
        th, ph = start.coords
        if not delta < th <= math.pi:
            raise GeometryError(f"start theta={th} must lie in (delta, pi] = ({delta}, {math.pi}]")
        p = R * np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
        return np.tile(p, (n, 1))
    lo, hi = delta, math.pi
    if start.band is not None:
        lo, hi = max(lo, start.band[0]), min(hi, start.band[1])
        if not lo < hi:
            raise GeometryError(f"start band {start.band} does not intersect [{delta}, pi]")
    state, sel = _start_streams(seed, n)
    # area is uniform in z = R cos(theta)
    za, zb = R * math.cos(hi), R * math.cos(lo)
    z = za + (zb - za) * _fallback.next_uniform(state, sel)
    phi = 2.0 * math.pi * _fallback.next_uniform(state, sel)
    s = np.sqrt(np.maximum(R * R - z * z, 0.0))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------

def _geometry_scale(domain, window, prims):
    scales = [p[3] for p in prims if p[0] < 2]
    if isinstance(domain, Rectangle):
        scales.append(min(domain.a, domain.b))
    if window is not None and not isinstance(window, str):
        m = window_measures(window, domain)
        per_arc = 4.0 if isinstance(domain, TangentCircles) else 2.0
        scales.append(m.arclength / per_arc)
    return min(scales)


def _threads(config):
    return int(config.threads) if config.threads else (os.cpu_count() or 1)


def simulate_planar(domain, window, config, D=1.0, backend=None):
    """MFPT estimate in a planar domain with absorbing `window`.

    `window` is a Window, "all" (the whole boundary absorbs) or None
    (nothing absorbs, every path censors).
    """
    if not isinstance(domain, PLANAR_TYPES):
        raise GeometryError(f"simulate_planar needs a planar domain, got {type(domain).__name__}")
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    prims = _layout.planar_prims(domain, window)
    step = math.sqrt(4.0 * D * config.dt)
    scale = _geometry_scale(domain, window, prims)
    if step >= scale:
        raise ResolutionError(f"step length sqrt(4 D dt) = {step:.3g} is not below the smallest "
                              f"geometric scale {scale:.3g}; reduce dt")
    L = _layout.domain_scale(domain)
    hmax = max(config.dt, config.hmax or _layout.PLANAR_HMAX * L * L / D)
    adaptive = config.adaptive_near_singularity and isinstance(domain, TangentCircles)
    par = np.array([D, config.dt, hmax, config.max_time, float(config.far_field), float(adaptive),
                    0.0, 0.0, L * L, float(config.bridge)])
    starts = planar_starts(domain, config.start, config.n_paths, config.seed)
    kern = _kernel_module(backend)
    tau, status, steps = kern.planar(starts, prims, par, np.uint64(config.seed), _threads(config))
    return _summarise(tau, status, steps, config)


def simulate_sphere(domain, window, config, D=1.0, backend=None):
    """MFPT estimate on a decapitated sphere.

    With window None the whole rim absorbs; otherwise only the window arc
    does and the rest of the rim reflects.
    """
    if not isinstance(domain, DecapitatedSphere):
        raise GeometryError(f"simulate_sphere needs a DecapitatedSphere, got {type(domain).__name__}")
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    if window is not None and window.component != "cap-rim":
        raise GeometryError(f"sphere windows live on the cap rim, got {window.component!r}")
    R = domain.R
    step = math.sqrt(4.0 * D * config.dt)
    scale = R * math.sin(domain.delta)
    if window is not None:
        scale = min(scale, 0.5 * window_measures(window, domain).arclength)
    if step >= scale:
        raise ResolutionError(f"step length sqrt(4 D dt) = {step:.3g} is not below the smallest "
                              f"geometric scale {scale:.3g}; reduce dt")
    hmax = max(config.dt, config.hmax or _layout.SPHERE_HMAX * R * R / D)
    par = _layout.sphere_par(domain, window, D, config.dt, hmax, config.max_time,
                             config.far_field, config.bridge)
    starts = sphere_starts(domain, config.start, config.n_paths, config.seed)
    kern = _kernel_module(backend)
    tau, status, steps = kern.sphere(starts, par, np.uint64(config.seed), _threads(config))
    return _summarise(tau, status, steps, config)


def simulate(domain, window, config, D=1.0, backend=None):
    if isinstance(domain, DecapitatedSphere):
        return simulate_sphere(domain, window, config, D, backend)
    return simulate_planar(domain, window, config, D, backend)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepTable:
    rows: tuple  # ((eps, McEstimate), ...)

    def epsilons(self):
        return np.array([e for e, _ in self.rows])

    def means(self):
        return np.array([m.mean for _, m in self.rows])

    def log_slope(self):
        """Least-squares slope of the mean against log(1/eps)."""
        return float(np.polyfit(np.log(1.0 / self.epsilons()), self.means(), 1)[0])

    def scaled_means(self):
        """mean * eps, constant under a 1/eps law."""
        return self.means() * self.epsilons()

    def to_records(self):
        return [{"epsilon": e, "mean": m.mean, "stderr": m.stderr, "n_absorbed": m.n_absorbed,
                 "n_censored": m.n_censored} for e, m in self.rows]

    def to_csv(self, extra=None):
        """CSV with header; `extra` maps column name -> function(eps, estimate)."""
        extra = extra or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(CSV_FIELDS) + list(extra))
        for rec, (e, m) in zip(self.to_records(), self.rows):
            w.writerow([repr(rec[k]) for k in CSV_FIELDS] + [repr(f(e, m)) for f in extra.values()])
        return buf.getvalue()

    def to_json(self):
        return json.dumps([{"epsilon": e, **m.to_dict()} for e, m in self.rows])

    @classmethod
    def from_json(cls, text):
        rows = []
        for obj in json.loads(text):
            obj = dict(obj)
            e = obj.pop("epsilon")
            rows.append((e, McEstimate.from_dict(obj)))
        return cls(tuple(rows))


def sweep(domain, window_family, eps_values, config, D=1.0, backend=None):
    """Run the simulator for each eps (at least three, decreasing).

    `window_family` maps eps to a Window. Every run uses the same seed.
    """
    eps = [float(e) for e in eps_values]
    if len(eps) < 3:
        raise ValueError(f"a sweep needs at least three eps values, got {len(eps)}")
    if any(not b < a for a, b in zip(eps, eps[1:])):
        raise ValueError(f"eps values must be strictly decreasing, got {eps}")
    rows = tuple((e, simulate(domain, window_family(e), config, D, backend)) for e in eps)
    return SweepTable(rows)
