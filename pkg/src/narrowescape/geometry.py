"""Domains, absorbing windows and conformal maps.

Planar domains are a disk, an annulus, a rectangle and the crescent between
two internally tangent circles. Spherical domains are the full sphere and the
sphere with a polar cap removed. Windows carry the width convention they were
given in, and `window_measures` converts between conventions.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np


class GeometryError(ValueError):
    """Invalid domain, window or map argument."""


class SingularityError(GeometryError):
    """A map was evaluated at one of its singular points."""


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise GeometryError(f"{name} must be a positive finite number, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    R: float

    def __post_init__(self):
        object.__setattr__(self, "R", _positive("R", self.R))

    def area(self):
        return math.pi * self.R ** 2

    def boundary_length(self):
        return 2.0 * math.pi * self.R


@dataclass(frozen=True)
class Annulus:
    R1: float
    R2: float

    def __post_init__(self):
        object.__setattr__(self, "R1", _positive("R1", self.R1))
        object.__setattr__(self, "R2", _positive("R2", self.R2))
        if not self.R1 < self.R2:
            raise GeometryError(f"annulus needs R1 < R2, got R1={self.R1}, R2={self.R2}")

    @property
    def beta(self):
        return self.R1 / self.R2

    def area(self):
        return math.pi * (self.R2 ** 2 - self.R1 ** 2)

    def boundary_length(self):
        return 2.0 * math.pi * (self.R1 + self.R2)


@dataclass(frozen=True)
class Rectangle:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))
        object.__setattr__(self, "b", _positive("b", self.b))

    @property
    def beta(self):
        return math.exp(-math.pi * self.b / self.a)

    def area(self):
        return self.a * self.b

    def boundary_length(self):
        return 2.0 * (self.a + self.b)


@dataclass(frozen=True)
class TangentCircles:
    """Crescent between the circle of radius R centred at (R, 0) and the
    circle of radius d*R centred at (d*R, 0); they touch at the origin."""
    R: float
    d: float

    def __post_init__(self):
        object.__setattr__(self, "R", _positive("R", self.R))
        d = float(self.d)
        if not 0.0 < d < 1.0:
            raise GeometryError(f"tangent circles need 0 < d < 1, got d={d}")
        object.__setattr__(self, "d", d)

    def area(self):
        return math.pi * self.R ** 2 * (1.0 - self.d ** 2)

    def boundary_length(self):
        return 2.0 * math.pi * self.R * (1.0 + self.d)


@dataclass(frozen=True)
class FullSphere:
    R: float

    def __post_init__(self):
        object.__setattr__(self, "R", _positive("R", self.R))

    def area(self):
        return 4.0 * math.pi * self.R ** 2


@dataclass(frozen=True)
class DecapitatedSphere:
    """Sphere of radius R with the cap 0 <= theta < delta removed."""
    R: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "R", _positive("R", self.R))
        delta = float(self.delta)
        if not 0.0 < delta < math.pi:
            raise GeometryError(f"cap angle must satisfy 0 < delta < pi, got {delta}")
        object.__setattr__(self, "delta", delta)

    def area(self):
        return 2.0 * math.pi * self.R ** 2 * (1.0 + math.cos(self.delta))

    def boundary_length(self):
        return 2.0 * math.pi * self.R * math.sin(self.delta)


PlanarDomain = Union[Disk, Annulus, Rectangle, TangentCircles]
SphericalDomain = Union[FullSphere, DecapitatedSphere]
PLANAR_TYPES = (Disk, Annulus, Rectangle, TangentCircles)
SPHERICAL_TYPES = (FullSphere, DecapitatedSphere)


def area(domain):
    """Area |Omega| of a planar domain, or surface area of a spherical one."""
    if not isinstance(domain, PLANAR_TYPES + SPHERICAL_TYPES):
        raise GeometryError(f"not a domain: {domain!r}")
    return domain.area()


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------

COMPONENTS = ("outer", "inner", "top-edge", "cap-rim", "cusp")
CONVENTIONS = ("angular-half-width", "arclength", "length-ratio")

# components allowed on each domain type
_DOMAIN_COMPONENTS = {
    Disk: ("outer",),
    Annulus: ("outer", "inner"),
    Rectangle: ("top-edge",),
    TangentCircles: ("cusp",),
    DecapitatedSphere: ("cap-rim",),
}


@dataclass(frozen=True)
class Window:
    """Absorbing part of the boundary.

    `center` is an angle for circular components (radians, measured from the
    positive x-axis, or the azimuth phi on the cap rim) and an x-coordinate
    for the rectangle's top edge. The cusp window is always centred on the
    tangency point and `center` is ignored there.

    `half_width` is read according to `convention`:

    angular-half-width
        half the opening angle (radians). On the top edge this is the
        dual-series angle pi*length/a; on the cusp it is arc/(2R), the arc
        length on one circle divided by the outer diameter.
    arclength
        half of the window length along one boundary curve.
    length-ratio
        the fraction |window| / |boundary| (not halved).
    """
    component: str
    center: float
    half_width: float
    convention: str = "angular-half-width"

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise GeometryError(f"unknown boundary component {self.component!r}; expected one of {COMPONENTS}")
        if self.convention not in CONVENTIONS:
            raise GeometryError(f"unknown width convention {self.convention!r}; expected one of {CONVENTIONS}")
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "half_width", _positive("half_width", self.half_width))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class WindowMeasures:
    angular: float
    arclength: float
    ratio: float


def _component_geometry(window, domain):
    """Return (kind, scale, total_boundary) for the window's component.

    For circular components `scale` is the radius, so arclength = 2*hw*scale.
    """
    allowed = _DOMAIN_COMPONENTS.get(type(domain))
    if allowed is None:
        raise GeometryError(f"windows are not defined on {type(domain).__name__}")
    if window.component not in allowed:
        raise GeometryError(
            f"component {window.component!r} does not exist on {type(domain).__name__}; use one of {allowed}")
    total = domain.boundary_length()
    if isinstance(domain, Disk):
        return "circle", domain.R, total
    if isinstance(domain, Annulus):
        return "circle", domain.R1 if window.component == "inner" else domain.R2, total
    if isinstance(domain, DecapitatedSphere):
        return "circle", domain.R * math.sin(domain.delta), total
    if isinstance(domain, Rectangle):
        return "edge", domain.a, total
    return "cusp", domain.R, total


def _half_angle(window, domain):
    """Half width in the angular convention of the window's component."""
    kind, scale, total = _component_geometry(window, domain)
    hw, conv = window.half_width, window.convention
    if conv == "angular-half-width":
        return hw
    if conv == "length-ratio":
        length = hw * total
    else:
        # cusp windows have one arc on each circle
        length = 4.0 * hw if kind == "cusp" else 2.0 * hw
    if kind == "circle":
        return length / (2.0 * scale)
    if kind == "edge":
        return math.pi * length / scale
    return length / (4.0 * scale)


def window_measures(window, domain):
    """Window size in all three conventions.

    angular is the half-opening angle, arclength the total window length on
    the boundary and ratio = arclength / |boundary|.
    """
    kind, scale, total = _component_geometry(window, domain)
    ang = _half_angle(window, domain)
    if kind == "circle":
        length = 2.0 * ang * scale
    elif kind == "edge":
        length = ang * scale / math.pi
    else:
        length = 4.0 * ang * scale
    _check_window_fits(window, domain, kind, scale, ang, length)
    return WindowMeasures(angular=ang, arclength=length, ratio=length / total)


def _check_window_fits(window, domain, kind, scale, ang, length):
    if kind == "circle":
        if not ang < math.pi:
            raise GeometryError(f"window half-angle {ang:.6g} must be below pi (half the circle)")
    elif kind == "edge":
        a = domain.a
        if not length / 2.0 < a / 2.0:
            raise GeometryError(f"top-edge window of length {length:.6g} must be shorter than half the edge a={a}")
        lo, hi = window.center - length / 2.0, window.center + length / 2.0
        tol = 1e-12 * a
        if lo < -tol or hi > a + tol:
            raise GeometryError(f"top-edge window [{lo:.6g}, {hi:.6g}] leaves the edge [0, {a}]")
    else:
        hw = length / 4.0
        # the arc from the cusp along the inner circle has length at most pi*d*R
        if not hw < 0.5 * math.pi * domain.d * domain.R:
            raise GeometryError(f"cusp window half length {hw:.6g} exceeds half the inner circle")


def convert_window(window, domain, convention):
    """Same window expressed in another width convention."""
    if convention not in CONVENTIONS:
        raise GeometryError(f"unknown width convention {convention!r}")
    m = window_measures(window, domain)
    kind = _component_geometry(window, domain)[0]
    if convention == "angular-half-width":
        hw = m.angular
    elif convention == "length-ratio":
        hw = m.ratio
    else:
        hw = m.arclength / (4.0 if kind == "cusp" else 2.0)
    return Window(window.component, window.center, hw, convention)


def corner_window(rect, length):
    """Window [a - length, a] x {b} at the top-right corner of a rectangle."""
    return Window("top-edge", rect.a - 0.5 * length, 0.5 * length, "arclength")


def cusp_window(domain, eps):
    """Window at the cusp with eps = arc length on one circle / outer diameter."""
    return Window("cusp", 0.0, eps, "angular-half-width")


# ---------------------------------------------------------------------------
# Conformal maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Inversion:
    """z -> 1/z."""


@dataclass(frozen=True)
class CornerFlatten:
    """z -> z**(pi/alpha), flattening a corner of opening alpha at the origin
    (wedge 0 < arg z < alpha) onto the upper half plane."""
    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 < alpha < 2.0 * math.pi:
            raise GeometryError(f"corner angle must satisfy 0 < alpha < 2 pi, got {alpha}")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class CuspMap:
    """exp{pi i/(1/d - 1) (1/(2 R z) - 1)}: crescent between tangent circles
    (outer radius R, ratio d, cusp at 0) onto the upper half plane."""
    d: float
    R: float = 0.5

    def __post_init__(self):
        d = float(self.d)
        if not 0.0 < d < 1.0:
            raise GeometryError(f"cusp map needs 0 < d < 1, got d={d}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "R", _positive("R", self.R))


@dataclass(frozen=True)
class Stereographic:
    """Projection of the sphere of radius R, from its north pole, onto the
    plane tangent at the south pole. The default R=1/2 sends colatitude theta
    to radius cot(theta/2)."""
    R: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "R", _positive("R", self.R))


ConformalMap = Union[Inversion, CornerFlatten, CuspMap, Stereographic]


def _wedge_arg(z):
    # argument in [0, 2 pi) so wedges wider than pi stay on one branch
    return np.mod(np.angle(z), 2.0 * np.pi)


def _sphere_angles(point):
    """(theta, phi) from either an angle pair or Cartesian coordinates."""
    p = np.asarray(point, dtype=float)
    if p.shape[-1] == 2:
        return p[..., 0], p[..., 1]
    if p.shape[-1] == 3:
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        rho = np.hypot(x, y)
        return np.arctan2(rho, z), np.arctan2(y, x)
    raise GeometryError("sphere points are (theta, phi) pairs or (x, y, z) triples")


def _check_nonzero(z, name):
    if np.any(z == 0):
        raise SingularityError(f"{name} is singular at z = 0")


def map_apply(cmap, point):
    """Image of `point` under the map.

    Planar maps take complex numbers (or arrays). Stereographic takes sphere
    points as (theta, phi) or Cartesian (x, y, z) with the sphere centred at
    the origin; the result is 2 R cot(theta/2) exp(i phi).
    """
    if isinstance(cmap, Stereographic):
        theta, phi = _sphere_angles(point)
        if np.any(np.asarray(theta) == 0):
            raise SingularityError("stereographic projection is singular at the north pole")
        return 2.0 * cmap.R / np.tan(theta / 2.0) * np.exp(1j * phi)
    z = np.asarray(point, dtype=complex)
    if isinstance(cmap, Inversion):
        _check_nonzero(z, "inversion")
        return 1.0 / z
    if isinstance(cmap, CornerFlatten):
        k = math.pi / cmap.alpha
        return np.abs(z) ** k * np.exp(1j * k * _wedge_arg(z))
    if isinstance(cmap, CuspMap):
        _check_nonzero(z, "cusp map")
        return np.exp(1j * math.pi / (1.0 / cmap.d - 1.0) * (1.0 / (2.0 * cmap.R * z) - 1.0))
    raise GeometryError(f"not a conformal map: {cmap!r}")


def map_invert(cmap, w):
    """Preimage of `w`; Stereographic returns (theta, phi) arrays."""
    w = np.asarray(w, dtype=complex)
    if isinstance(cmap, Stereographic):
        r = np.abs(w) / (2.0 * cmap.R)
        theta = 2.0 * np.arctan2(1.0, r)
        phi = np.mod(np.angle(w), 2.0 * np.pi)
        return theta, phi
    if isinstance(cmap, Inversion):
        _check_nonzero(w, "inversion")
        return 1.0 / w
    if isinstance(cmap, CornerFlatten):
        k = cmap.alpha / math.pi
        return np.abs(w) ** k * np.exp(1j * k * _wedge_arg(w))
    if isinstance(cmap, CuspMap):
        _check_nonzero(w, "inverse cusp map")
        zeta = 1.0 + (1.0 / cmap.d - 1.0) * np.log(w) / (1j * math.pi)
        return 1.0 / (2.0 * cmap.R * zeta)
    raise GeometryError(f"not a conformal map: {cmap!r}")


def map_jacobian(cmap, point):
    """Area factor |f'(z)|^2 of a planar map.

    For Stereographic the value is the factor (1 + r^2/(4R^2))^2 relating
    areas, dA_plane = J dA_sphere, so that the Laplace-Beltrami operator
    becomes (1 + r^2)^2 times the flat Laplacian on the diameter-1 sphere.
    """
    if isinstance(cmap, Stereographic):
        r = np.abs(map_apply(cmap, point))
        return (1.0 + r ** 2 / (4.0 * cmap.R ** 2)) ** 2
    z = np.asarray(point, dtype=complex)
    if isinstance(cmap, Inversion):
        _check_nonzero(z, "inversion")
        return 1.0 / np.abs(z) ** 4
    if isinstance(cmap, CornerFlatten):
        _check_nonzero(z, "corner map")
        k = math.pi / cmap.alpha
        return k ** 2 * np.abs(z) ** (2.0 * (k - 1.0))
    if isinstance(cmap, CuspMap):
        _check_nonzero(z, "cusp map")
        k = math.pi / (1.0 / cmap.d - 1.0)
        f = map_apply(cmap, z)
        return np.abs(f) ** 2 * k ** 2 / (4.0 * cmap.R ** 2 * np.abs(z) ** 4)
    raise GeometryError(f"not a conformal map: {cmap!r}")


# ---------------------------------------------------------------------------
# Serialisation (JSON object and key=value block)
# ---------------------------------------------------------------------------

_TYPE_NAMES = {
    "disk": (Disk, ("R",)),
    "annulus": (Annulus, ("R1", "R2")),
    "rectangle": (Rectangle, ("a", "b")),
    "tangent_circles": (TangentCircles, ("R", "d")),
    "sphere": (FullSphere, ("R",)),
    "decapitated_sphere": (DecapitatedSphere, ("R", "delta")),
}
_NAME_OF_TYPE = {cls: name for name, (cls, _) in _TYPE_NAMES.items()}


@dataclass(frozen=True)
class GeometrySpec:
    domain: object
    window: Window | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        cls = type(self.domain)
        _, keys = _TYPE_NAMES[_NAME_OF_TYPE[cls]]
        out = {"type": _NAME_OF_TYPE[cls], "params": {k: getattr(self.domain, k) for k in keys}}
        if self.window is not None:
            out["window"] = self.window.to_dict()
        out.update(self.extra)
        return out


def domain_from_dict(obj):
    try:
        name = obj["type"]
    except (KeyError, TypeError):
        raise GeometryError("geometry needs a 'type' field") from None
    if name not in _TYPE_NAMES:
        raise GeometryError(f"unknown geometry type {name!r}; expected one of {sorted(_TYPE_NAMES)}")
    cls, keys = _TYPE_NAMES[name]
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise GeometryError("'params' must be an object")
    missing = [k for k in keys if k not in params]
    unknown = [k for k in params if k not in keys]
    if missing or unknown:
        raise GeometryError(f"{name} params: missing {missing}, unexpected {unknown}; expected {list(keys)}")
    try:
        return cls(**{k: float(params[k]) for k in keys})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"{name} params: {exc}") from None


def window_from_dict(obj):
    if not isinstance(obj, dict):
        raise GeometryError("'window' must be an object")
    allowed = {"component", "center", "half_width", "convention"}
    unknown = set(obj) - allowed
    if unknown:
        raise GeometryError(f"window: unexpected fields {sorted(unknown)}")
    for key in ("component", "half_width"):
        if key not in obj:
            raise GeometryError(f"window needs a '{key}' field")
    try:
        return Window(obj["component"], float(obj.get("center", math.pi)), float(obj["half_width"]),
                      obj.get("convention", "angular-half-width"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"window: {exc}") from None


def geometry_from_dict(obj):
    """Validate a geometry object {type, params, window?}; extra keys are kept."""
    if not isinstance(obj, dict):
        raise GeometryError("geometry must be a JSON object")
    domain = domain_from_dict(obj)
    window = None
    if obj.get("window") is not None:
        window = window_from_dict(obj["window"])
        window_measures(window, domain)
    extra = {k: v for k, v in obj.items() if k not in ("type", "params", "window")}
    return GeometrySpec(domain, window, extra)


def _parse_scalar(text):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_keyvalue(text):
    """Parse a key=value block into the same nested dict as the JSON schema.

    Dotted keys nest: ``params.R1=1`` and ``window.half_width=0.05``. A bare
    parameter name such as ``R1=1`` is placed under params.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GeometryError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        parts = key.split(".")
        if len(parts) == 1 and key not in ("type",) and key != "run":
            parts = ["params", key]
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_scalar(value)
    return out


def load_geometry_text(text):
    """Parse JSON if the text looks like JSON, else a key=value block."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GeometryError(f"invalid JSON: {exc}") from None
    else:
        obj = parse_keyvalue(text)
    return obj


def load_geometry(path):
    with open(path) as fh:
        obj = load_geometry_text(fh.read())
    return geometry_from_dict(obj)
