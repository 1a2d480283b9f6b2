"""Closed-form mean first passage times with term-by-term breakdowns.

Every formula divides by an explicit diffusivity D. Leading-order results
carry the unknown O(1) bracket constant in `unresolved` instead of setting it
to zero, so comparisons against simulations should use slopes in log(1/eps)
or 1/eps rather than absolute values.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryError, TangentCircles

# remainders that appear in the formulas
ERROR_ORDERS = (
    "O(1) inside brackets",
    "O(ε, β⁴)",
    "O(ε, β⁴)·R2²/D",
    "O(ε/a, β⁴)",
    "O(ε, δ² log δ, δ² log ε)",
    "exact",
)

CONVENTIONS = ("length-ratio", "angular-half-width", "arclength", "cusp-arc-over-diameter", "none")


@dataclass(frozen=True)
class AsymptoticResult:
    """MFPT value as an ordered sum of named terms.

    `alternates` holds other forms of the same quantity (exact vs expanded),
    `unresolved` lists (name, coefficient) pairs for constants the formula
    leaves unknown, and `warnings` carries validity caveats.
    """
    value: float
    terms: tuple
    error_order: str
    convention: str
    warnings: tuple = ()
    alternates: dict = field(default_factory=dict)
    unresolved: tuple = ()

    def __post_init__(self):
        if self.error_order not in ERROR_ORDERS:
            raise ValueError(f"unknown error order {self.error_order!r}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown window convention {self.convention!r}")

    def term(self, name):
        for n, v in self.terms:
            if n == name:
                return v
        raise KeyError(name)

    def to_dict(self):
        return {
            "value": self.value,
            "terms": [{"name": n, "value": v} for n, v in self.terms],
            "error_order": self.error_order,
            "convention": self.convention,
            "warnings": list(self.warnings),
            "alternates": dict(self.alternates),
            "unresolved": [{"name": n, "coefficient": c} for n, c in self.unresolved],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        return cls(
            value=obj["value"],
            terms=tuple((t["name"], t["value"]) for t in obj["terms"]),
            error_order=obj["error_order"],
            convention=obj["convention"],
            warnings=tuple(obj.get("warnings", ())),
            alternates=dict(obj.get("alternates", {})),
            unresolved=tuple((u["name"], u["coefficient"]) for u in obj.get("unresolved", ())),
        )


def _result(terms, error_order, convention, warnings=(), alternates=None, unresolved=()):
    value = math.fsum(v for _, v in terms)
    return AsymptoticResult(value, tuple(terms), error_order, convention, tuple(warnings),
                            dict(alternates or {}), tuple(unresolved))


def _require(cond, msg):
    if not cond:
        raise GeometryError(msg)


def _check_D(D):
    _require(math.isfinite(D) and D > 0, f"diffusivity must be positive, got {D}")


# ---------------------------------------------------------------------------
# Leading-order laws
# ---------------------------------------------------------------------------

def mfpt_leading_smooth(area, D, eps_ratio):
    """(|Omega|/(pi D)) log(1/eps) for a window at a smooth boundary point.

    eps_ratio = |window| / |boundary|.
    """
    _check_D(D)
    _require(area > 0, f"area must be positive, got {area}")
    _require(0 < eps_ratio <= 1, f"eps_ratio must lie in (0, 1], got {eps_ratio}")
    coef = area / (math.pi * D)
    caveats = []
    if eps_ratio >= 0.1:
        caveats.append(f"eps_ratio={eps_ratio:g} is not small; the O(1) bracket term is comparable")
    return _result([("narrow-escape-log", coef * math.log(1.0 / eps_ratio))],
                   "O(1) inside brackets", "length-ratio", caveats,
                   unresolved=[("O(1)", coef)])


def mfpt_corner_leading(area, alpha, D, eps_ratio):
    """(|Omega|/(D alpha)) log(1/eps) for a window at a corner of angle alpha."""
    _check_D(D)
    _require(area > 0, f"area must be positive, got {area}")
    _require(0 < alpha < 2 * math.pi, f"corner angle must lie in (0, 2 pi), got {alpha}; "
                                      "alpha = 0 is a cusp, use mfpt_cusp_leading")
    _require(0 < eps_ratio <= 1, f"eps_ratio must lie in (0, 1], got {eps_ratio}")
    if alpha == math.pi:
        return mfpt_leading_smooth(area, D, eps_ratio)
    coef = area / (D * alpha)
    caveats = []
    if eps_ratio >= 0.1:
        caveats.append(f"eps_ratio={eps_ratio:g} is not small; the O(1) bracket term is comparable")
    return _result([("narrow-escape-log", coef * math.log(1.0 / eps_ratio))],
                   "O(1) inside brackets", "length-ratio", caveats,
                   unresolved=[("O(1)", coef)])


def mfpt_cusp_leading(domain, eps, D=1.0):
    """|Omega| / ((1/d - 1) D eps) for a window at the cusp of tangent circles.

    eps is the window arc length on one circle divided by the outer diameter
    2R (the window half-width in the cusp's angular convention).
    """
    _check_D(D)
    if not isinstance(domain, TangentCircles):
        raise GeometryError("mfpt_cusp_leading needs a TangentCircles domain")
    _require(0 < eps < 1, f"eps must lie in (0, 1), got {eps}")
    R, d = domain.R, domain.d
    first = domain.area() / ((1.0 / d - 1.0) * D * eps)
    second = math.pi * R ** 2 * d * (1.0 + d) / (D * eps)
    if not math.isclose(first, second, rel_tol=1e-12):
        raise ArithmeticError(f"cusp forms disagree: {first} vs {second}")
    caveats = []
    if eps >= 0.1:
        caveats.append(f"eps={eps:g} is not small for the cusp law")
    return _result([("cusp-algebraic", first)], "O(1) inside brackets", "cusp-arc-over-diameter",
                   caveats, alternates={"radius-form": second},
                   unresolved=[("O(1)", domain.area() / ((1.0 / d - 1.0) * D))])


# ---------------------------------------------------------------------------
# Annulus and rectangle (dual-series results)
# ---------------------------------------------------------------------------

def _dual_warnings(eps, beta):
    out = []
    if eps >= 0.1:
        out.append(f"window half-angle {eps:g} is not small; O(eps) remainder may dominate")
    if beta ** 4 >= 0.01:
        out.append(f"beta^4 = {beta ** 4:.3g} is not small; O(beta^4) remainder may dominate")
    return out


def c0_annulus(R1, R2, eps_ang):
    """Zeroth coefficient c0 = (R2^2 - R1^2)[2 log(1/eps) + 2 log 2 + 4 beta^2]."""
    _require(0 < R1 < R2, f"need 0 < R1 < R2, got R1={R1}, R2={R2}")
    _require(0 < eps_ang < math.pi, f"eps_ang must lie in (0, pi), got {eps_ang}")
    beta = R1 / R2
    k = R2 ** 2 - R1 ** 2
    terms = [
        ("narrow-escape-log", 2.0 * k * math.log(1.0 / eps_ang)),
        ("log2", 2.0 * k * math.log(2.0)),
        ("beta-correction", 4.0 * k * beta ** 2),
    ]
    return _result(terms, "O(ε, β⁴)", "angular-half-width", _dual_warnings(eps_ang, beta))


def c0_rectangle(a, b, eps_len):
    """Zeroth coefficient for the corner window, c0 = (4ab/pi)[log(a/eps) + log(2/pi) + 2 beta^2]."""
    _require(a > 0 and b > 0, f"need a, b > 0, got a={a}, b={b}")
    _require(0 < eps_len < a, f"window length must lie in (0, a), got {eps_len}")
    beta = math.exp(-math.pi * b / a)
    k = 4.0 * a * b / math.pi
    terms = [
        ("corner-log", k * math.log(a / eps_len)),
        ("log-2-over-pi", k * math.log(2.0 / math.pi)),
        ("beta-correction", 2.0 * k * beta ** 2),
    ]
    return _result(terms, "O(ε/a, β⁴)", "arclength", _dual_warnings(math.pi * eps_len / a, beta))


def mfpt_annulus_avg(R1, R2, eps_ang, D=1.0):
    """Average MFPT in the annulus R1 < r < R2 with a window |theta - pi| < eps
    on the inner circle, uniform start.

    The value is the printed second-order expansion. Its derivation averages
    c0/2 and the logarithmic part of the particular solution but not the
    quadratic part (R1^2 - r^2)/4, whose mean is -(R2^2 - R1^2)/8; the sum
    including it is reported as alternates["with-particular-mean"].
    """
    _check_D(D)
    _require(0 < R1 < R2, f"need 0 < R1 < R2, got R1={R1}, R2={R2}")
    _require(0 < eps_ang < math.pi, f"eps_ang must lie in (0, pi), got {eps_ang}")
    beta = R1 / R2
    k = R2 ** 2 - R1 ** 2
    terms = [
        ("narrow-escape-log", k * math.log(1.0 / eps_ang) / D),
        ("log2", k * math.log(2.0) / D),
        ("beta-correction", 2.0 * k * beta ** 2 / D),
        ("green-singularity-log", 0.5 * R2 ** 2 / (1.0 - beta ** 2) * math.log(1.0 / beta) / D),
        ("constant", -0.25 * R2 ** 2 / D),
    ]
    full = math.fsum(v for _, v in terms) - k / (8.0 * D)
    return _result(terms, "O(ε, β⁴)·R2²/D", "angular-half-width", _dual_warnings(eps_ang, beta),
                   alternates={"with-particular-mean": full})


def mfpt_rectangle_avg(a, b, eps_len, D=1.0):
    """Average MFPT in (0,a)x(0,b) with the corner window [a-eps, a] x {b}."""
    _check_D(D)
    _require(a > 0 and b > 0, f"need a, b > 0, got a={a}, b={b}")
    _require(0 < eps_len < a, f"window length must lie in (0, a), got {eps_len}")
    beta = math.exp(-math.pi * b / a)
    k = 2.0 * a * b / math.pi
    terms = [
        ("corner-log", k * math.log(a / eps_len) / D),
        ("log-2-over-pi", k * math.log(2.0 / math.pi) / D),
        ("aspect", k * (math.pi / 6.0) * (b / a) / D),
        ("beta-correction", 2.0 * k * beta ** 2 / D),
    ]
    return _result(terms, "O(ε/a, β⁴)", "arclength", _dual_warnings(math.pi * eps_len / a, beta))


# ---------------------------------------------------------------------------
# Sphere
# ---------------------------------------------------------------------------

def sphere_cap_mfpt_point(R, delta, theta, D=1.0):
    """Exact MFPT 2 R^2 log(sin(theta/2)/sin(delta/2)) / D when the whole rim
    of the removed cap absorbs. Vectorised over theta."""
    _check_D(D)
    _require(R > 0 and 0 < delta < math.pi, f"need R > 0 and 0 < delta < pi, got R={R}, delta={delta}")
    th = np.asarray(theta, dtype=float)
    if np.any(th < delta) or np.any(th > math.pi):
        raise GeometryError(f"theta must lie in [delta, pi] = [{delta}, {math.pi}]")
    v = 2.0 * R ** 2 * np.log(np.sin(th / 2.0) / math.sin(delta / 2.0)) / D
    return float(v) if v.ndim == 0 else v


def sphere_cap_mfpt_avg(R, delta, D=1.0):
    """Average of the all-absorbing-rim MFPT over the decapitated sphere.

    Value is the exact expression -2R^2 (log sin(delta/2)/cos^2(delta/2) + 1/2);
    the small-delta expansion 2R^2 (log(1/delta) + log 2 - 1/2) is in
    alternates["asymptotic"].
    """
    _check_D(D)
    _require(R > 0 and 0 < delta < math.pi, f"need R > 0 and 0 < delta < pi, got R={R}, delta={delta}")
    c2 = math.cos(delta / 2.0) ** 2
    terms = [
        ("log-sin", -2.0 * R ** 2 * math.log(math.sin(delta / 2.0)) / c2 / D),
        ("constant", -R ** 2 / D),
    ]
    asym = 2.0 * R ** 2 * (math.log(1.0 / delta) + math.log(2.0) - 0.5) / D
    caveats = []
    if delta > 0.5:
        caveats.append(f"delta={delta:g} is not small; the asymptotic form is inaccurate")
    return _result(terms, "exact", "none", caveats, alternates={"asymptotic": asym})


def sphere_window_mfpt_avg(R, delta, eps_ang, D=1.0):
    """Average MFPT on the decapitated sphere with a window |phi - pi| < eps on
    the cap rim (the rest of the rim reflects).

    Value is the expansion 2R^2 [log(1/delta) + 2 log(1/eps) + 3 log 2 - 1/2];
    the form exact in delta, 4R^2 [-(log sin(delta/2)/cos^2(delta/2) + 1/2)/2
    + cos^2(delta/2) log(2/eps)], is alternates["exact-in-delta"].
    """
    _check_D(D)
    _require(R > 0 and 0 < delta < math.pi / 2, f"need R > 0 and 0 < delta < pi/2, got R={R}, delta={delta}")
    _require(0 < eps_ang < math.pi, f"eps_ang must lie in (0, pi), got {eps_ang}")
    s = 2.0 * R ** 2 / D
    terms = [
        ("cap-log", s * math.log(1.0 / delta)),
        ("window-log", 2.0 * s * math.log(1.0 / eps_ang)),
        ("3log2", 3.0 * s * math.log(2.0)),
        ("constant", -0.5 * s),
    ]
    c2 = math.cos(delta / 2.0) ** 2
    exact_delta = 4.0 * R ** 2 / D * (-0.5 * (math.log(math.sin(delta / 2.0)) / c2 + 0.5)
                                      + c2 * math.log(2.0 / eps_ang))
    caveats = []
    if eps_ang >= 0.1:
        caveats.append(f"eps={eps_ang:g} is not small; O(eps) remainder may dominate")
    if delta > 0.5:
        caveats.append(f"delta={delta:g} is not small; O(delta^2 log delta) remainder may dominate")
    return _result(terms, "O(ε, δ² log δ, δ² log ε)", "angular-half-width", caveats,
                   alternates={"exact-in-delta": exact_delta})


def sphere_window_mfpt_point(R, delta, eps_ang, theta, phi, D=1.0, series=None):
    """Pointwise MFPT on the decapitated sphere with a rim window at phi = pi.

    On the diameter-1 sphere the MFPT is
    1/2 log(sin(theta/2)/sin(delta/2)) + a0/2 + sum a_n rt^n cos(n phi),
    rt = cot(theta/2)/cot(delta/2), then scaled by (2R)^2/D. With a
    SeriesSolution for the disk problem (H = 0, rhs = cos^2(delta/2)/2) the
    coefficients a_n = c_n and c0 come from it; without one a0/2 is
    -cos^2(delta/2) log(eps/2) and the sum is dropped (an O(1) error).
    Missing coefficients are reported through warnings.warn.
    """
    _check_D(D)
    _require(R > 0 and 0 < delta < math.pi, f"need R > 0 and 0 < delta < pi, got R={R}, delta={delta}")
    _require(0 < eps_ang < math.pi, f"eps_ang must lie in (0, pi), got {eps_ang}")
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    if np.any(th < delta) or np.any(th > math.pi):
        raise GeometryError(f"theta must lie in [delta, pi] = [{delta}, {math.pi}]")
    v = 0.5 * np.log(np.sin(th / 2.0) / math.sin(delta / 2.0))
    if series is None:
        v = v - math.cos(delta / 2.0) ** 2 * math.log(eps_ang / 2.0)
        warnings.warn("series coefficients a_n not supplied; the O(1) sum is omitted", stacklevel=2)
    else:
        rt = (1.0 / np.tan(th / 2.0)) * math.tan(delta / 2.0)
        v = v + series.c0 / 2.0 + series.cosine_sum(rt, ph)
    v = (2.0 * R) ** 2 * v / D
    return float(v) if np.ndim(v) == 0 else v
