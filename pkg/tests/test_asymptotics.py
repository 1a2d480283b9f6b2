import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from narrowescape import asymptotics as asy
from narrowescape.dualseries import DualSeriesProblem, solve_collocation
from narrowescape.geometry import GeometryError, Stereographic, TangentCircles, map_apply


# ---------------------------------------------------------------------------
# worked values (closed forms evaluated independently with math)
# ---------------------------------------------------------------------------

def test_leading_smooth_values():
    assert asy.mfpt_leading_smooth(4 * math.pi, 1, 0.01).value == pytest.approx(4 * math.log(100), rel=1e-14)
    assert asy.mfpt_leading_smooth(4 * math.pi, 1, 0.01).value == pytest.approx(18.4207, abs=1e-4)
    assert asy.mfpt_leading_smooth(math.pi, 2, 0.1).value == pytest.approx(1.15129, abs=1e-5)


def test_leading_smooth_at_full_boundary_is_zero_with_warning():
    res = asy.mfpt_leading_smooth(1.0, 1.0, 1.0)
    assert res.value == 0.0
    assert res.warnings
    with pytest.raises(GeometryError):
        asy.mfpt_leading_smooth(1.0, 1.0, 1.5)


def test_leading_order_reports_unknown_constant():
    res = asy.mfpt_leading_smooth(3.0, 1.0, 0.01)
    assert res.unresolved == (("O(1)", 3.0 / math.pi),)
    assert res.error_order == "O(1) inside brackets"


def test_corner_values():
    res = asy.mfpt_corner_leading(1, math.pi / 2, 1, 0.01)
    assert res.value == pytest.approx(2 / math.pi * math.log(100), rel=1e-14)
    assert res.value == pytest.approx(2.93174, abs=1e-5)
    flat = asy.mfpt_corner_leading(1, math.pi, 1, 0.01)
    assert flat == asy.mfpt_leading_smooth(1, 1, 0.01)
    assert res.value / flat.value == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(GeometryError):
        asy.mfpt_corner_leading(1, 0.0, 1, 0.01)


def test_annulus_average_value():
    res = asy.mfpt_annulus_avg(1, 2, 0.01)
    expected = 3 * (math.log(100) + math.log(2) + 0.5) + (2 / 0.75) * math.log(2) - 1
    assert res.value == pytest.approx(expected, rel=1e-14)
    assert res.value == pytest.approx(18.2434, abs=1e-4)
    assert [n for n, _ in res.terms] == ["narrow-escape-log", "log2", "beta-correction",
                                         "green-singularity-log", "constant"]
    # coefficient of log(1/eps) is |Omega|/pi
    assert res.term("narrow-escape-log") / math.log(100) == pytest.approx(3.0, rel=1e-14)
    assert res.alternates["with-particular-mean"] == pytest.approx(res.value - 3 / 8, rel=1e-14)


def test_annulus_green_log_diverges_as_inner_radius_shrinks():
    vals = [asy.mfpt_annulus_avg(r1, 1.0, 0.01) for r1 in (1e-1, 1e-2, 1e-3, 1e-4)]
    green = [v.term("green-singularity-log") for v in vals]
    beta = [v.term("beta-correction") for v in vals]
    assert all(b > a for a, b in zip(green, green[1:]))
    assert beta[-1] < 1e-7


def test_c0_annulus_value():
    res = asy.c0_annulus(1, 2, 0.01)
    assert res.value == pytest.approx(3 * (2 * math.log(100) + 2 * math.log(2) + 1.0), rel=1e-14)
    assert res.value == pytest.approx(34.7899, abs=1e-4)
    assert asy.c0_annulus(1, 2, 0.5).warnings


def test_rectangle_average_value():
    res = asy.mfpt_rectangle_avg(1, 1, 0.01)
    expected = (2 / math.pi) * (math.log(100) + math.log(2 / math.pi) + math.pi / 6 + 2 * math.exp(-2 * math.pi))
    assert res.value == pytest.approx(expected, rel=1e-14)
    assert res.value == pytest.approx(2.979967, abs=1e-6)
    assert math.exp(-math.pi) ** 4 == pytest.approx(3.5e-6, abs=1e-7)
    assert res.term("corner-log") / math.log(100) == pytest.approx(2.0 / math.pi, rel=1e-14)
    with pytest.raises(GeometryError):
        asy.mfpt_rectangle_avg(1, 1, 1.0)


def test_rectangle_and_annulus_share_c0_under_substitution():
    for a, b, eps in [(1, 1, 0.01), (2, 1, 0.03), (1, 0.7, 0.002)]:
        beta = math.exp(-math.pi * b / a)
        k = 2 * a * b / math.pi
        # an annulus with R2^2 - R1^2 = k, R1/R2 = beta, half-angle pi*eps/a
        R2 = math.sqrt(k / (1 - beta ** 2))
        ann = asy.c0_annulus(beta * R2, R2, math.pi * eps / a)
        assert ann.value == pytest.approx(asy.c0_rectangle(a, b, eps).value, rel=1e-12)


def test_cusp_values():
    dom = TangentCircles(0.5, 0.5)
    res = asy.mfpt_cusp_leading(dom, 0.05)
    assert res.value == pytest.approx(3 * math.pi / 16 / 0.05, rel=1e-14)
    assert res.value == pytest.approx(11.7810, abs=1e-4)
    assert res.alternates["radius-form"] == pytest.approx(res.value, rel=1e-12)
    with pytest.raises(GeometryError):
        asy.mfpt_cusp_leading(dom, 1.2)
    with pytest.raises(GeometryError):
        asy.mfpt_cusp_leading("crescent", 0.1)


def test_cusp_increasing_in_d_with_finite_limit():
    R, eps = 0.7, 0.03
    vals = [asy.mfpt_cusp_leading(TangentCircles(R, d), eps).value for d in (0.1, 0.3, 0.5, 0.7, 0.9, 0.999)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(2 * math.pi * R ** 2 / eps, rel=2e-3)


def test_sphere_cap_point_values():
    assert asy.sphere_cap_mfpt_point(1, 0.2, 0.2) == 0.0
    assert asy.sphere_cap_mfpt_point(1, 0.2, math.pi) == pytest.approx(4.60851, abs=1e-5)
    theta = np.linspace(0.2, math.pi, 200)
    v = asy.sphere_cap_mfpt_point(1, 0.2, theta)
    assert np.argmax(v) == len(theta) - 1
    with pytest.raises(GeometryError):
        asy.sphere_cap_mfpt_point(1, 0.2, 0.1)


def test_sphere_cap_average_matches_quadrature():
    for R, delta, D in [(1, 0.2, 1), (2, 0.5, 0.5), (1, 1.5, 1)]:
        res = asy.sphere_cap_mfpt_avg(R, delta, D)
        integral, _ = integrate.quad(lambda t: asy.sphere_cap_mfpt_point(R, delta, t, D) * math.sin(t),
                                     delta, math.pi, epsabs=1e-13, epsrel=1e-13)
        assert res.value == pytest.approx(integral / (1 + math.cos(delta)), rel=1e-10)
    res = asy.sphere_cap_mfpt_avg(1, 0.2)
    assert res.value == pytest.approx(3.654899, abs=1e-6)
    assert res.alternates["asymptotic"] == pytest.approx(3.60517, abs=1e-5)
    assert abs(res.value - res.alternates["asymptotic"]) < 0.2 ** 2 * abs(math.log(0.2)) * 2


def test_sphere_window_average():
    res = asy.sphere_window_mfpt_avg(1, 0.2, 0.01)
    assert res.value == pytest.approx(2 * (math.log(5) + 2 * math.log(100) + 3 * math.log(2) - 0.5), rel=1e-14)
    assert res.value == pytest.approx(24.7984, abs=1e-4)
    ratio = (res.term("window-log") / math.log(100)) / (res.term("cap-log") / math.log(5))
    assert ratio == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(GeometryError):
        asy.sphere_window_mfpt_avg(1, 2.0, 0.01)


def test_sphere_window_point_without_series_warns():
    with pytest.warns(UserWarning, match="not supplied"):
        v = asy.sphere_window_mfpt_point(1, 0.3, 0.05, math.pi, 0.0)
    assert np.isfinite(v)


@pytest.fixture(scope="module")
def disk_series():
    delta, eps = 0.3, 0.05
    return delta, eps, solve_collocation(DualSeriesProblem.disk(math.cos(delta / 2) ** 2 / 2, eps))


def test_sphere_window_point_with_series(disk_series):
    delta, eps, sol = disk_series
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        at_window = asy.sphere_window_mfpt_point(1, delta, eps, delta, math.pi, series=sol)
        south = asy.sphere_window_mfpt_point(1, delta, eps, math.pi, 0.0, series=sol)
        h = 1e-4
        dphi = (asy.sphere_window_mfpt_point(1, delta, eps, 1.0, h, series=sol)
                - asy.sphere_window_mfpt_point(1, delta, eps, 1.0, -h, series=sol)) / (2 * h)
    assert abs(at_window) < 1e-4
    assert south > asy.sphere_window_mfpt_avg(1, delta, eps).value
    assert abs(dphi) < 1e-8


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

def _all_results(eps):
    dom = TangentCircles(0.5, 0.5)
    return [
        asy.mfpt_leading_smooth(2.0, 1.3, eps),
        asy.mfpt_corner_leading(2.0, 1.1, 0.7, eps),
        asy.mfpt_cusp_leading(dom, eps),
        asy.c0_annulus(1, 2, eps),
        asy.c0_rectangle(1, 1, eps),
        asy.mfpt_annulus_avg(1, 2, eps, 0.5),
        asy.mfpt_rectangle_avg(1.5, 1, eps),
        asy.sphere_window_mfpt_avg(1, 0.3, eps),
        asy.sphere_cap_mfpt_avg(1, eps),
    ]


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 0.9))
def test_value_is_sum_of_terms(eps):
    for res in _all_results(eps):
        assert res.value == pytest.approx(math.fsum(v for _, v in res.terms), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 0.5), st.floats(1.01, 1.9))
def test_decreasing_in_window_size(eps, factor):
    small, big = _all_results(eps), _all_results(eps * factor)
    for a, b in zip(small, big):
        assert b.value < a.value


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20), st.floats(1e-3, 0.5), st.floats(0.1, 5))
def test_diffusivity_scales_inverse(area, eps, D):
    assert asy.mfpt_leading_smooth(area, D, eps).value == pytest.approx(
        asy.mfpt_leading_smooth(area, 1.0, eps).value / D, rel=1e-13)
    assert asy.mfpt_annulus_avg(1, 3, eps, D).value == pytest.approx(asy.mfpt_annulus_avg(1, 3, eps).value / D,
                                                                     rel=1e-13)


def test_laplace_beltrami_residual():
    R, delta, h = 1.3, 0.3, 1e-4
    theta = np.linspace(delta + 0.05, math.pi - 0.05, 50)
    v = lambda t: asy.sphere_cap_mfpt_point(R, delta, t)
    d1 = (v(theta + h) - v(theta - h)) / (2 * h)
    d2 = (v(theta + h) - 2 * v(theta) + v(theta - h)) / h ** 2
    lap = (d2 + d1 / np.tan(theta)) / R ** 2
    assert np.max(np.abs(lap + 1.0)) < 1e-5
    # no flux at the south pole
    assert (v(math.pi) - v(math.pi - h)) / h == pytest.approx(0.0, abs=1e-3)


def test_stereographic_transport_of_cap_solution():
    delta = 0.4
    stereo = Stereographic()
    r_delta = abs(map_apply(stereo, (delta, 0.0)))
    assert r_delta == pytest.approx(1 / math.tan(delta / 2), rel=1e-14)
    theta = np.linspace(delta, math.pi, 101)[:-1]
    phi = np.linspace(0, 2 * math.pi, 100, endpoint=False)
    r = np.abs(map_apply(stereo, np.stack([theta, phi], axis=-1)))
    planar = 0.25 * np.log((1 + r_delta ** 2) / (1 + r ** 2))
    for R in (0.5, 1.0, 2.5):
        # the diameter-one solution scaled by (2R)^2
        assert np.allclose((2 * R) ** 2 * planar, asy.sphere_cap_mfpt_point(R, delta, theta), rtol=1e-12, atol=1e-14)


def test_planar_cap_problem_residual():
    # the transported function solves Lap V = -1/(1+r^2)^2 in the plane
    r_delta = 3.0
    V = lambda r: 0.25 * np.log((1 + r_delta ** 2) / (1 + r ** 2))
    r = np.linspace(0.2, 2.8, 30)
    h = 1e-4
    lap = (V(r + h) - 2 * V(r) + V(r - h)) / h ** 2 + (V(r + h) - V(r - h)) / (2 * h * r)
    assert np.allclose(lap, -1 / (1 + r ** 2) ** 2, atol=1e-6)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

def test_result_json_round_trip():
    res = asy.mfpt_annulus_avg(1, 2, 0.2)
    back = asy.AsymptoticResult.from_dict(json.loads(res.to_json()))
    assert back == res
    assert res.warnings


def test_result_rejects_unknown_tags():
    with pytest.raises(ValueError):
        asy.AsymptoticResult(1.0, (("a", 1.0),), "O(eps^7)", "none")
    with pytest.raises(ValueError):
        asy.AsymptoticResult(1.0, (("a", 1.0),), "exact", "furlongs")


@pytest.mark.parametrize("call", [
    lambda: asy.mfpt_annulus_avg(2, 1, 0.1),
    lambda: asy.mfpt_annulus_avg(1, 2, 0.1, D=0),
    lambda: asy.mfpt_annulus_avg(1, 2, 4.0),
    lambda: asy.c0_rectangle(1, -1, 0.1),
    lambda: asy.sphere_cap_mfpt_avg(1, 4.0),
    lambda: asy.sphere_window_mfpt_point(1, 0.3, 0.05, 0.1, 0.0),
])
def test_domain_errors(call):
    with pytest.raises(GeometryError):
        call()
