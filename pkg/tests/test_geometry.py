"""Geometry layer: area functions, exact perimeters and variations, data."""

import math

import numpy as np
import pytest

from heatlab import (
    InvalidArgumentError,
    RangeError,
    ball_indicator,
    ball_volume,
    complement_indicator,
    constant_one,
    custom_manifold,
    euclidean,
    exact_total_variation,
    log_area_integral,
    perimeter_ball,
    piecewise,
    power_exp_weight,
    sphere_constant,
    warped_cone,
)
from heatlab.geometry import RadialBVDatum


def test_sphere_constant_small_dimensions():
    # surface area of the unit sphere: 2 pi (n=2), 4 pi (n=3), 2 pi^2 (n=4)
    assert abs(sphere_constant(2) - 2 * math.pi) < 1e-14
    assert abs(sphere_constant(3) - 4 * math.pi) < 1e-14
    assert abs(sphere_constant(4) - 2 * math.pi ** 2) < 1e-13


def test_euclidean_perimeter_and_volume(euclid3):
    for r in (0.25, 1.0, 3.0):
        per = perimeter_ball(euclid3, r)
        vol = ball_volume(euclid3, r)
        assert abs(per - 4 * math.pi * r ** 2) < 1e-12 * per, f"perimeter off at r={r}"
        assert abs(vol - 4 * math.pi * r ** 3 / 3) < 1e-10 * vol, f"volume off at r={r}"


def test_power_exp_perimeter(pe4):
    r = 1.5
    expected = 4 * math.pi * r ** 2 * math.exp(r ** 4)
    got = perimeter_ball(pe4, r)
    assert abs(got - expected) < 1e-11 * expected, f"{got} != {expected}"


def test_power_exp_rejects_bad_parameters():
    with pytest.raises(InvalidArgumentError):
        power_exp_weight(0, 1)
    with pytest.raises(InvalidArgumentError):
        power_exp_weight(4, 2)


def test_cone_matches_weighted_log_area(pe4, cone3):
    # psi(r) = r exp(r^4/2) squared gives exactly the exp(r^4) weighted area
    rng = np.random.default_rng(7)
    radii = rng.uniform(0.05, 4.5, size=64)
    a = pe4.log_area(radii)
    b = cone3.log_area(radii)
    scale = np.maximum(np.abs(a), 1.0)
    worst = np.max(np.abs(a - b) / scale)
    assert worst < 1e-12, f"log areas of the two models differ by {worst:.3e}"


def test_custom_manifold_interpolates_tabulated_model(euclid3):
    # log-spaced table resolves the log r curvature near the pole
    radii = np.geomspace(0.05, 5.0, 200)
    table = custom_manifold(radii, euclid3.log_area(radii))
    probe = np.geomspace(0.07, 4.9, 57)
    err = np.max(np.abs(table.log_area(probe) - euclid3.log_area(probe)))
    assert err < 1e-6, f"tabulated log area off by {err:.3e}"
    # outside the table is a hard error, not an extrapolation
    with pytest.raises(InvalidArgumentError):
        table.log_area(5.5)


def test_custom_manifold_rejects_bad_tables():
    with pytest.raises(InvalidArgumentError):
        custom_manifold([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])  # too short
    with pytest.raises(InvalidArgumentError):
        custom_manifold([1.0, 1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        custom_manifold([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0])


def test_log_area_integral_euclidean(euclid3):
    # integral of r^2 over [1, 2] is 7/3; the function returns its log
    got = log_area_integral(euclid3, 1.0, 2.0)
    assert abs(got - math.log(7.0 / 3.0)) < 1e-12


def test_log_area_integral_orders_endpoints(euclid3):
    with pytest.raises(InvalidArgumentError):
        log_area_integral(euclid3, 2.0, 1.0)


def test_datum_validation():
    with pytest.raises(InvalidArgumentError):
        ball_indicator(0.0)
    with pytest.raises(InvalidArgumentError):
        ball_indicator(math.inf)
    with pytest.raises(InvalidArgumentError):
        piecewise([(0.0, 1.0)])
    with pytest.raises(InvalidArgumentError):
        piecewise([(1.0, 0.0), (0.5, 1.0)])
    with pytest.raises(InvalidArgumentError):
        piecewise([(1.0, 0.0), (1.0, 0.5), (1.0, 1.0), (2.0, 0.0)])
    with pytest.raises(InvalidArgumentError):
        RadialBVDatum("step_function")


def test_datum_support_and_jumps():
    ball = ball_indicator(1.25)
    assert ball.support_radius == 1.25
    assert ball.jump_radii == (1.25,)
    assert ball.value_range == (0.0, 1.0)

    comp = complement_indicator(2.0)
    assert comp.support_radius == math.inf
    assert comp.jump_radii == (2.0,)

    ramp = piecewise([(0.0, 1.0), (1.0, 1.0), (1.0, 0.25), (2.0, 0.0)])
    assert ramp.support_radius == 2.0
    assert ramp.jump_radii == (1.0,)

    one = constant_one()
    assert one.support_radius == math.inf
    assert one.jump_radii == ()


def test_datum_values_right_continuous():
    ball = ball_indicator(1.0)
    assert ball.value(0.999) == 1.0
    assert ball.value(1.0) == 0.0, "indicator must take the outside value at its jump"
    comp = complement_indicator(1.0)
    assert comp.value(1.0) == 1.0

    ramp = piecewise([(0.0, 1.0), (1.0, 1.0), (1.0, 0.5), (2.0, 0.0)])
    assert ramp.value(1.0) == 0.5
    assert abs(ramp.value(1.5) - 0.25) < 1e-15
    # vectorized evaluation agrees with scalar
    rs = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    vals = ramp.value(rs)
    for r, v in zip(rs, vals):
        assert v == ramp.value(float(r)), f"vector/scalar mismatch at r={r}"


def test_exact_tv_ball_euclidean(euclid3):
    tv = exact_total_variation(ball_indicator(1.0), euclid3)
    assert abs(tv - 4 * math.pi) < 1e-12 * 4 * math.pi
    tv2 = exact_total_variation(complement_indicator(2.0), euclid3)
    assert abs(tv2 - 16 * math.pi) < 1e-12 * 16 * math.pi


def test_exact_tv_linear_ramp(euclid3):
    # unit downward slope on [0, 1]: integral of 4 pi r^2 gives 4 pi / 3
    ramp = piecewise([(0.0, 1.0), (1.0, 0.0)])
    tv = exact_total_variation(ramp, euclid3)
    assert abs(tv - 4 * math.pi / 3) < 1e-10 * tv


def test_exact_tv_mixes_jumps_and_slopes(euclid3):
    datum = piecewise([(0.0, 1.0), (1.0, 1.0), (1.0, 0.5), (2.0, 0.0)])
    jump = 0.5 * 4 * math.pi
    slope = 0.5 * 4 * math.pi * (2.0 ** 3 - 1.0) / 3.0
    tv = exact_total_variation(datum, euclid3)
    assert abs(tv - (jump + slope)) < 1e-10 * tv


def test_exact_tv_weighted_ball(pe4, gauss):
    tv = exact_total_variation(ball_indicator(1.0), pe4)
    assert abs(tv - 4 * math.pi * math.e) < 1e-11 * tv
    tvg = exact_total_variation(ball_indicator(1.0), gauss)
    assert abs(tvg - 4 * math.pi / math.e) < 1e-11 * tvg


def test_exact_tv_overflow_is_an_error(pe4):
    # perimeter log ~ 6**4 = 1296, far past double range
    with pytest.raises(RangeError):
        exact_total_variation(ball_indicator(6.0), pe4)


def test_constant_has_no_variation(euclid3):
    assert exact_total_variation(constant_one(), euclid3) == 0.0
