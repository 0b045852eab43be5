import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitcount.orbits import oracle_orbit, primitive_points_array
from orbitcount.regions import (
    Ball, CountCurve, DegenerateGridError, Ellipse, EllipticSector, RegionError, Sector, StarProfile, StarShape,
    cosine_profile, count_curve, count_in_region, fit_constant, fit_error_exponent, region_from_dict,
    sandwich_check, sector_profile,
)


@pytest.fixture(scope="module")
def orbit():
    return oracle_orbit(120)


@pytest.fixture(scope="module")
def raw_points():
    return primitive_points_array(120).astype(float)


def brute_count(points, inside):
    return int(sum(1 for p in points if inside(p)))


def test_ball_count_is_exact(orbit, raw_points):
    for R in (1, 5.5, 50, 100):
        assert count_in_region(orbit, Ball(), R) == brute_count(raw_points, lambda p: p @ p <= R * R)


def test_ellipse_count_against_quadratic_form(orbit, raw_points):
    L = np.array([[2.0, 0.5], [0.0, 0.5]])
    Q = np.linalg.inv(L).T @ np.linalg.inv(L)
    R = 40.0
    want = brute_count(raw_points, lambda p: p @ Q @ p <= R * R * (1 + 1e-12))
    assert count_in_region(orbit, Ellipse(L), R) == want
    assert Ellipse(L).area() == pytest.approx(math.pi)


def test_elliptic_sector_with_identity_is_sector(orbit):
    for R in (20.0, 80.0):
        assert count_in_region(orbit, EllipticSector(np.eye(2), 0.3, 1.1), R) == \
            count_in_region(orbit, Sector(0.3, 1.1), R)


def test_sector_closed_boundary(orbit):
    # the rays at angle 0 and pi/2 carry the points (1, 0) and (0, 1)
    assert count_in_region(orbit, Sector(0.0, math.pi / 2), 1.0) == 2


@given(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_adjacent_sectors_are_additive(orbit, start, l1, l2):
    R = 60.0
    a = count_in_region(orbit, Sector(start, l1), R)
    b = count_in_region(orbit, Sector(start + l1, l2), R)
    both = count_in_region(orbit, Sector(start, l1 + l2), R)
    ray = count_in_region(orbit, Sector(start + l1, 1e-13), R)
    assert a + b - ray == both


def test_sector_profile_partitions_ball(orbit):
    prof = sector_profile(orbit, 7, 100.0)
    assert sum(n for _, n in prof) == orbit.count(100.0)
    # rotation by pi/2 in the group forces equal quarter counts
    quarters = sector_profile(orbit, 4, 100.0)
    assert len({n for _, n in quarters}) == 1


def test_star_profile_series_and_area():
    prof = cosine_profile(0.3, 2)
    assert prof.sup == pytest.approx(1.3)
    assert prof.sup_d1 == pytest.approx(0.6, rel=1e-6)
    assert prof.sup_d2 == pytest.approx(1.2, rel=1e-6)
    assert prof.area() == pytest.approx(math.pi * (1 + 0.045))


def test_star_profile_rejects_rough_or_negative_profiles():
    with pytest.raises(RegionError):
        StarProfile(lambda th: np.cos(th))
    with pytest.raises(RegionError):
        StarProfile(lambda th: 1.0 + 0.5 * np.abs(np.sin(th)), order=8)


def test_star_with_zero_amplitude_is_ball(orbit):
    star = StarShape(cosine_profile(0.0))
    assert count_in_region(orbit, star, 90.0) == orbit.count(90.0)


def test_region_from_dict():
    assert isinstance(region_from_dict({"type": "sector", "start": 0, "length": 1}), Sector)
    assert isinstance(region_from_dict({"type": "star", "amplitude": 0.2}), StarShape)
    with pytest.raises(RegionError):
        region_from_dict({"type": "hexagon"})


def test_count_beyond_cap_refused(orbit):
    with pytest.raises(RegionError):
        count_in_region(orbit, StarShape(cosine_profile(0.3)), 100.0)


def test_fit_needs_a_decade():
    curve = CountCurve(np.linspace(10, 50, 8), np.arange(8))
    with pytest.raises(DegenerateGridError):
        fit_constant(curve)


def test_fit_recovers_exact_quadratic():
    R = np.geomspace(1, 100, 20)
    curve = CountCurve(R, np.floor(3.0 * R**2).astype(int))
    assert fit_constant(curve).constant == pytest.approx(3.0, rel=1e-3)


def test_error_exponent_zero_residual_path():
    R = np.arange(1, 21, dtype=float)
    curve = CountCurve(R, (2 * R**2).astype(int))
    res = fit_error_exponent(curve, 2.0)
    assert res.exponent is None and "undefined" in res.note


def test_error_exponent_of_synthetic_power_law():
    R = np.geomspace(10, 1e4, 40)
    N = np.rint(R**2 + R**1.5).astype(np.int64)
    res = fit_error_exponent(CountCurve(R, N), 1.0)
    assert res.exponent == pytest.approx(1.5, abs=0.02)


def test_count_curve_rejects_unsorted_grid(orbit):
    with pytest.raises(ValueError):
        count_curve(orbit, Ball(), [5, 3])


@pytest.mark.parametrize("U", [4.0, 8.0])
def test_sandwich_small(orbit, U):
    assert sandwich_check(orbit, U, 80.0)["pass"]
