import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitcount.geometry import (
    DeterminantError, Mat2, PlaneVector, UpperHalfPoint, ZeroVectorError, a_t, angle_in_interval, apply_linear,
    diag, iwasawa, iwasawa_arrays, mobius, normalize_angle, polar, recompose, rotation, unipotent,
)

angles = st.floats(0, 2 * math.pi, exclude_max=True)
scales = st.floats(0.05, 20)
shifts = st.floats(-20, 20)


def random_sl2(theta, y, x):
    return rotation(theta) @ diag(y) @ unipotent(x)


def test_integer_matrix_requires_unit_determinant():
    with pytest.raises(DeterminantError):
        Mat2(2, 0, 0, 1)
    with pytest.raises(DeterminantError):
        Mat2(1.0, 0.5, 0.0, 1.1)


def test_inverse_and_transpose():
    g = Mat2(2, 3, 1, 2)
    assert (g @ g.inv()).exact_equal(Mat2(1, 0, 0, 1))
    assert g.transpose().exact_equal(Mat2(2, 1, 3, 2))


def test_a_t_is_diag_of_half_exponential():
    assert a_t(0.3).allclose(diag(math.exp(0.15)))


@given(angles, scales, shifts)
def test_iwasawa_roundtrip(theta, y, x):
    g = random_sl2(theta, y, x)
    coords = iwasawa(g)
    assert recompose(coords).allclose(g, 1e-8 * max(1.0, g.max_abs() ** 2))
    assert coords.yscale > 0
    assert 0 <= coords.theta < 2 * math.pi


@given(angles, scales, shifts)
def test_iwasawa_arrays_match_scalar(theta, y, x):
    g = random_sl2(theta, y, x)
    th, yy, xx = iwasawa_arrays(g.as_array().reshape(1, 4))
    ref = iwasawa(g)
    assert abs(yy[0] - ref.yscale) <= 1e-12 * ref.yscale
    assert abs(xx[0] - ref.x) <= 1e-9 * max(1.0, abs(ref.x))
    d = abs(th[0] - ref.theta)
    assert min(d, 2 * math.pi - d) <= 1e-12


@given(angles, scales, shifts, st.floats(-5, 5), st.floats(0.1, 5))
def test_mobius_is_a_group_action(theta, y, x, zx, zy):
    g = random_sl2(theta, y, x)
    h = Mat2(2, 1, 1, 1)
    z = UpperHalfPoint(zx, zy)
    lhs = mobius(g @ h, z)
    rhs = mobius(g, mobius(h, z))
    assert abs(lhs.z - rhs.z) <= 1e-7 * max(1.0, abs(lhs.z))


def test_linear_action_and_polar():
    v = apply_linear(Mat2(0, -1, 1, 0), PlaneVector(1, 0))
    assert (v.x, v.y) == (0, 1)
    r, th = polar(v)
    assert r == 1 and th == pytest.approx(math.pi / 2)
    with pytest.raises(ZeroVectorError):
        polar(PlaneVector(0, 0))


def test_normalize_angle_half_open():
    assert normalize_angle(2 * math.pi) == 0.0
    assert normalize_angle(-1e-18) == 0.0 or normalize_angle(-1e-18) < 2 * math.pi
    arr = normalize_angle(np.array([-math.pi, 3 * math.pi]))
    assert np.allclose(arr, [math.pi, math.pi])


def test_angle_interval_wraps_and_is_closed():
    start, length = 1.75 * math.pi, 0.5 * math.pi
    th = np.array([1.75 * math.pi, 0.0, 0.25 * math.pi, math.pi])
    assert angle_in_interval(th, start, length).tolist() == [True, True, True, False]
    assert angle_in_interval(np.array([3.0]), 0.0, 2 * math.pi).all()
