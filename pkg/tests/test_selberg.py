import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitcount.geometry import angle_in_interval
from orbitcount.selberg import check_selberg_pair, selberg_polynomial_pair, selberg_suite


@given(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0.05, 6.0), st.sampled_from([4, 8, 13, 32]))
def test_majorant_and_minorant(start, length, V):
    pair = selberg_polynomial_pair(start, length, V)
    chk = check_selberg_pair(pair, grid_points=4096)
    assert chk.majorant_ok and chk.minorant_ok and chk.degree_ok


@given(st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0.05, 6.0), st.sampled_from([4, 16, 64]))
def test_zeroth_coefficient_defect(start, length, V):
    pair = selberg_polynomial_pair(start, length, V)
    target = length / (2 * math.pi)
    # Selberg: c0 = |J| / 2pi +- 1 / (V + 1)
    assert pair.coefficient(0, "plus").real == pytest.approx(target + 1 / (V + 1), abs=1e-12)
    assert pair.coefficient(0, "minus").real == pytest.approx(target - 1 / (V + 1), abs=1e-12)


def test_real_valued_and_degree():
    pair = selberg_polynomial_pair(0.4, 1.0, 10)
    for n in range(1, 11):
        assert pair.coefficient(-n, "plus") == pytest.approx(np.conj(pair.coefficient(n, "plus")))
    assert pair.coefficient(11, "plus") == 0


def test_coefficients_decay_like_one_over_n():
    # |k c_k| <= 1/pi from the sawtooth part plus k (1 - k/(V+1)) / (V+1) <= 1/4 from the Fejer part
    for V in (8, 64, 256):
        chk = check_selberg_pair(selberg_polynomial_pair(0.0, math.pi / 3, V))
        assert chk.coef_decay_constant <= 1 / math.pi + 0.25 + 1e-12


def test_full_circle_is_constant():
    pair = selberg_polynomial_pair(0.0, 2 * math.pi, 8)
    assert np.allclose(pair.evaluate(np.linspace(0, 6, 50), "minus"), 1)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        selberg_polynomial_pair(0, 0, 8)
    with pytest.raises(ValueError):
        selberg_polynomial_pair(0, 1, 0)


def test_l1_gap_matches_zeroth_defect():
    pair = selberg_polynomial_pair(1.0, 2.0, 16)
    th = np.linspace(0, 2 * math.pi, 20000, endpoint=False)
    ind = angle_in_interval(th, 1.0, 2.0)
    gap = np.mean(pair.evaluate(th, "plus") - ind)
    assert gap == pytest.approx(1 / 17, rel=1e-3)


def test_suite_passes():
    rep = selberg_suite()
    assert rep["properties_ok"] and rep["stable"]
