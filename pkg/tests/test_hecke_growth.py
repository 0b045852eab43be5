import math

import numpy as np
import pytest

from orbitcount.geometry import PlaneVector
from orbitcount.lattices import preset_hecke, quadratic_constant
from orbitcount.orbits import enumerate_orbit
from orbitcount.regions import Ball, count_curve, fit_constant


@pytest.fixture(scope="module")
def hecke5_fit():
    orbit = enumerate_orbit(preset_hecke(5), PlaneVector(1.0, 0.0), 150)
    assert orbit.stabilized
    return fit_constant(count_curve(orbit, Ball(), np.geomspace(15, 150, 30))).constant


def test_hecke5_growth_constant_includes_cusp_width(hecke5_fit):
    lam = 2 * math.cos(math.pi / 5)
    expected = 2 * lam / (3 * math.pi / 5)
    assert quadratic_constant(preset_hecke(5)) == pytest.approx(expected)
    assert hecke5_fit == pytest.approx(expected, rel=0.05)


@pytest.mark.xfail(strict=True, reason="2/covol omits the cusp width lambda; measured N/R^2 is near 1.72")
def test_hecke5_growth_constant_two_over_covolume(hecke5_fit):
    assert hecke5_fit == pytest.approx(10 / (3 * math.pi), rel=0.05)
