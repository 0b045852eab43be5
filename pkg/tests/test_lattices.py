import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from orbitcount.geometry import MINUS_IDENTITY, PlaneVector
from orbitcount.lattices import (
    LatticeError, extend_with_minus_id, preset_hecke, preset_sl2z, quadratic_constant, resolve_lattice,
    custom_lattice,
)
from orbitcount.orbits import enumerate_orbit


def hyperbolic_area_of_strip_domain(width):
    """Area of {|x| <= width/2, |z| >= 1} in the upper half plane, by quadrature."""
    inner = lambda x: 1.0 / math.sqrt(1.0 - x * x)  # integral of dy / y^2 from sqrt(1-x^2)
    val, _ = quad(inner, -width / 2, width / 2)
    return val


def monte_carlo_area(width, n=400_000, seed=1):
    # y = 1 / u maps the measure dy / y^2 to du on (0, 1]; truncating at y >= 1/2 loses nothing
    rng = np.random.default_rng(seed)
    x = rng.uniform(-width / 2, width / 2, n)
    u = rng.uniform(0, 2, n)
    inside = x**2 + 1.0 / np.maximum(u, 1e-300) ** 2 >= 1.0
    return width * 2 * inside.mean()


@pytest.mark.parametrize("q", [3, 4, 5, 6, 8])
def test_covolume_matches_quadrature(q):
    spec = preset_hecke(q)
    width = spec.cusps[0].width
    assert spec.covolume == pytest.approx(hyperbolic_area_of_strip_domain(width), rel=1e-9)


def test_covolume_monte_carlo_sl2z():
    assert monte_carlo_area(1.0) == pytest.approx(math.pi / 3, rel=0.01)


def test_generators_unimodular_and_words():
    spec = preset_sl2z()
    assert spec.is_integral
    assert spec.word("SS").allclose(MINUS_IDENTITY)
    assert spec.word("ST").allclose(spec.word("S") @ spec.word("T"))
    assert spec.word("T'T").allclose(spec.word(""))
    with pytest.raises(LatticeError):
        spec.word("X")


def test_hecke_three_is_sl2z_orbit():
    a = enumerate_orbit(resolve_lattice("hecke:3"), PlaneVector(1, 0), 50).point_set()
    b = enumerate_orbit(resolve_lattice("sl2z"), PlaneVector(1, 0), 50).point_set()
    assert a == b


def test_resolve_errors():
    with pytest.raises(LatticeError):
        resolve_lattice("hecke:2")
    with pytest.raises(LatticeError):
        resolve_lattice("gamma0:5")


def test_quadratic_constant_sl2z():
    assert quadratic_constant(preset_sl2z()) == pytest.approx(6 / math.pi)


def test_quadratic_constant_hecke_includes_width():
    spec = preset_hecke(5)
    lam = 2 * math.cos(math.pi / 5)
    assert quadratic_constant(spec) == pytest.approx(2 * lam / (3 * math.pi / 5))


def test_extend_with_minus_id():
    spec = custom_lattice("t", [preset_sl2z().generator("T")])
    ext = extend_with_minus_id(spec)
    assert ext.has_minus_id and ext.word(ext.minus_id_word).allclose(MINUS_IDENTITY)
    assert ext.covolume == spec.covolume
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        same = extend_with_minus_id(preset_sl2z())
    assert same == preset_sl2z() and rec


def test_custom_lattice_flags_unverified_covolume():
    spec = custom_lattice("x", [preset_sl2z().generator("S")])
    assert not spec.covolume_verified
