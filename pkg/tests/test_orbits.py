import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from orbitcount.geometry import PlaneVector
from orbitcount.lattices import preset_hecke, preset_sl2z
from orbitcount.orbits import (
    CapExceededError, EnumerationError, EnumOptions, PrimitiveOrbit, cache_key, count_at_radius,
    enumerate_group, enumerate_orbit, oracle_orbit, primitive_count, primitive_points_oracle, read_orbit,
    totients, write_orbit,
)

SL2Z = preset_sl2z()
E1 = PlaneVector(1, 0)


@pytest.fixture(scope="module")
def sl2z_orbit():
    return enumerate_orbit(SL2Z, E1, 60)


@pytest.fixture(scope="module")
def hecke5_orbit():
    return enumerate_orbit(preset_hecke(5), E1, 40)


def test_small_orbit_matches_gcd_oracle(sl2z_orbit):
    assert sl2z_orbit.stabilized
    assert sl2z_orbit.point_set() == primitive_points_oracle(60)


def test_trivial_counts(sl2z_orbit):
    assert sl2z_orbit.count(1) == 4
    assert sl2z_orbit.count(math.sqrt(2)) == 8
    with pytest.raises(CapExceededError):
        sl2z_orbit.count(61)


@given(st.floats(1, 200))
def test_primitive_count_matches_brute_force(R):
    assert primitive_count(R) == len(primitive_points_oracle(R))


def test_oracle_orbit_counts_agree():
    orb = oracle_orbit(120)
    for R in (1, 7.5, 33, 120):
        assert orb.count(R) == primitive_count(R)


@given(st.floats(1, 60), st.floats(1, 60))
def test_count_is_monotone(sl2z_orbit, R1, R2):
    lo, hi = sorted((R1, R2))
    assert sl2z_orbit.count(lo) <= sl2z_orbit.count(hi)


def test_points_sorted_and_symmetric(sl2z_orbit, hecke5_orbit):
    for orb in (sl2z_orbit, hecke5_orbit):
        assert np.all(np.diff(orb.norms) >= 0)
        # -Id is in both groups, so the orbit is symmetric under v -> -v
        key = lambda p: (round(p[0], 6), round(p[1], 6))
        pts = {key(p) for p in orb.points}
        assert {key(-p) for p in orb.points} == pts


def test_hecke_orbit_closed_under_generators(hecke5_orbit):
    spec = preset_hecke(5)
    lam = spec.cusps[0].width
    inner = hecke5_orbit.points[hecke5_orbit.norms <= 40 / (1 + lam)]
    have = {(round(x, 6), round(y, 6)) for x, y in hecke5_orbit.points}
    for g in spec.symmetric_generators():
        imgs = inner @ g.as_array().T
        assert all((round(x, 6), round(y, 6)) in have for x, y in imgs)


def test_enumeration_deterministic():
    a = enumerate_orbit(preset_hecke(5), E1, 25)
    b = enumerate_orbit(preset_hecke(5), E1, 25)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.depth, b.depth)


def test_depth_cap_reports_unstabilized():
    orb = enumerate_orbit(SL2Z, E1, 30, EnumOptions(max_depth=3))
    assert not orb.stabilized
    with pytest.raises(EnumerationError):
        count_at_radius(orb, 10)


def test_options_validation():
    with pytest.raises(ValueError):
        EnumOptions(norm_slack=0.5)
    with pytest.raises(ValueError):
        EnumOptions(dedup_quantum=-1)
    assert EnumOptions().digest() == EnumOptions().digest() != EnumOptions(norm_slack=3).digest()


def test_cache_roundtrip(tmp_path, sl2z_orbit, hecke5_orbit):
    for orb in (sl2z_orbit, hecke5_orbit):
        path = write_orbit(tmp_path / "o.orb", orb, "digest")
        assert path.read_bytes()[:4] == b"ORB1"
        back = read_orbit(path)
        assert np.array_equal(back.points, orb.points)
        assert back.stabilized == orb.stabilized and back.count(20) == orb.count(20)
        assert (back.exact_points is None) == (orb.exact_points is None)


def test_cache_key_distinguishes_inputs():
    o = EnumOptions()
    keys = {cache_key("sl2z", E1, 10, o), cache_key("sl2z", E1, 11, o), cache_key("hecke:5", E1, 10, o),
            cache_key("sl2z", PlaneVector(0, 1), 10, o)}
    assert len(keys) == 4


def brute_sl2z_elements(bound):
    m = int(bound)
    r = np.arange(-m, m + 1)
    a, b, c = np.meshgrid(r, r, r, indexing="ij")
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    count = 0
    for d in r:
        ok = (a * d - b * c == 1) & (a * a + b * b + c * c + d * d <= bound * bound)
        count += int(ok.sum())
    return count


@pytest.mark.parametrize("bound", [6.0, 15.0])
def test_group_enumeration_matches_brute_force(bound):
    elems, _, stabilized = enumerate_group(SL2Z, bound)
    assert stabilized
    assert len(elems) == brute_sl2z_elements(bound)


def test_totients_match_sympy():
    phi = totients(300)
    assert all(phi[n] == sympy.totient(n) for n in range(1, 301))


def test_primitive_orbit_power_sums():
    stream = PrimitiveOrbit(150).power_sums([2.0, 1.5 + 1j])
    direct = oracle_orbit(150).power_sums([2.0, 1.5 + 1j])
    assert np.allclose(stream, direct, rtol=1e-12)
    threaded = PrimitiveOrbit(150, workers=3, block=1000).power_sums([2.0])
    assert threaded[0] == pytest.approx(stream[0].real, rel=1e-13)


def test_primitive_orbit_growth_constant_dominates():
    orb = PrimitiveOrbit(500)
    C = orb.growth_constant()
    for R in np.linspace(250, 500, 37):
        assert primitive_count(R) <= C * R**2


def test_float_enumeration_terminates_near_rounding_midpoints():
    # this cap once put an orbit coordinate on a rounding midpoint of the dedup grid
    spec = preset_hecke(5)
    a = enumerate_orbit(spec, PlaneVector(1.0, 0.0), 6.0 * (1 + 1e-9))
    b = enumerate_orbit(spec, PlaneVector(1.0, 0.0), 6.0)
    assert a.stabilized and len(a) == len(b) == 64


def test_rounding_variants_merge_near_duplicates():
    from orbitcount.orbits import _KeyMaker, _fresh_quantized

    km = _KeyMaker(2, 10.0, 0.1)
    pts = np.array([[0.25 - 1e-12, 1.0], [0.25 + 1e-12, 1.0], [0.7, 1.0]])
    keys = km(pts)
    assert keys[0] != keys[1]  # rint splits them
    order = np.argsort(keys)
    fresh = _fresh_quantized(km.variants(pts[order]), keys[order], keys[:0])
    assert fresh.sum() == 2
