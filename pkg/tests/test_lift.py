import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import tplquad

from orbitcount.geometry import Mat2, PlaneVector, apply_linear, diag, rotation, unipotent
from orbitcount.lattices import preset_hecke, preset_sl2z
from orbitcount.lift import (
    LiftError, StarDomainSpec, base_element, build_lifted_domain, cusp_reduction, fundamental_width,
    haar_box_volume, haar_invariance_test, half_disk, jump_star, kan_coords, lift_membership, lifted_volume,
    lipschitz_star, quarter_disk, stabilizer_generator, verify_lift_bijection, wellroundedness_fit,
    wellroundedness_ratio,
)

SL2Z = preset_sl2z()
HECKE5 = preset_hecke(5)


def test_base_element_maps_e1_to_v():
    v = PlaneVector(-1.5, 2.0)
    w = apply_linear(base_element(v), PlaneVector(1.0, 0.0))
    assert (w.x, w.y) == pytest.approx((v.x, v.y))


@given(st.integers(-40, 40), st.integers(-40, 40))
def test_cusp_reduction_on_primitive_vectors(x, y):
    if math.gcd(x, y) != 1:
        return
    v = PlaneVector(x, y)
    w = apply_linear(cusp_reduction(SL2Z, v), v)
    assert abs(w.y) < 1e-9 and w.x == pytest.approx(1.0)


def test_cusp_reduction_rejects_non_cusp_vectors():
    with pytest.raises(LiftError):
        cusp_reduction(SL2Z, PlaneVector(1.0, math.sqrt(2)), max_steps=200)


@pytest.mark.parametrize("v,x0", [((1, 0), 1.0), ((2, 0), 0.25), ((3, 0), 1 / 9), ((3, 5), 1.0)])
def test_fundamental_width_sl2z(v, x0):
    assert fundamental_width(SL2Z, PlaneVector(*v)) == pytest.approx(x0, rel=1e-9)


def test_stabilizer_fixes_v():
    for spec, v in ((SL2Z, PlaneVector(3, 5)), (HECKE5, PlaneVector(1.0, 0.0))):
        P = stabilizer_generator(spec, v)
        w = apply_linear(P, v)
        assert (w.x, w.y) == pytest.approx((v.x, v.y))


def test_fundamental_width_hecke_is_lambda():
    assert fundamental_width(HECKE5, PlaneVector(1.0, 0.0)) == pytest.approx(2 * math.cos(math.pi / 5))


@pytest.mark.parametrize("v", [(2, 0), (3, 0), (0, 1), (2, 3)])
@pytest.mark.parametrize("domain", [quarter_disk, half_disk, jump_star])
def test_bijection_for_other_base_vectors(v, domain):
    rep = verify_lift_bijection(SL2Z, PlaneVector(*v), domain(), 12.0)
    assert rep["conclusive"] and rep["orbit_count"] == rep["group_count"] > 0


def test_bijection_for_scaled_hecke_vector():
    rep = verify_lift_bijection(HECKE5, PlaneVector(1.5, 0.0), lipschitz_star(0.6), 10.0)
    assert rep["pass"]


def test_half_open_fundamental_interval():
    v = PlaneVector(1, 0)
    dom = build_lifted_domain(SL2Z, v, half_disk(), 10.0, 0.5)
    gamma = Mat2(2, 1, 1, 1)  # gamma e1 = (2, 1), inside the half disk of radius 10
    P = stabilizer_generator(SL2Z, v)
    xs = []
    members = 0
    for k in range(-3, 4):
        h = gamma @ Mat2(1, k, 0, 1)
        xs.append(kan_coords(h, dom)[2])
        members += lift_membership(h, dom)
    assert members == 1
    assert np.allclose(np.diff(xs), dom.x0)
    assert P.exact_equal(Mat2(1, 1, 0, 1))


def test_box_volume_against_scipy():
    lo, hi = -0.5, lambda th: 1.0 + 0.3 * np.sin(th)
    got = haar_box_volume((0.2, 2.0), (lo, hi), (0.0, 0.7))
    ref, _ = tplquad(lambda x, t, th: math.exp(t), 0.2, 2.0, lambda th: lo, lambda th: float(hi(th)),
                     lambda th, t: 0.0, lambda th, t: 0.7)
    assert got == pytest.approx(ref, rel=1e-10)


def test_lifted_volume_scales_like_area():
    # e^{2 log(T rho)} makes the mass T^2 (2 area) x0 up to the inner cutoff
    D = jump_star()
    T, b, x0 = 20.0, 0.5, 1.0
    vol = lifted_volume(D, T, b, x0)
    assert vol == pytest.approx(T**2 * 2 * D.area() - D.length * b**2, rel=1e-10)
    ratios = [lifted_volume(D, 2 * T, b, x0) / lifted_volume(D, T, b, x0) for T in (5.0, 10.0, 20.0)]
    assert all(abs(r - 4) < 0.05 for r in ratios) and ratios[0] > ratios[1] > ratios[2] > 4


@pytest.mark.parametrize("h", [unipotent(0.1), diag(1.05), Mat2(1.0, 0.0, 0.1, 1.0)])
def test_haar_measure_left_invariant(h):
    rep = haar_invariance_test(h, n=400_000, seed=7)
    assert rep["pass"], rep


def test_haar_negative_control_detected():
    rep = haar_invariance_test(diag(1.05), n=400_000, seed=7, density_power=0.0)
    assert not rep["pass"]


def test_wellroundedness_ratio_tends_to_one():
    D = lipschitz_star(1.0)
    r = [wellroundedness_ratio(D, 10.0, eta) for eta in (0.04, 0.01, 0.0025)]
    assert r[0] > r[1] > r[2] > 1.0
    with pytest.raises(LiftError):
        wellroundedness_ratio(D, 10.0, 1.0)


def test_wellroundedness_fit_halving():
    fit = wellroundedness_fit(lipschitz_star(3.0), 10.0, [0.02, 0.01, 0.005])
    assert all(0.4 <= h <= 0.6 for h in fit["halving_ratios"])
    assert math.isfinite(fit["fitted_c"])


def test_domain_validation():
    with pytest.raises(LiftError):
        StarDomainSpec(1.0, 0.5, lambda th: np.ones_like(th), 0.0)
    with pytest.raises(LiftError):
        StarDomainSpec(0.0, 1.0, lambda th: np.zeros_like(th), 0.0)
