"""Built-in acceptance suite: fourteen numerical checks of the counting
asymptotics and the analytic ingredients behind them.

Each check returns a :class:`CriterionResult`; ``run_acceptance`` runs a
selection and ``format_result`` renders the one-line pass/fail summary.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, zeta

from .geometry import PlaneVector
from .lattices import resolve_lattice
from .lift import half_disk, jump_star, lipschitz_star, quarter_disk, verify_lift_bijection, wellroundedness_fit
from .mellin import mellin_decay_suite, residue_weight_gap
from .orbits import PrimitiveOrbit, enumerate_orbit, oracle_orbit, primitive_count, primitive_points_oracle, totients
from .regions import Ball, CountCurve, Sector, StarShape, cosine_profile, count_curve, count_in_region, fit_constant, sandwich_check
from .eisenstein import (
    double_coset_multiplicities, eisenstein_sum, residue_extrapolate, scattering_entry_truncated,
    totient_multiplicities, twisted_eisenstein_sum,
)
from .selberg import selberg_suite

SIX_OVER_PI = 6.0 / math.pi
E1 = PlaneVector(1, 0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: object
    target: str
    seconds: float = 0.0
    time_limit: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def within_time(self) -> bool:
        return self.time_limit is None or self.seconds < self.time_limit


def format_result(res: CriterionResult) -> str:
    status = "PASS" if res.passed and res.within_time else "FAIL"
    limit = f" (limit {res.time_limit:.0f} s)" if res.time_limit else ""
    measured = f"{res.measured:.6g}" if isinstance(res.measured, float) else str(res.measured)
    return (f"[{status}] {res.number:2d} {res.title}: measured {measured}; "
            f"target {res.target}; {res.seconds:.1f} s{limit}")


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def oracle_equivalence(radii=(50, 100, 250, 500)) -> CriterionResult:
    spec = resolve_lattice("sl2z")
    mismatches = {}
    for R in radii:
        got = enumerate_orbit(spec, E1, R).point_set()
        want = primitive_points_oracle(R)
        mismatches[R] = len(got ^ want)
    ok = all(v == 0 for v in mismatches.values())
    return CriterionResult(1, "orbit equals primitive vectors", ok, sum(mismatches.values()),
                           "0 differing points", time_limit=30.0, detail={"symmetric_difference": mismatches})


@_timed
def quadratic_constant_fit(R_lo=100.0, R_hi=3000.0, samples=60) -> CriterionResult:
    R = np.geomspace(R_lo, R_hi, samples)
    curve = CountCurve(R, [primitive_count(r) for r in R], "sl2z", "ball")
    fit = fit_constant(curve)
    rel = fit.constant / SIX_OVER_PI - 1.0
    return CriterionResult(2, "quadratic constant", abs(rel) <= 0.01, fit.constant,
                           f"6/pi = {SIX_OVER_PI:.6f} within 1%", time_limit=60.0,
                           detail={"relative_error": rel, "residual": fit.residual})


@_timed
def error_term_bound(R_lo=10.0, R_hi=3000.0, samples=100) -> CriterionResult:
    R = np.geomspace(R_lo, R_hi, samples)
    N = np.array([primitive_count(r) for r in R], dtype=float)
    ratio = np.abs(N - SIX_OVER_PI * R**2) / R ** (4.0 / 3.0)
    sup = float(np.max(ratio))
    return CriterionResult(3, "normalized error term", bool(np.isfinite(sup) and sup <= 10.0), sup,
                           "finite and <= 10", time_limit=60.0, detail={"argmax_R": float(R[np.argmax(ratio)])})


@_timed
def sector_ratio(R=2000.0, orbit=None) -> CriterionResult:
    orbit = oracle_orbit(R) if orbit is None else orbit
    sector = count_in_region(orbit, Sector(0.0, math.pi / 3), R)
    ball = orbit.count(R)
    ratio = sector / ball
    return CriterionResult(4, "sector ratio", abs(6 * ratio - 1.0) <= 0.02, ratio, "1/6 within 2%",
                           detail={"sector": sector, "ball": ball})


@_timed
def star_ratio(R_lo=100.0, R_hi=1000.0, samples=25, amplitude=0.3) -> CriterionResult:
    profile = cosine_profile(amplitude, 2)
    star = StarShape(profile)
    orbit = oracle_orbit(R_hi * star.outer_radius())
    R = np.geomspace(R_lo, R_hi, samples)
    c_star = fit_constant(count_curve(orbit, star, R)).constant
    c_ball = fit_constant(count_curve(orbit, Ball(), R)).constant
    expected = 1.0 + amplitude**2 / 2.0  # (1/2) int rho^2 / pi
    ratio = c_star / c_ball
    return CriterionResult(5, "star to ball constant ratio", abs(ratio / expected - 1.0) <= 0.02, ratio,
                           f"{expected:.4f} within 2%", detail={"star": c_star, "ball": c_ball})


@_timed
def residue_check(cap=1e4, schedule=(1.5, 1.4, 1.3, 1.25)) -> CriterionResult:
    est = residue_extrapolate(PrimitiveOrbit(cap), schedule)
    rel = est.value / SIX_OVER_PI - 1.0
    return CriterionResult(6, "Eisenstein residue", abs(rel) <= 0.05, est.value, "6/pi within 5%",
                           time_limit=120.0, detail={"degree": est.degree, "relative_error": rel,
                                                     "error_estimate": est.error_estimate})


@_timed
def mellin_decay(U_values=(8.0, 32.0)) -> CriterionResult:
    rep = mellin_decay_suite(U_values)
    spread = max(rep["minus"]["spread"], rep["plus"]["spread"])
    return CriterionResult(7, "cutoff Mellin decay constants", rep["stable"], spread,
                           "spread across U <= 2", detail=rep)


@_timed
def residue_gap_slope(U_values=(10.0, 100.0, 1000.0)) -> CriterionResult:
    gaps = np.array([residue_weight_gap(U, 1.0) for U in U_values])
    slope = float(np.polyfit(np.log(U_values), np.log(gaps), 1)[0])
    return CriterionResult(8, "residue weight gap slope", slope <= -0.9, slope, "<= -0.9",
                           detail={"gaps": gaps.tolist()})


@_timed
def selberg_check() -> CriterionResult:
    rep = selberg_suite(0.0, math.pi / 3, (8, 16, 32, 64), 10_000)
    ok = rep["properties_ok"] and rep["stable"]
    return CriterionResult(9, "Selberg polynomials", ok, rep["zeroth_spread"],
                           "bounds hold, degree exact, defect constant spread <= 2",
                           detail={"zeroth_constants": rep["zeroth_constants"]})


def scattering_reference(s: float) -> float:
    return math.sqrt(math.pi) * gamma(s - 0.5) / gamma(s) * zeta(2 * s - 1) / zeta(2 * s)


@_timed
def scattering_check(s=1.25, C_max=10_000, brute_limit=200) -> CriterionResult:
    spec = resolve_lattice("sl2z")
    cvals, mult, stabilized = double_coset_multiplicities(spec, brute_limit)
    phi = totients(brute_limit)
    got = dict(zip(np.rint(cvals).astype(int).tolist(), mult.tolist()))
    brute_ok = stabilized and all(got.get(c, 0) == phi[c] for c in range(1, brute_limit + 1))
    value = scattering_entry_truncated(spec, s, C_max, totient_multiplicities(C_max)).real
    ref = scattering_reference(s)
    rel = value / ref - 1.0
    return CriterionResult(10, "truncated scattering entry", bool(brute_ok and abs(rel) <= 0.01), value,
                           f"{ref:.6f} within 1%, totient multiplicities verified",
                           detail={"relative_error": rel, "brute_verified": bool(brute_ok)})


@_timed
def lift_bijection(lattices=("sl2z", "hecke:5"), T_values=(5.0, 10.0, 30.0)) -> CriterionResult:
    rows = []
    for lid in lattices:
        spec = resolve_lattice(lid)
        for D in (quarter_disk(), half_disk(), jump_star()):
            for T in T_values:
                r = verify_lift_bijection(spec, E1, D, T)
                rows.append(r)
    ok = all(r["pass"] for r in rows)
    failed = [(r["lattice"], r["domain"], r["T"], r["orbit_count"], r["group_count"]) for r in rows if not r["pass"]]
    return CriterionResult(11, "lift bijection", ok, f"{sum(r['pass'] for r in rows)}/{len(rows)} equal",
                           "exact equality in every case", detail={"failed": failed})


@_timed
def wellroundedness_check(slopes=(0.2, 1.0), T=10.0, etas=(0.02, 0.01, 0.005, 0.0025)) -> CriterionResult:
    fits = {}
    ok = True
    for slope in slopes:
        f = wellroundedness_fit(lipschitz_star(slope), T, etas)
        fits[slope] = f
        ok &= all(abs(h / 0.5 - 1.0) <= 0.2 for h in f["halving_ratios"])
        ok &= bool(np.isfinite(f["fitted_c"]))
    worst = max(abs(h / 0.5 - 1.0) for f in fits.values() for h in f["halving_ratios"])
    return CriterionResult(12, "well-roundedness", bool(ok), worst,
                           "excess halves within 20% as eta halves; c finite",
                           detail={str(k): v for k, v in fits.items()})


@_timed
def sandwich(radii=(50.0, 100.0, 200.0), U_values=(4.0, 8.0, 16.0)) -> CriterionResult:
    orbit = oracle_orbit(max(radii) * (1 + 1 / min(U_values)))
    rows = [sandwich_check(orbit, U, R) for R in radii for U in U_values]
    n_ok = sum(r["pass"] for r in rows)
    return CriterionResult(13, "smoothed sandwich", n_ok == len(rows), f"{n_ok}/{len(rows)}",
                           "all cases hold", detail={"rows": rows})


@_timed
def twisted_vanishing(R=500.0, s=2.0, orders=(1, 3, 5)) -> CriterionResult:
    orbit = oracle_orbit(R)
    base = abs(eisenstein_sum(orbit, s).value)
    rel = {n: abs(twisted_eisenstein_sum(orbit, s, n).value) / base for n in orders}
    worst = max(rel.values())
    return CriterionResult(14, "odd twisted sums vanish", worst <= 1e-12, worst, "<= 1e-12 relative",
                           detail={"relative": rel})


CRITERIA = {
    1: oracle_equivalence, 2: quadratic_constant_fit, 3: error_term_bound, 4: sector_ratio,
    5: star_ratio, 6: residue_check, 7: mellin_decay, 8: residue_gap_slope, 9: selberg_check,
    10: scattering_check, 11: lift_bijection, 12: wellroundedness_check, 13: sandwich,
    14: twisted_vanishing,
}


def run_acceptance(selected=None, echo=None) -> list[CriterionResult]:
    results = []
    for number in (selected or sorted(CRITERIA)):
        res = CRITERIA[number]()
        if echo is not None:
            echo(format_result(res))
        results.append(res)
    return results
