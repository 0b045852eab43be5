"""Lifting plane counting problems to SL2(R).

For v = g e1 with g = r_{theta_v} a_{t_v}, every group element factors as
r_theta a_{t + t_v} n_x times g^{-1}, and gamma v = e^{(t + t_v)/2} r_theta e1.
A star domain T * D (minus a small ball) therefore corresponds to a box-like
set of group elements whose N-coordinate runs over a fundamental interval
of the stabilizer of v.  Haar measure in these K A N coordinates is
e^s dtheta ds dx, with s the A-parameter.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import (
    TWO_PI, Mat2, PlaneVector, ZeroVectorError, a_t, angle_in_interval, iwasawa, iwasawa_arrays,
    normalize_angle, rotation,
)
from .lattices import LatticeSpec
from .orbits import EnumOptions, enumerate_group, enumerate_orbit


class LiftError(ValueError):
    pass


def group_point_coords(v: PlaneVector) -> tuple[float, float]:
    """(theta_v, t_v) with v = e^{t_v / 2} r_{theta_v} e1."""
    r = math.hypot(v.x, v.y)
    if r == 0:
        raise ZeroVectorError("zero vector has no group coordinates")
    return normalize_angle(math.atan2(v.y, v.x)), 2.0 * math.log(r)


def base_element(v: PlaneVector) -> Mat2:
    theta, t = group_point_coords(v)
    return rotation(theta) @ a_t(t)


# ---------------------------------------------------------------------------
# cusp reduction and the fundamental width


_MAX_FLOAT_REDUCTION = 1e6


def _nearest_quotient(x: int, y: int) -> int:
    # round(x / y) without floating point (width 1)
    return round(Fraction(x, y))


def cusp_reduction(spec: LatticeSpec, v: PlaneVector, max_steps: int = 10_000) -> Mat2:
    """An element H of the group with H v on the positive x-axis, by the
    nearest-multiple continued fraction in the translation T and inversion S.

    After the shift |x| <= w |y| / 2, and for widths w < 2 inverting then
    strictly lowers |y|; on a discrete orbit |y| reaches 0."""
    try:
        S, Tm = spec.generator("S"), spec.generator("T")
    except ValueError as exc:
        raise LiftError("cusp reduction needs generators labelled S and T") from exc
    width = Tm.b
    x, y = v.x, v.y
    exact = spec.is_integral and isinstance(x, int) and isinstance(y, int)
    # integer data reaches y = 0 exactly; in floats an irrational slope also
    # drives |y| below any tolerance, but only once H has grown huge
    tol = 0 if exact else 1e-9 * max(1.0, math.hypot(x, y))
    H = Mat2(1, 0, 0, 1)
    for _ in range(max_steps):
        if not exact and H.max_abs() > _MAX_FLOAT_REDUCTION:
            raise LiftError("reduction exceeded the floating-point range; the orbit of v is not a cusp orbit")
        if abs(y) <= tol:
            if x < 0:
                if not spec.has_minus_id:
                    raise LiftError("vector reduces to the negative axis and -Id is not available")
                H = spec.word(spec.minus_id_word) @ H
            return H
        k = -round(x / (width * y)) if not exact else -_nearest_quotient(x, y)
        if k:
            # T^k (x, y) = (x + k w y, y)
            H = Mat2(1, k * width, 0, 1) @ H
            x = x + k * width * y
        if abs(x) >= abs(y):
            raise LiftError("reduction stalled; the orbit of v is not a cusp orbit")
        H = S @ H
        x, y = -y, x
    raise LiftError("cusp reduction did not terminate; the orbit of v may not be discrete")


def stabilizer_generator(spec: LatticeSpec, v: PlaneVector) -> Mat2:
    """Generator P = H^{-1} T H of the unipotent stabilizer of v, where H v
    lies on the positive x-axis."""
    H = cusp_reduction(spec, v)
    return H.inv() @ spec.generator("T") @ H


def fundamental_width(spec: LatticeSpec, v: PlaneVector) -> float:
    """x0 with {g n_x g^{-1}: 0 <= x < x0} a fundamental domain of the stabilizer."""
    g = base_element(v)
    P = stabilizer_generator(spec, v)
    conj = g.inv() @ P @ g
    tol = 1e-8 * max(1.0, conj.max_abs())
    if abs(conj.c) > tol or abs(conj.a - 1) > tol or abs(conj.d - 1) > tol:
        raise LiftError("stabilizer generator is not unipotent at v; the orbit is not discrete")
    return abs(float(conj.b))


# ---------------------------------------------------------------------------
# domains


@dataclass
class StarDomainSpec:
    """D = {r (cos theta, sin theta): theta in [theta1, theta2], r <= rho(theta)}.

    `profile` is piecewise Lipschitz with constant `lipschitz` between the
    optional `jumps`; `inner_cutoff` is b' (filled from the orbit if None)."""

    theta1: float
    theta2: float
    profile: object
    lipschitz: float
    jumps: tuple = ()
    inner_cutoff: float | None = None
    name: str = "star-domain"
    sup: float = field(init=False)
    inf: float = field(init=False)

    def __post_init__(self):
        if not self.theta1 < self.theta2 <= self.theta1 + TWO_PI + 1e-15:
            raise LiftError("need theta1 < theta2 <= theta1 + 2pi")
        if self.lipschitz < 0:
            raise LiftError("Lipschitz constant must be nonnegative")
        n = 4096
        grid = np.linspace(self.theta1, self.theta2, n)
        vals = self.rho(grid)
        h = (self.theta2 - self.theta1) / (n - 1)
        # Lipschitz pieces: the grid extremes are within L h / 2 of the true ones
        pad = 0.5 * self.lipschitz * h
        self.sup = float(np.max(vals) + pad)
        self.inf = float(np.min(vals) - pad)
        if not self.inf > 0:
            raise LiftError("profile must stay bounded away from 0 on the interval")

    @property
    def length(self) -> float:
        return self.theta2 - self.theta1

    def rho(self, theta):
        return np.asarray(self.profile(np.asarray(theta, dtype=float)), dtype=float)

    def unwrap(self, theta):
        """Representative of theta in [theta1, theta1 + 2pi)."""
        return self.theta1 + np.mod(np.asarray(theta) - self.theta1, TWO_PI)

    def contains_angles(self, theta, tol: float = 1e-12):
        return angle_in_interval(theta, normalize_angle(self.theta1), self.length, tol)

    def area(self) -> float:
        return 0.5 * _integrate_theta(lambda th: self.rho(th) ** 2, self.theta1, self.theta2, self.jumps)


def _integrate_theta(fn, a: float, b: float, jumps=(), panels: int = 64, order: int = 16) -> float:
    """Composite Gauss-Legendre over [a, b], split at jump points."""
    cuts = [a] + sorted(j for j in jumps if a < j < b) + [b]
    xg, wg = leggauss(order)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * xg).ravel()
        weights = (half[:, None] * wg).ravel()
        total += float(np.sum(fn(nodes) * weights))
    return total


def quarter_disk() -> StarDomainSpec:
    return StarDomainSpec(0.0, math.pi / 2, lambda th: np.ones_like(th), 0.0, name="quarter-disk")


def half_disk() -> StarDomainSpec:
    return StarDomainSpec(0.0, math.pi, lambda th: np.ones_like(th), 0.0, name="half-disk")


def jump_star(jump: float = 1.1) -> StarDomainSpec:
    """Lipschitz pieces 1 + 0.25 sin(theta) and 0.8 + 0.1 cos(2 theta) with a jump at `jump`."""
    def rho(th):
        th = np.asarray(th, dtype=float)
        return np.where(th < jump, 1.0 + 0.25 * np.sin(th), 0.8 + 0.1 * np.cos(2 * th))

    return StarDomainSpec(0.2, 2.6, rho, 0.25, jumps=(jump,), name="jump-star")


def lipschitz_star(slope: float) -> StarDomainSpec:
    """rho = 1 + 0.2 sin(k theta) on [0, pi/2]; its Lipschitz constant is 0.2 k."""
    k = slope / 0.2
    return StarDomainSpec(0.0, math.pi / 2, lambda th: 1.0 + 0.2 * np.sin(k * np.asarray(th)),
                          slope, name=f"lipschitz-star-{slope:g}")


@dataclass
class LiftedDomain:
    v: PlaneVector
    theta_v: float
    t_v: float
    g: Mat2
    x0: float
    T: float
    domain: StarDomainSpec
    b_prime: float

    def t_range(self, theta):
        """J(T, theta) = [t1, t2(T, theta)]"""
        nv = math.exp(self.t_v / 2)
        t1 = 2 * math.log(self.b_prime / nv)
        t2 = 2 * np.log(self.T * self.domain.rho(self.domain.unwrap(theta)) / nv)
        return t1, t2

    def frobenius_bound(self) -> float:
        """sup of ||gamma||_F over the domain: ||gamma g||_F ||g^{-1}||_op."""
        Y = self.T * self.domain.sup
        fro_sq = max(Y * Y * (1 + self.x0**2) + 1 / Y**2,
                     self.b_prime**2 * (1 + self.x0**2) + 1 / self.b_prime**2)
        nv = math.exp(self.t_v / 2)
        return math.sqrt(fro_sq) * max(nv, 1 / nv)


def build_lifted_domain(spec: LatticeSpec, v: PlaneVector, D: StarDomainSpec, T: float,
                        b_prime: float | None = None) -> LiftedDomain:
    b = b_prime if b_prime is not None else D.inner_cutoff
    if b is None or not b > 0:
        raise LiftError("inner cutoff b' must be positive")
    theta_v, t_v = group_point_coords(v)
    return LiftedDomain(v, theta_v, t_v, base_element(v), fundamental_width(spec, v), float(T), D, float(b))


def _membership_arrays(m: np.ndarray, dom: LiftedDomain, tol: float = 1e-9) -> np.ndarray:
    """Vectorised membership for group elements stored as (n, 4) rows."""
    g = dom.g.as_array()
    a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    prod = np.stack([a * g[0, 0] + b * g[1, 0], a * g[0, 1] + b * g[1, 1],
                     c * g[0, 0] + d * g[1, 0], c * g[0, 1] + d * g[1, 1]], axis=1)
    theta, y, x = iwasawa_arrays(prod)
    ok = dom.domain.contains_angles(theta, tol)
    # y = e^{(t + t_v)/2} = e^{t/2} ||v||, so t in J  <=>  b' <= y <= T rho(theta)
    y_max = dom.T * dom.domain.rho(dom.domain.unwrap(theta))
    ok &= (y >= dom.b_prime * (1 - tol)) & (y <= y_max * (1 + tol))
    xtol = tol * max(1.0, dom.x0)
    # half-open [0, x0): values within tolerance of x0 belong to the next translate
    ok &= (x >= -xtol) & (x < dom.x0 - xtol)
    return ok


def lift_membership(gamma: Mat2, dom: LiftedDomain) -> bool:
    row = np.array([[float(gamma.a), float(gamma.b), float(gamma.c), float(gamma.d)]])
    return bool(_membership_arrays(row, dom)[0])


def kan_coords(gamma: Mat2, dom: LiftedDomain):
    """(theta, t, x) with gamma g = r_theta a_{t + t_v} n_x."""
    theta, y, x = iwasawa(gamma @ dom.g)
    return theta, 2 * math.log(y) - dom.t_v, x


def count_orbit_in_domain(orbit, D: StarDomainSpec, T: float, b_prime: float, tol: float = 1e-9) -> int:
    cap = T * D.sup
    k = int(np.searchsorted(orbit.norms, cap * (1 + tol), side="right"))
    r, th = orbit.norms[:k], orbit.angles[:k]
    ok = D.contains_angles(th, tol)
    ok &= r <= T * D.rho(D.unwrap(th)) * (1 + tol)
    ok &= r >= b_prime * (1 - tol)
    return int(np.count_nonzero(ok))


def verify_lift_bijection(spec: LatticeSpec, v: PlaneVector, D: StarDomainSpec, T: float,
                          b_prime: float | None = None, opts: EnumOptions | None = None) -> dict:
    """Count |Gamma v ∩ T D| in the plane and |Gamma ∩ lifted domain| in the group."""
    cap = max(T * D.sup, math.hypot(v.x, v.y)) * (1 + 1e-9)
    orbit = enumerate_orbit(spec, v, cap, opts)
    if b_prime is None:
        b_prime = D.inner_cutoff if D.inner_cutoff is not None else 0.5 * float(orbit.norms[0])
    dom = build_lifted_domain(spec, v, D, T, b_prime)
    plane = count_orbit_in_domain(orbit, D, T, b_prime) if T * D.sup >= b_prime else 0
    if T * D.sup < b_prime:
        group, gstab = 0, True
    else:
        elems, _, gstab = enumerate_group(spec, dom.frobenius_bound())
        group = int(np.count_nonzero(_membership_arrays(elems, dom)))
    conclusive = bool(orbit.stabilized and gstab)
    return {
        "lattice": spec.name, "domain": D.name, "T": T, "x0": dom.x0, "b_prime": b_prime,
        "orbit_count": plane, "group_count": group,
        "conclusive": conclusive, "pass": conclusive and plane == group,
    }


# ---------------------------------------------------------------------------
# Haar volumes and well-roundedness


def haar_box_volume(theta_range, t_range, x_range, jumps=()) -> float:
    """integral of e^t dtheta dt dx over {theta in [th1, th2], t in [t1(theta),
    t2(theta)], x in [x1, x2]}; t-ends may be constants or callables."""
    th1, th2 = theta_range
    x1, x2 = x_range
    lo, hi = t_range
    if th2 <= th1 or x2 <= x1:
        return 0.0
    if not callable(lo) and not callable(hi):
        if hi <= lo:
            return 0.0
        return (th2 - th1) * (math.exp(hi) - math.exp(lo)) * (x2 - x1)
    lo_fn = lo if callable(lo) else (lambda th: np.full_like(th, lo))
    hi_fn = hi if callable(hi) else (lambda th: np.full_like(th, hi))

    def slice_mass(th):
        a, b = lo_fn(th), hi_fn(th)
        return np.where(b > a, np.exp(b) - np.exp(a), 0.0)

    return _integrate_theta(slice_mass, th1, th2, jumps) * (x2 - x1)


def lifted_volume(D: StarDomainSpec, T: float, b_prime: float, x0: float) -> float:
    """Haar mass of the lifted domain, in the A-parameter s = t + t_v, which
    runs over [2 log b', 2 log(T rho(theta))]."""
    return haar_box_volume((D.theta1, D.theta2),
                           (2 * math.log(b_prime), lambda th: 2 * np.log(T * D.rho(th))),
                           (0.0, x0), D.jumps)


@dataclass(frozen=True)
class WellRoundOptions:
    c1: float = 1.0  # the Iwasawa perturbation constant, taken as a parameter
    eta1: float = 1.0


def wellroundedness_ratio(D: StarDomainSpec, T: float, eta: float, x0: float = 1.0,
                          b_prime: float = 0.5, opts: WellRoundOptions = WellRoundOptions()) -> float:
    """m(W+) / m(W-) for the Iwasawa boxes inflated / deflated by C eta,
    C = c1 * max(L, 1)."""
    C = opts.c1 * max(D.lipschitz, 1.0)
    limit = min(opts.eta1, D.length, x0) / (4 * C)
    if not 0 < eta <= limit:
        raise LiftError(f"eta = {eta} violates 0 < eta <= {limit:.4g}")
    d = C * eta
    s1 = 2 * math.log(b_prime)
    th1, th2 = D.theta1, D.theta2
    s2 = lambda th: 2 * np.log(T * D.rho(th))  # noqa: E731
    over = max(float(s2(np.array([th1]))[0]), float(s2(np.array([th2]))[0]))

    def s2_plus(th):
        th = np.asarray(th, dtype=float)
        inside = (th >= th1) & (th <= th2)
        return np.where(inside, s2(np.clip(th, th1, th2)), over) + d

    w_minus = haar_box_volume((th1 + d, th2 - d), (s1 + d, lambda th: s2(th) - d), (d, x0 - d), D.jumps)
    w_plus = haar_box_volume((th1 - d, th2 + d), (s1 - d, s2_plus), (-d, x0 + d), D.jumps + (th1, th2))
    return w_plus / w_minus


def wellroundedness_fit(D: StarDomainSpec, T: float, etas, **kw) -> dict:
    """ratio(eta) - 1 over a halving sequence of eta and the fitted constant c."""
    etas = np.asarray(etas, dtype=float)
    excess = np.array([wellroundedness_ratio(D, T, e, **kw) - 1.0 for e in etas])
    halving = excess[1:] / excess[:-1]
    return {
        "eta": etas.tolist(), "excess": excess.tolist(), "halving_ratios": halving.tolist(),
        "fitted_c": float(np.max(excess / etas)),
    }


# ---------------------------------------------------------------------------
# Monte Carlo invariance of the Haar density


def sample_kan(rng: np.random.Generator, n: int, t_range, x_range):
    """theta uniform on the circle, t with density e^t on t_range, x uniform."""
    ta, tb = t_range
    u = rng.random(n)
    t = np.log(np.exp(ta) + u * (np.exp(tb) - np.exp(ta)))
    theta = TWO_PI * rng.random(n)
    x = x_range[0] + (x_range[1] - x_range[0]) * rng.random(n)
    return theta, t, x


def kan_to_rows(theta, t, x) -> np.ndarray:
    """rows of r_theta a_t n_x"""
    c, s = np.cos(theta), np.sin(theta)
    y, yi = np.exp(t / 2), np.exp(-t / 2)
    # a_t n_x = [[y, y x], [0, 1/y]]
    return np.stack([c * y, c * y * x - s * yi, s * y, s * y * x + c * yi], axis=1)


def haar_invariance_test(h: Mat2, n: int = 1_000_000, seed: int = 0, t_range=(-1.0, 1.0),
                         x_range=(-1.0, 1.0), margin: float = 0.25, bins=(4, 4), density_power: float = 1.0) -> dict:
    """Push Haar samples on a box B through g -> h g and compare bin counts in an
    inner box A (with h^{-1} A inside B) with the Haar masses of the bins.

    density_power != 1 samples from e^{p t} instead, as a negative control."""
    rng = np.random.default_rng(seed)
    if density_power == 1.0:
        theta, t, x = sample_kan(rng, n, t_range, x_range)
    else:
        ta, tb = t_range
        p = density_power
        u = rng.random(n)
        t = np.log(np.exp(p * ta) + u * (np.exp(p * tb) - np.exp(p * ta))) / p if p != 0 else ta + (tb - ta) * u
        theta = TWO_PI * rng.random(n)
        x = x_range[0] + (x_range[1] - x_range[0]) * rng.random(n)
    rows = kan_to_rows(theta, t, x)
    H = h.as_array()
    hr = np.stack([H[0, 0] * rows[:, 0] + H[0, 1] * rows[:, 2], H[0, 0] * rows[:, 1] + H[0, 1] * rows[:, 3],
                   H[1, 0] * rows[:, 0] + H[1, 1] * rows[:, 2], H[1, 0] * rows[:, 1] + H[1, 1] * rows[:, 3]], axis=1)
    th2, y2, x2 = iwasawa_arrays(hr)
    t2 = 2 * np.log(y2)
    inner_t = (t_range[0] + margin, t_range[1] - margin)
    inner_x = (x_range[0] + margin, x_range[1] - margin)
    _check_inner_box(h, inner_t, inner_x, t_range, x_range)
    mass_B = haar_box_volume((0, TWO_PI), t_range, x_range)
    t_edges = np.linspace(*inner_t, bins[0] + 1)
    x_edges = np.linspace(*inner_x, bins[1] + 1)
    observed, _, _ = np.histogram2d(t2, x2, bins=[t_edges, x_edges])
    expected = np.array([[haar_box_volume((0, TWO_PI), (t_edges[i], t_edges[i + 1]), (x_edges[j], x_edges[j + 1]))
                          for j in range(bins[1])] for i in range(bins[0])]) / mass_B * n
    from scipy.stats import chi2

    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = observed.size  # expected counts are fixed, not fitted
    p_value = float(chi2.sf(stat, dof))
    total_rel = float(abs(observed.sum() - expected.sum()) / expected.sum())
    del th2
    return {"chi2": stat, "dof": dof, "p_value": p_value, "total_rel_error": total_rel,
            "pass": bool(p_value > 1e-3 and total_rel < 0.01)}


def _check_inner_box(h: Mat2, inner_t, inner_x, t_range, x_range, n: int = 20_000):
    """h^{-1} of a dense sample of the inner box must land in the outer box."""
    rng = np.random.default_rng(12345)
    th = TWO_PI * rng.random(n)
    t = inner_t[0] + (inner_t[1] - inner_t[0]) * rng.random(n)
    x = inner_x[0] + (inner_x[1] - inner_x[0]) * rng.random(n)
    rows = kan_to_rows(th, t, x)
    Hi = h.inv().as_array()
    back = np.stack([Hi[0, 0] * rows[:, 0] + Hi[0, 1] * rows[:, 2], Hi[0, 0] * rows[:, 1] + Hi[0, 1] * rows[:, 3],
                     Hi[1, 0] * rows[:, 0] + Hi[1, 1] * rows[:, 2], Hi[1, 0] * rows[:, 1] + Hi[1, 1] * rows[:, 3]], axis=1)
    _, yb, xb = iwasawa_arrays(back)
    tb = 2 * np.log(yb)
    if not (np.all((tb > t_range[0]) & (tb < t_range[1])) and np.all((xb > x_range[0]) & (xb < x_range[1]))):
        raise LiftError("test element too large: h^{-1} of the inner box leaves the sampling box")
