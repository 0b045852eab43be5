"""Truncated Eisenstein sums over orbit slices, Theta-transforms, residue
extrapolation at s = 1, Fourier coefficients of rho^s, and the truncated
scattering entry.

Sums over an orbit slice of cap R_cap carry a tail bound from the quadratic
orbit bound N(r) <= C r^2:

    sum_{|p| > R_cap} |p|^{-2 sigma} <= C * 2 sigma / (2 sigma - 2) * R_cap^{2 - 2 sigma}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import loggamma, zeta

from .lattices import LatticeSpec
from .mellin import CutoffPair, cutoff_mellin, derivative_moment, make_cutoff_pair
from .orbits import EnumOptions, enumerate_vectors, totients
from .geometry import PlaneVector


class DivergenceError(ValueError):
    pass


class TailBoundError(ValueError):
    pass


@dataclass
class TruncatedSeriesValue:
    value: complex
    tail_bound: float
    cutoff_radius: float
    s: complex

    def __complex__(self):
        return complex(self.value)


def _check_sigma(s):
    if not np.real(s) > 1:
        raise DivergenceError(f"Re(s) = {np.real(s)} <= 1: the orbit sum diverges")


def tail_bound(growth_constant: float, sigma: float, R_cap: float) -> float:
    return growth_constant * 2 * sigma / (2 * sigma - 2) * R_cap ** (2 - 2 * sigma)


def required_cap(growth_constant: float, sigma: float, target: float) -> float:
    """Smallest cap with tail_bound <= target."""
    return (growth_constant * 2 * sigma / ((2 * sigma - 2) * target)) ** (1.0 / (2 * sigma - 2))


def _stabilized(orbit):
    if not getattr(orbit, "stabilized", True):
        raise ValueError("orbit enumeration did not stabilize; refusing to sum")


def _radial_powers(norms: np.ndarray, s: complex) -> np.ndarray:
    """|p|^{-2s}, built from real pieces so conj(s) gives the exact conjugate."""
    logr = np.log(norms)
    mag = np.exp(-2.0 * s.real * logr)
    ph = 2.0 * s.imag * logr
    return mag * (np.cos(ph) - 1j * np.sin(ph))


def eisenstein_sum(orbit, s) -> TruncatedSeriesValue:
    """sum over the slice of |p|^{-2s}; works for OrbitSet and PrimitiveOrbit."""
    s = complex(s)
    _check_sigma(s)
    _stabilized(orbit)
    value = complex(orbit.power_sums([s])[0])
    tb = tail_bound(orbit.growth_constant(), s.real, orbit.radius_cap)
    return TruncatedSeriesValue(value, tb, orbit.radius_cap, s)


def _unit_phase(points: np.ndarray, norms: np.ndarray, n: int) -> np.ndarray:
    # e^{-i n theta} = ((x - i y)/r)^n; negating p negates the base exactly
    base = (points[:, 0] - 1j * points[:, 1]) / norms
    if n < 0:
        base, n = np.conj(base), -n
    # square-and-multiply keeps conj(z)^n == conj(z^n) bit for bit
    out = np.ones_like(base)
    while n:
        if n & 1:
            out = out * base
        base = base * base
        n >>= 1
    return out


def twisted_eisenstein_sum(orbit, s, n: int) -> TruncatedSeriesValue:
    """sum of |p|^{-2s} e^{-i n theta_p}; |phase| = 1 so the tail bound is unchanged."""
    s = complex(s)
    _check_sigma(s)
    _stabilized(orbit)
    if n == 0:
        return eisenstein_sum(orbit, s)
    terms = _radial_powers(orbit.norms, s) * _unit_phase(orbit.points, orbit.norms, n)
    tb = tail_bound(orbit.growth_constant(), s.real, orbit.radius_cap)
    return TruncatedSeriesValue(complex(np.sum(terms)), tb, orbit.radius_cap, s)


def theta_transform(orbit, f, support_radius: float) -> complex:
    """sum over the slice of f(p), for f vanishing outside B(0, support_radius).
    `f` maps an (n, 2) array of points to n values."""
    if support_radius > orbit.radius_cap * (1 + 1e-12):
        raise ValueError(f"support radius {support_radius} exceeds the orbit cap {orbit.radius_cap}")
    k = int(np.searchsorted(orbit.norms, support_radius * (1 + 1e-12), side="right"))
    if k == 0:
        return 0j
    return complex(np.sum(np.asarray(f(orbit.points[:k]), dtype=complex)))


def radial_theta(orbit, psi, R: float, support: float) -> float:
    """sum of psi(|p| / R) where psi vanishes beyond `support`."""
    return theta_transform(orbit, lambda p: psi(np.hypot(p[:, 0], p[:, 1]) / R), R * support).real


# ---------------------------------------------------------------------------
# residue at s = 1


@dataclass
class ResidueEstimate:
    value: float
    degree: int
    extrapolated: bool
    error_estimate: float
    sigma: np.ndarray
    products: np.ndarray  # (sigma - 1) * E(sigma)
    tail_bounds: np.ndarray
    candidates: dict = field(default_factory=dict)


def _value_at_zero_weights(x: np.ndarray, degree: int) -> np.ndarray:
    """Linear functional w with w . y = polynomial fit of y(x) evaluated at 0."""
    V = np.vander(x, degree + 1, increasing=True)
    return np.linalg.pinv(V)[0]


def residue_extrapolate(orbit, schedule, max_rel_tail: float = 0.01) -> ResidueEstimate:
    """Extrapolate (sigma - 1) E(sigma) to sigma = 1 from a schedule sigma_j > 1.

    Each degree d of polynomial extrapolation is scored by the tail bounds
    pushed through its weights plus the change to the next degree; the degree
    with the smallest score is returned."""
    sig = np.asarray(schedule, dtype=float)
    if np.any(sig <= 1):
        raise DivergenceError("schedule must lie in sigma > 1")
    if len(sig) > 1 and np.any(np.diff(sig) >= 0):
        raise ValueError("schedule must be strictly decreasing")
    _stabilized(orbit)
    values = orbit.power_sums(sig).real
    C = orbit.growth_constant()
    tails = np.array([tail_bound(C, s, orbit.radius_cap) for s in sig])
    bad = tails > max_rel_tail * np.abs(values)
    if np.any(bad):
        j = int(np.argmax(bad))
        need = required_cap(C, sig[j], max_rel_tail * abs(values[j]))
        raise TailBoundError(
            f"tail bound {tails[j]:.3g} at sigma={sig[j]} exceeds {max_rel_tail:.0%} of the value; "
            f"cap must be at least {need:.4g} (have {orbit.radius_cap:.4g})"
        )
    x = sig - 1.0
    prod = x * values
    if len(sig) == 1:
        return ResidueEstimate(float(prod[0]), 0, False, float(x[0] * tails[0]), sig, prod, tails)
    ests, props = [], []
    for d in range(len(sig)):
        w = _value_at_zero_weights(x, d)
        ests.append(float(w @ prod))
        props.append(float(np.abs(w) @ (x * tails)))
    scores = {}
    for d in range(len(sig)):
        nxt = d + 1 if d + 1 < len(sig) else d - 1
        scores[d] = props[d] + abs(ests[nxt] - ests[d])
    best = min(scores, key=scores.get)
    return ResidueEstimate(
        value=ests[best], degree=best, extrapolated=best > 0, error_estimate=scores[best],
        sigma=sig, products=prod, tail_bounds=tails,
        candidates={d: {"estimate": ests[d], "tail_propagated": props[d], "score": scores[d]}
                    for d in range(len(sig))},
    )


@dataclass
class CircleOrbit:
    """Synthetic point multiset with one point on each circle |p| = sqrt(k),
    k = 1..K, so N(R) = floor(R^2) exactly."""

    K: int
    stabilized: bool = True

    @property
    def radius_cap(self) -> float:
        return math.sqrt(self.K)

    def growth_constant(self) -> float:
        return 1.0

    def power_sums(self, s_values) -> np.ndarray:
        """sum_{k <= K} k^{-s}: Hurwitz zeta difference for real s, direct otherwise."""
        out = []
        for s in np.atleast_1d(s_values):
            s = complex(s)
            if s.imag == 0 and s.real > 1:
                out.append(complex(zeta(s.real) - zeta(s.real, self.K + 1)))
            else:
                k = np.arange(1, self.K + 1, dtype=float)
                out.append(complex(np.sum(np.exp(-s * np.log(k)))))
        return np.array(out)

    def count(self, R: float) -> int:
        return min(self.K, int(math.floor(R * R)))


# ---------------------------------------------------------------------------
# Fourier coefficients of rho^s


def fourier_rho_power(rho, n: int, s, rtol: float = 1e-10, start: int = 64, max_points: int = 2**20) -> complex:
    """(1/2pi) int rho(theta)^s e^{-i n theta} dtheta by the trapezoid rule,
    doubling the grid until the relative change is below rtol."""
    s = complex(s)
    M = max(start, 4 * abs(n) + 4)
    M = 1 << (M - 1).bit_length()

    def trap(M):
        th = 2 * np.pi * np.arange(M) / M
        vals = np.exp(s * np.log(rho(th))) * np.exp(-1j * n * th)
        return complex(np.mean(vals)), float(np.mean(np.abs(vals)))

    prev, scale = trap(M)
    while M < max_points:
        M *= 2
        cur, scale = trap(M)
        if abs(cur - prev) <= max(rtol * abs(cur), 1e-15 * scale):
            return cur
        prev = cur
    raise RuntimeError(f"Fourier coefficient n={n} not converged at {M} points")


# ---------------------------------------------------------------------------
# Theta / Mellin consistency


def _mellin_theta_integrand(pair: CutoffPair, which: str, sigma: float, R: float,
                            norms: np.ndarray, weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    s = sigma + 1j * t
    Psi = cutoff_mellin(pair, which, s)
    logr = np.log(norms / R)
    # R^s sum_p |p|^{-s} = sum_p (|p|/R)^{-s}
    D = np.exp(-np.outer(s, logr)) @ weights
    return Psi * D


def mellin_theta_reconstruction(orbit, U: float, R: float, sigma: float = 3.0, which: str = "minus",
                                tail_target: float = 0.5, orders=range(2, 13), batch: int = 48) -> dict:
    """Compare the direct sum of psi(|p|/R) with its Mellin inversion along
    Re(s) = sigma truncated at |t| <= T.  T is the smallest cutoff for which
    the m-fold integration by parts bound on the discarded tail, over the
    orders m tried, stays below tail_target."""
    pair = make_cutoff_pair(U)
    lo, hi = pair.support(which)
    if R * hi > orbit.radius_cap * (1 + 1e-12):
        raise ValueError("cutoff support exceeds the orbit cap")
    k = int(np.searchsorted(orbit.norms, R * hi * (1 + 1e-12), side="right"))
    norms = orbit.norms[:k]
    direct = float(np.sum(pair.evaluate(which, norms / R)))
    # group equal norms
    uniq, counts = np.unique(np.round(norms, 12), return_counts=True)
    weights = counts.astype(float)
    # |integrand| <= |Psi(s)| * sum_p (|p|/R)^{-sigma}
    amplitude = float(np.sum(weights * (uniq / R) ** (-sigma))) / (2 * np.pi)
    best = None
    for m in orders:
        M = derivative_moment(pair, which, m, sigma)
        T = (2 * M * amplitude / ((m - 1) * tail_target)) ** (1.0 / (m - 1))
        if best is None or T < best[0]:
            best = (T, m, M)
    T, m, M = best
    T = float(math.ceil(T))
    x, w = leggauss(16)
    edges = np.arange(0.0, T + 1.0)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + 0.5 * x[None, :]).ravel()
    wts = np.tile(0.5 * w, len(mids))
    total = 0.0
    for i in range(0, len(nodes), batch * 16):
        t = nodes[i:i + batch * 16]
        total += float(np.sum(wts[i:i + batch * 16] * _mellin_theta_integrand(pair, which, sigma, R, uniq, weights, t).real))
    # conjugate symmetry: the integral over [-T, T] is twice the real part over [0, T]
    recon = total / np.pi
    tail = 2 * M * amplitude / ((m - 1) * T ** (m - 1))
    return {
        "direct": direct, "reconstructed": recon, "T_max": T, "order": m, "tail_bound": tail,
        "relative_error": abs(recon - direct) / abs(direct), "points": int(k),
    }


def angular_radial_consistency(orbit, U: float, R: float, start: float, length: float,
                               degree: int = 64, which: str = "minus") -> dict:
    """Theta of psi(|u|/R) P(theta_u) for a Selberg polynomial P, directly and as
    sum_n P_hat_{-n} times the twisted radial sums with e^{-i n theta}."""
    from .selberg import selberg_polynomial_pair

    pair = make_cutoff_pair(U)
    poly = selberg_polynomial_pair(start, length, degree)
    hi = pair.support(which)[1]
    k = int(np.searchsorted(orbit.norms, R * hi * (1 + 1e-12), side="right"))
    pts, norms, ang = orbit.points[:k], orbit.norms[:k], orbit.angles[:k]
    radial = pair.evaluate(which, norms / R)
    direct = float(np.sum(radial * poly.evaluate(ang, "plus")))
    resum = 0j
    for n in range(-degree, degree + 1):
        twisted = np.sum(radial * _unit_phase(pts, norms, n))
        resum += poly.coefficient(-n, "plus") * twisted
    return {"direct": direct, "resummed": resum.real, "imag": resum.imag,
            "relative_error": abs(resum.real - direct) / max(abs(direct), 1e-300)}


# ---------------------------------------------------------------------------
# scattering entry


def gamma_factor(s) -> complex:
    """sqrt(pi) Gamma(s - 1/2) / Gamma(s)"""
    s = complex(s)
    return complex(np.sqrt(np.pi) * np.exp(loggamma(s - 0.5) - loggamma(s)))


def double_coset_multiplicities(spec: LatticeSpec, C_max: float, opts: EnumOptions | None = None):
    """m(c) for 0 < c <= C_max: the number of bottom rows (c, d), d mod width*c,
    of group elements; classes are taken modulo -Id when it is present.

    Bottom rows are the orbit of (0, 1) under the transposed generators.
    Returns (c values, multiplicities, stabilized)."""
    if len(spec.cusps) != 1:
        raise NotImplementedError("only single-cusp lattices are supported")
    width = float(spec.cusps[0].width)
    radius = C_max * math.hypot(1.0, width) * (1 + 1e-9)
    gens = [g.transpose() for g in spec.generators]
    orbit = enumerate_vectors(gens, PlaneVector(0, 1), radius, opts, lattice=spec.name + "^T")
    c = orbit.points[:, 0]
    d = orbit.points[:, 1]
    tol = 1e-9 * max(1.0, radius)
    keep = (c > tol) & (c <= C_max + tol) & (d >= -tol) & (d < width * c - tol)
    cvals = c[keep]
    if orbit.exact_points is not None:
        uniq, mult = np.unique(orbit.exact_points[keep, 0], return_counts=True)
        uniq = uniq.astype(float)
    else:
        key = np.round(cvals / tol).astype(np.int64)
        ukey, idx, mult = np.unique(key, return_index=True, return_counts=True)
        uniq = cvals[idx]
    if not spec.has_minus_id:
        # without -Id the rows (c, d) and (-c, -d) are different classes
        kneg = (c < -tol) & (c >= -C_max - tol) & (d <= tol) & (d > width * c + tol)
        if np.any(kneg):
            raise NotImplementedError("lattices without -Id need signed classes; not supported")
    return uniq, mult, orbit.stabilized


def totient_multiplicities(C_max: int):
    c = np.arange(1, int(C_max) + 1)
    return c.astype(float), totients(int(C_max))[1:]


def scattering_entry_truncated(spec: LatticeSpec, s, C_max: float, multiplicities=None) -> complex:
    """sqrt(pi) Gamma(s-1/2)/Gamma(s) * sum_{0 < c <= C_max} m(c) c^{-2s}.

    `multiplicities` may supply (c, m) directly; otherwise they are enumerated."""
    s = complex(s)
    _check_sigma(s)
    if len(spec.cusps) != 1:
        raise NotImplementedError("only single-cusp lattices are supported")
    if multiplicities is None:
        cvals, mult, stabilized = double_coset_multiplicities(spec, C_max)
        if not stabilized:
            raise ValueError("bottom-row enumeration did not stabilize")
    else:
        cvals, mult = multiplicities
    cvals = np.asarray(cvals, dtype=float)
    mult = np.asarray(mult, dtype=float)
    keep = cvals <= C_max * (1 + 1e-12)
    series = np.sum(mult[keep] * np.exp(-2 * s * np.log(cvals[keep])))
    return gamma_factor(s) * complex(series)
