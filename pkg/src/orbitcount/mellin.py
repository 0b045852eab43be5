"""Smooth radial cutoffs and their Mellin transforms.

The cutoffs squeeze the indicator of [0, 1] from below and above with
transitions of width 1/U, built from one fixed C-infinity step ``beta``.
Mellin transforms are computed in the log variable with composite
Gauss-Legendre panels; the flat parts of the cutoffs are integrated in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

BETA_LO, BETA_HI = 0.1, 1.0


class QuadratureError(RuntimeError):
    pass


def _step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    expo = np.clip(1.0 / um - 1.0 / (1.0 - um), -700.0, 700.0)
    out[mid] = 1.0 / (1.0 + np.exp(expo))
    return out


def beta(x):
    """The fixed transition: 0 for x <= 0.1, 1 for x >= 1."""
    return _step((np.asarray(x, dtype=float) - BETA_LO) / (BETA_HI - BETA_LO))


def _step_taylor(u: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients c_k(u), k <= order, of the step at points 0 < u < 1.

    step = 1 / (1 + e^h) with h = 1/u - 1/(1-u).  With q = e^h0 / (1 + e^h0)
    and E = e^{h - h0}, step = (1 - q) / (1 + q (E - 1)), which stays finite
    where e^h0 overflows."""
    u = np.asarray(u, dtype=float)
    k = np.arange(order + 1)[:, None]
    # 1/(u + e) - 1/(1 - u - e), expanded in e
    h = (-1.0) ** k / u ** (k + 1) - 1.0 / (1.0 - u) ** (k + 1)
    # E = exp(h - h0): E_n = (1/n) sum_{j=1..n} j h_j E_{n-j}
    E = np.zeros((order + 1, u.size))
    E[0] = 1.0
    for n in range(1, order + 1):
        E[n] = sum(j * h[j] * E[n - j] for j in range(1, n + 1)) / n
    q = 1.0 / (1.0 + np.exp(np.clip(-h[0], -700, 700)))
    one_minus_q = 1.0 / (1.0 + np.exp(np.clip(h[0], -700, 700)))
    G = q * E
    G[0] = 1.0
    # reciprocal of G (G_0 = 1)
    inv = np.zeros_like(G)
    inv[0] = 1.0
    for n in range(1, order + 1):
        inv[n] = -sum(G[j] * inv[n - j] for j in range(1, n + 1))
    return one_minus_q * inv


def beta_derivative(x, m: int):
    """m-th derivative of beta; vanishes off (0.1, 1)."""
    if m == 0:
        return beta(x)
    x = np.asarray(x, dtype=float)
    u = (x - BETA_LO) / (BETA_HI - BETA_LO)
    out = np.zeros_like(u)
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        with np.errstate(over="ignore", invalid="ignore"):
            coef = _step_taylor(u[mid], m)[m]
        out[mid] = np.nan_to_num(coef * math.factorial(m), nan=0.0, posinf=0.0, neginf=0.0)
    return out / (BETA_HI - BETA_LO) ** m


@dataclass(frozen=True)
class CutoffPair:
    """psi_minus <= 1_[0,1] <= psi_plus away from [0, 1/U]; both equal the
    indicator outside [0, 1/U] and [1 - 1/U, 1 + 1/U]."""

    U: float

    def __post_init__(self):
        if not self.U > 2:
            raise ValueError(f"cutoff parameter U must exceed 2, got {self.U}")

    def minus(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0.5, beta(self.U * x), beta(self.U * (1.0 - x)))

    def plus(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0.5, beta(self.U * x), beta(1.0 + self.U * (1.0 - x)))

    def evaluate(self, which: str, x):
        return self.minus(x) if which == "minus" else self.plus(x)

    def derivative(self, which: str, x, m: int):
        """m-th derivative in x, by the chain rule through beta."""
        x = np.asarray(x, dtype=float)
        U = self.U
        left = U**m * beta_derivative(U * x, m)
        if which == "minus":
            right = (-U) ** m * beta_derivative(U * (1.0 - x), m)
        else:
            right = (-U) ** m * beta_derivative(1.0 + U * (1.0 - x), m)
        return np.where(x <= 0.5, left, right)

    def pieces(self, which: str):
        """(rising transition, plateau, falling transition) intervals."""
        U = self.U
        rise = (BETA_LO / U, BETA_HI / U)
        if which == "minus":
            fall = (1.0 - BETA_HI / U, 1.0 - BETA_LO / U)
        else:
            fall = (1.0, 1.0 + (1.0 - BETA_LO) / U)
        return rise, (rise[1], fall[0]), fall

    def support(self, which: str) -> tuple[float, float]:
        rise, _, fall = self.pieces(which)
        return rise[0], fall[1]


def make_cutoff_pair(U: float) -> CutoffPair:
    return CutoffPair(float(U))


# ---------------------------------------------------------------------------
# quadrature


_GL_ORDER = 20


@lru_cache(maxsize=8)
def _gl(n: int):
    return leggauss(n)


def _panel_nodes(lo: float, hi: float, panels: int, order: int = _GL_ORDER):
    x, w = _gl(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _log_integral(fn, ulo: float, uhi: float, s: np.ndarray, rtol: float, floor: float,
                  max_doublings: int = 14):
    """integral over u in [ulo, uhi] of fn(e^u) e^{u s} du for each s, with panel
    doubling until successive estimates agree."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    length = uhi - ulo
    if length <= 0:
        return np.zeros(len(s), dtype=complex)
    tmax = float(np.max(np.abs(s.imag))) if len(s) else 0.0
    panels = max(4, int(math.ceil(length * (tmax + 1.0) / math.pi)))

    def estimate(p):
        u, w = _panel_nodes(ulo, uhi, p)
        f = fn(np.exp(u)) * w
        return np.exp(np.outer(s, u)) @ f

    prev = estimate(panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = estimate(panels)
        err = np.abs(cur - prev)
        if np.all(err <= np.maximum(rtol * np.abs(cur), floor)):
            return cur
        prev = cur
    raise QuadratureError(
        f"no convergence on [{ulo:.3g}, {uhi:.3g}] after {panels} panels; "
        f"max change {float(np.max(err)):.3e}"
    )


def mellin_numeric(psi, s, support: tuple[float, float], rtol: float = 1e-10,
                   breakpoints=()) -> np.ndarray | complex:
    """integral_0^inf psi(y) y^{s-1} dy for psi vanishing off `support`.

    A lower support end of 0 is replaced by e^{-70} times the upper end; the
    integrand there is negligible for Re(s) > 0."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    lo, hi = support
    if not (hi > lo >= 0):
        raise ValueError("support must satisfy 0 <= lo < hi")
    ulo = math.log(lo) if lo > 0 else math.log(hi) - 70.0
    uhi = math.log(hi)
    cuts = sorted({ulo, uhi, *(math.log(b) for b in breakpoints if lo < b < hi)})
    sig = float(np.max(s_arr.real))
    # absolute floor relative to the size of the integrand
    u, w = _panel_nodes(ulo, uhi, 64)
    scale = float(np.sum(np.abs(psi(np.exp(u))) * np.exp(sig * u) * w))
    floor = 1e-13 * max(scale, 1e-300)
    total = np.zeros(len(s_arr), dtype=complex)
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += _log_integral(psi, a, b, s_arr, rtol, floor)
    return complex(total[0]) if scalar else total


def _power_integral(a: float, b: float, s: np.ndarray) -> np.ndarray:
    """integral_a^b y^{s-1} dy"""
    return (np.exp(s * math.log(b)) - np.exp(s * math.log(a))) / s


def cutoff_mellin(pair: CutoffPair, which: str, s, rtol: float = 1e-10):
    """Mellin transform of psi_minus or psi_plus: exact on the plateau,
    quadrature on the two transitions."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    rise, plateau, fall = pair.pieces(which)
    fn = (lambda y: pair.evaluate(which, y))
    sig = float(np.max(s_arr.real))
    floor = 1e-13 * _power_integral(rise[0], fall[1], np.array([sig + 0j])).real[0]
    out = _power_integral(plateau[0], plateau[1], s_arr) if plateau[1] > plateau[0] else 0
    for a, b in (rise, fall):
        out = out + _log_integral(fn, math.log(a), math.log(b), s_arr, rtol, floor)
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# decay and residue diagnostics


@dataclass
class DecayFit:
    U: float
    which: str
    t: np.ndarray
    magnitude: np.ndarray
    constant: float  # max |Psi(1+it)| / min(1/t, U/t^2)


def mellin_decay_fit(U: float, which: str = "minus", t_grid=None) -> DecayFit:
    pair = make_cutoff_pair(U)
    t = np.geomspace(1.0, 1e3, 240) if t_grid is None else np.asarray(t_grid, dtype=float)
    mag = np.abs(cutoff_mellin(pair, which, 1.0 + 1j * t))
    envelope = np.minimum(1.0 / t, U / t**2)
    return DecayFit(U, which, t, mag, float(np.max(mag / envelope)))


def mellin_decay_suite(U_values=(8.0, 32.0), t_grid=None) -> dict:
    """Fitted constants C(U) in |Psi(1+it)| <= C min(1/t, U/t^2) and their spread."""
    fits = {which: [mellin_decay_fit(U, which, t_grid) for U in U_values] for which in ("minus", "plus")}
    report = {"U": list(U_values)}
    stable = True
    for which, fs in fits.items():
        consts = [f.constant for f in fs]
        spread = max(consts) / min(consts)
        report[which] = {"constants": consts, "spread": spread}
        stable &= spread <= 2.0
    report["stable"] = bool(stable)
    return report


def residue_weight_gap(U: float, s_ell: float) -> float:
    """max over the pair of |1/(2 s) - Psi(2 s)|; the indicator of [0, 1]
    has Mellin transform 1/(2 s) at 2 s."""
    if not 0.5 < s_ell <= 1.0:
        raise ValueError("s_ell must lie in (1/2, 1]")
    pair = make_cutoff_pair(U)
    target = 1.0 / (2.0 * s_ell)
    return max(abs(target - cutoff_mellin(pair, w, 2.0 * s_ell)) for w in ("minus", "plus"))


def derivative_moment(pair: CutoffPair, which: str, m: int, sigma: float) -> float:
    """integral |psi^{(m)}(y)| y^{sigma + m - 1} dy.

    Integrating by parts m times gives
    |Psi(sigma + it)| <= derivative_moment / |s (s+1) ... (s+m-1)|."""
    rise, _, fall = pair.pieces(which)
    total = 0.0
    for a, b in (rise, fall):
        y, w = _panel_nodes(a, b, 64, 24)
        total += float(np.sum(np.abs(pair.derivative(which, y, m)) * y ** (sigma + m - 1) * w))
    return total


def mellin_tail_bound(pair: CutoffPair, which: str, sigma: float, T: float, m: int) -> float:
    """Bound for integral_{|t| > T} |Psi(sigma + it)| dt from the m-fold
    integration by parts estimate, m >= 2."""
    if m < 2:
        raise ValueError("need m >= 2 for an integrable bound")
    return 2.0 * derivative_moment(pair, which, m, sigma) / ((m - 1) * T ** (m - 1))
