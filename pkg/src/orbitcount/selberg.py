"""Trigonometric majorants and minorants of an arc indicator (Selberg's
construction through Vaaler's approximation of the sawtooth).

On the circle x = theta / 2pi of period 1, the indicator of [a, b] is
(b - a) + saw(x - b) - saw(x - a); replacing the sawtooth by Vaaler's
degree-V polynomial and adding a Fejer kernel at each endpoint gives
polynomials P_minus <= 1_J <= P_plus of degree V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import TWO_PI, angle_in_interval


def _vaaler_weight(u: np.ndarray) -> np.ndarray:
    """J(u) = pi u (1 - |u|) cot(pi u) + |u| on 0 < |u| < 1."""
    u = np.asarray(u, dtype=float)
    return np.pi * u * (1.0 - np.abs(u)) / np.tan(np.pi * u) + np.abs(u)


@dataclass
class SelbergPair:
    start: float
    length: float
    degree: int
    k: np.ndarray  # frequencies -V..V
    plus_coef: np.ndarray
    minus_coef: np.ndarray

    def evaluate(self, theta, which: str):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        coef = self.plus_coef if which == "plus" else self.minus_coef
        vals = np.exp(1j * np.outer(theta, self.k)) @ coef
        return vals.real

    def coefficient(self, n: int, which: str) -> complex:
        if abs(n) > self.degree:
            return 0j
        coef = self.plus_coef if which == "plus" else self.minus_coef
        return complex(coef[n + self.degree])


def selberg_polynomial_pair(start: float, length: float, V: int) -> SelbergPair:
    """Coefficients c_n of P(theta) = sum_{|n| <= V} c_n e^{i n theta}
    bounding the indicator of the closed arc [start, start + length]."""
    if not 0 < length <= TWO_PI:
        raise ValueError("arc length must lie in (0, 2pi]")
    if V < 1:
        raise ValueError("degree must be >= 1")
    k = np.arange(-V, V + 1)
    if length >= TWO_PI - 1e-15:
        c = np.zeros(2 * V + 1, dtype=complex)
        c[V] = 1.0
        return SelbergPair(start, length, V, k, c.copy(), c.copy())
    a = start / TWO_PI
    b = (start + length) / TWO_PI
    N = V
    nz = k != 0
    kn = k[nz].astype(float)
    weight = _vaaler_weight(kn / (N + 1))
    # Vaaler: saw(u) ~ -sum_{1<=|n|<=N} J(n/(N+1)) e(n u) / (2 pi i n), with error
    # at most F_N(u) / (2N + 2); shifting u = x - c multiplies by e(-n c)
    base = np.zeros(2 * V + 1, dtype=complex)
    base[V] = b - a
    saw_coef = -weight / (2j * np.pi * kn)
    base[nz] += saw_coef * (np.exp(-2j * np.pi * kn * b) - np.exp(-2j * np.pi * kn * a))
    # Fejer kernel F_N(x - c) coefficients (1 - |n|/(N+1)) e(-n c)
    fejer = (1.0 - np.abs(k) / (N + 1.0))
    ends = fejer * (np.exp(-2j * np.pi * k * a) + np.exp(-2j * np.pi * k * b))
    bump = ends / (2.0 * (N + 1.0))
    return SelbergPair(start, length, V, k, base + bump, base - bump)


@dataclass
class SelbergCheck:
    degree: int
    majorant_ok: bool
    minorant_ok: bool
    degree_ok: bool
    coef_decay_constant: float  # max_{0<|k|<=V} |k| |c_k|
    zeroth_defect: float  # max over the pair of |c_0 - |J|/2pi|
    zeroth_constant: float  # V * zeroth_defect
    grid_violation: float


def check_selberg_pair(pair: SelbergPair, grid_points: int = 10_000, tol: float = 1e-9) -> SelbergCheck:
    theta = np.linspace(0.0, TWO_PI, grid_points, endpoint=False)
    inside = angle_in_interval(theta, pair.start, pair.length).astype(float)
    plus = pair.evaluate(theta, "plus")
    minus = pair.evaluate(theta, "minus")
    viol_plus = float(np.max(inside - plus))
    viol_minus = float(np.max(minus - inside))
    nz = pair.k != 0
    decay = max(float(np.max(np.abs(pair.k[nz]) * np.abs(c[nz]))) for c in (pair.plus_coef, pair.minus_coef))
    target = pair.length / TWO_PI
    defect = max(abs(pair.plus_coef[pair.degree] - target), abs(pair.minus_coef[pair.degree] - target))
    return SelbergCheck(
        degree=pair.degree,
        majorant_ok=viol_plus <= tol,
        minorant_ok=viol_minus <= tol,
        degree_ok=len(pair.k) == 2 * pair.degree + 1,
        coef_decay_constant=decay,
        zeroth_defect=float(defect),
        zeroth_constant=float(defect * pair.degree),
        grid_violation=max(viol_plus, viol_minus),
    )


def selberg_suite(start: float = 0.0, length: float = math.pi / 3, degrees=(8, 16, 32, 64),
                  grid_points: int = 10_000) -> dict:
    checks = [check_selberg_pair(selberg_polynomial_pair(start, length, V), grid_points) for V in degrees]
    consts = [c.zeroth_constant for c in checks]
    return {
        "degrees": list(degrees),
        "checks": checks,
        "properties_ok": all(c.majorant_ok and c.minorant_ok and c.degree_ok for c in checks),
        "zeroth_constants": consts,
        "zeroth_spread": max(consts) / min(consts),
        "stable": max(consts) / min(consts) <= 2.0,
    }
