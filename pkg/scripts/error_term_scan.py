"""Normalised error |N(R) - (6/pi) R^2| / R^a for SL2(Z) e1 on a log grid, and
the fitted power of the error.  The fitted power is an observed rate, far
below the analytic upper bounds."""

import argparse
import math

import numpy as np

from orbitcount.orbits import primitive_count
from orbitcount.regions import CountCurve, fit_error_exponent

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--R-max", type=float, default=2e4)
    ap.add_argument("--samples", type=int, default=120)
    args = ap.parse_args()
    R = np.geomspace(10, args.R_max, args.samples)
    N = np.array([primitive_count(r) for r in R])
    curve = CountCurve(R, N, "sl2z", "ball")
    res = fit_error_exponent(curve, 6 / math.pi)
    for a in (1.0, 4 / 3):
        print(f"sup |N - cR^2| / R^{a:.3f} = {np.max(np.abs(N - 6 / math.pi * R**2) / R**a):.4f}")
    print(f"fitted error power {res.exponent:.3f} over R in [{R[0]:.0f}, {R[-1]:.0f}] {res.note}")
