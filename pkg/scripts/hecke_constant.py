"""Measured N(R)/R^2 for Hecke group orbits of e1 against the width-corrected
constant (2 lambda / covol) and the width-free 2 / covol."""

import argparse
import math

import numpy as np

from orbitcount.geometry import PlaneVector
from orbitcount.lattices import preset_hecke, quadratic_constant
from orbitcount.orbits import enumerate_orbit
from orbitcount.regions import Ball, count_curve, fit_constant

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--R", type=float, default=150.0)
    ap.add_argument("--q", type=int, nargs="+", default=[3, 4, 5, 6])
    args = ap.parse_args()
    for q in args.q:
        spec = preset_hecke(q)
        orbit = enumerate_orbit(spec, PlaneVector(1.0, 0.0), args.R)
        fit = fit_constant(count_curve(orbit, Ball(), np.geomspace(args.R / 10, args.R, 30)))
        print(f"q={q}: fitted {fit.constant:.4f}  width-corrected {quadratic_constant(spec):.4f}  "
              f"2/covol {2 / spec.covolume:.4f}  points {len(orbit)}")
