"""Smoothed count sum psi(|p| / R) against its Mellin inversion on Re(s) = 3,
with the truncation chosen from the integration-by-parts tail bound."""

import argparse

from orbitcount.eisenstein import angular_radial_consistency, mellin_theta_reconstruction
from orbitcount.orbits import oracle_orbit

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--R", type=float, default=50.0)
    ap.add_argument("--U", type=float, default=8.0)
    args = ap.parse_args()
    orbit = oracle_orbit(args.R * (1 + 2 / args.U))
    rep = mellin_theta_reconstruction(orbit, args.U, args.R)
    print({k: rep[k] for k in ("direct", "reconstructed", "relative_error", "T_max", "order", "tail_bound")})
    print(angular_radial_consistency(orbit, args.U, args.R, 0.0, 1.0))
