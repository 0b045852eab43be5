"""Numerical tolerances shared across the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    det: float = 1e-12
    recompose: float = 1e-10
    roundtrip: float = 1e-12
    # relative slack used for closed-boundary membership tests
    boundary: float = 1e-9


TOL = Tolerances()
