"""Plane regions star-shaped at 0, counting of orbit points in dilates, and
fits of the quadratic growth constant and error exponent.

Every region is described by its gauge: the smallest R with p in R * S
(infinite when no dilate contains p).  Counting in R * S is then a threshold
on gauges, with a relative tolerance for closed boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .geometry import TWO_PI, Mat2, angle_in_interval, normalize_angle


class RegionError(ValueError):
    pass


class DegenerateGridError(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    name: str = "ball"

    def gauge(self, points, norms, angles):
        return norms

    def outer_radius(self) -> float:
        return 1.0

    def area(self) -> float:
        return math.pi


def _linear_map(L) -> np.ndarray:
    L = L.as_array() if isinstance(L, Mat2) else np.asarray(L, dtype=float)
    if L.shape != (2, 2) or not np.linalg.det(L) > 0:
        raise RegionError("ellipse map must be a 2x2 matrix with positive determinant")
    return L


@dataclass(frozen=True)
class Ellipse:
    """L(B(0, 1)) for an invertible linear map L."""

    L: tuple
    name: str = "ellipse"

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(map(tuple, _linear_map(self.L))))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.L)

    def gauge(self, points, norms, angles):
        q = points @ np.linalg.inv(self.matrix).T
        return np.hypot(q[:, 0], q[:, 1])

    def outer_radius(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def area(self) -> float:
        return math.pi * float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class Sector:
    """{r e^{i theta}: r <= 1, theta in [start, start + length]}, closed."""

    start: float
    length: float
    name: str = "sector"

    def __post_init__(self):
        if not 0 < self.length <= TWO_PI:
            raise RegionError("sector length must lie in (0, 2pi]")

    def gauge(self, points, norms, angles):
        inside = angle_in_interval(angles, normalize_angle(self.start), self.length, 1e-12)
        return np.where(inside, norms, np.inf)

    def outer_radius(self) -> float:
        return 1.0

    def area(self) -> float:
        return 0.5 * self.length


@dataclass(frozen=True)
class EllipticSector:
    """L applied to a sector."""

    L: tuple
    start: float
    length: float
    name: str = "elliptic-sector"

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(map(tuple, _linear_map(self.L))))
        if not 0 < self.length <= TWO_PI:
            raise RegionError("sector length must lie in (0, 2pi]")

    def gauge(self, points, norms, angles):
        q = points @ np.linalg.inv(np.array(self.L)).T
        r = np.hypot(q[:, 0], q[:, 1])
        th = normalize_angle(np.arctan2(q[:, 1], q[:, 0]))
        inside = angle_in_interval(th, normalize_angle(self.start), self.length, 1e-12)
        return np.where(inside, r, np.inf)

    def outer_radius(self) -> float:
        return float(np.linalg.norm(np.array(self.L), 2))

    def area(self) -> float:
        return 0.5 * self.length * float(np.linalg.det(np.array(self.L)))


@dataclass
class StarProfile:
    """Smooth positive 2pi-periodic radius function with its Fourier series
    truncated at `order` and sup bounds for rho, rho', rho''."""

    func: object
    order: int = 64
    coefficients: np.ndarray = field(init=False, repr=False)
    sup: float = field(init=False)
    sup_d1: float = field(init=False)
    sup_d2: float = field(init=False)
    series_error: float = field(init=False)

    def __post_init__(self):
        M = max(2048, 8 * self.order)
        th = TWO_PI * np.arange(M) / M
        vals = np.asarray(self.func(th), dtype=float)
        if np.any(vals <= 0):
            raise RegionError("star profile must be strictly positive")
        c = np.fft.fft(vals) / M
        n = np.arange(-self.order, self.order + 1)
        self.coefficients = c[n % M]
        grid = TWO_PI * np.arange(2048) / 2048
        series = self.series(grid)
        self.series_error = float(np.max(np.abs(series - self.func(grid))))
        if self.series_error > 1e-8:
            raise RegionError(
                f"Fourier series of order {self.order} misses the profile by {self.series_error:.2e}; raise the order"
            )
        self.sup = float(np.max(vals))
        d1 = self.series(th, derivative=1)
        d2 = self.series(th, derivative=2)
        self.sup_d1 = float(np.max(np.abs(d1)))
        self.sup_d2 = float(np.max(np.abs(d2)))

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)

    def series(self, theta, derivative: int = 0) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        n = self.frequencies
        c = self.coefficients * (1j * n) ** derivative
        return (np.exp(1j * np.outer(theta, n)) @ c).real

    def __call__(self, theta):
        return np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float)

    def area(self) -> float:
        """(1/2) int rho^2 dtheta = pi sum |c_n|^2."""
        return float(math.pi * np.sum(np.abs(self.coefficients) ** 2))


def cosine_profile(amplitude: float, frequency: int = 2, order: int = 16) -> StarProfile:
    """rho(theta) = 1 + amplitude cos(frequency theta)"""
    return StarProfile(lambda th: 1.0 + amplitude * np.cos(frequency * th), order=order)


@dataclass
class StarShape:
    """{r e^{i theta}: r <= rho(theta)}.  `profile` is a StarProfile or any
    positive periodic callable; `sup` bounds rho when it is a bare callable."""

    profile: object
    sup: float | None = None
    name: str = "star"

    def __post_init__(self):
        if self.sup is None:
            if isinstance(self.profile, StarProfile):
                self.sup = self.profile.sup
            else:
                grid = TWO_PI * np.arange(4096) / 4096
                self.sup = float(np.max(self.profile(grid))) * (1 + 1e-6)

    def gauge(self, points, norms, angles):
        rho = np.asarray(self.profile(angles), dtype=float)
        return norms / rho

    def outer_radius(self) -> float:
        return float(self.sup)

    def area(self) -> float:
        if isinstance(self.profile, StarProfile):
            return self.profile.area()
        grid = TWO_PI * np.arange(8192) / 8192
        return float(0.5 * np.mean(self.profile(grid) ** 2) * TWO_PI)


def region_from_dict(d: dict):
    kind = d.get("type", "ball")
    if kind == "ball":
        return Ball()
    if kind == "ellipse":
        return Ellipse(d["L"])
    if kind == "sector":
        return Sector(float(d["start"]), float(d["length"]))
    if kind == "elliptic-sector":
        return EllipticSector(d["L"], float(d["start"]), float(d["length"]))
    if kind == "star":
        return StarShape(cosine_profile(float(d.get("amplitude", 0.3)), int(d.get("frequency", 2))))
    raise RegionError(f"unknown region type {kind!r}")


# ---------------------------------------------------------------------------
# counting


def _gauges(orbit, region, R_max: float):
    if R_max * region.outer_radius() > orbit.radius_cap * (1 + 1e-12):
        raise RegionError(
            f"R * outer radius = {R_max * region.outer_radius():.6g} exceeds orbit cap {orbit.radius_cap:.6g}"
        )
    k = int(np.searchsorted(orbit.norms, R_max * region.outer_radius() * (1 + 1e-9), side="right"))
    return region.gauge(orbit.points[:k], orbit.norms[:k], orbit.angles[:k])


def count_in_region(orbit, region, R: float, diagnostics: bool = False):
    """|orbit ∩ R * region|, boundary included.  With diagnostics=True also
    returns a dict reporting points within tolerance of the boundary."""
    if isinstance(region, Ball) and getattr(orbit, "exact_points", None) is not None:
        n = orbit.count(R)
        return (n, {"boundary_hits": 0, "exact": True}) if diagnostics else n
    g = _gauges(orbit, region, R)
    tol = TOL.boundary * max(R, 1.0)
    n = int(np.count_nonzero(g <= R + tol))
    if not diagnostics:
        return n
    hits = int(np.count_nonzero(np.abs(g - R) <= tol))
    return n, {"boundary_hits": hits, "exact": False, "tolerance": tol}


@dataclass
class CountCurve:
    R: np.ndarray
    N: np.ndarray
    lattice: str = ""
    region: str = ""

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.N = np.asarray(self.N, dtype=np.int64)
        if len(self.R) != len(self.N):
            raise ValueError("R and N must have equal length")
        if len(self.R) > 1 and (np.any(np.diff(self.R) <= 0) or np.any(np.diff(self.N) < 0)):
            raise ValueError("R must increase strictly and N must be nondecreasing")

    def __len__(self):
        return len(self.R)


def count_curve(orbit, region, R_grid) -> CountCurve:
    R_grid = np.asarray(R_grid, dtype=float)
    name = getattr(region, "name", "")
    lattice = getattr(orbit, "lattice", "")
    if len(R_grid) == 0:
        return CountCurve(R_grid, np.zeros(0, dtype=np.int64), lattice, name)
    if np.any(np.diff(R_grid) <= 0):
        raise ValueError("R grid must be strictly increasing")
    if isinstance(region, Ball) and getattr(orbit, "exact_points", None) is not None:
        return CountCurve(R_grid, [orbit.count(R) for R in R_grid], lattice, name)
    if hasattr(orbit, "points"):
        g = np.sort(_gauges(orbit, region, R_grid[-1]))
        tol = TOL.boundary * np.maximum(R_grid, 1.0)
        N = np.searchsorted(g, R_grid + tol, side="right")
        return CountCurve(R_grid, N, lattice, name)
    if isinstance(region, Ball):
        return CountCurve(R_grid, [orbit.count(R) for R in R_grid], lattice, name)
    raise RegionError("this orbit type supports ball counts only")


@dataclass
class FitResult:
    constant: float
    exponent: float | None
    residual: float
    R_range: tuple
    sup_ratio: float | None = None
    note: str = ""


def fit_constant(curve: CountCurve) -> FitResult:
    """Least-squares slope of N against R^2 through the origin."""
    if len(curve) < 5 or curve.R[-1] < 10 * curve.R[0]:
        raise DegenerateGridError("need at least 5 samples spanning a factor of 10 in R")
    x = curve.R**2
    y = curve.N.astype(float)
    c = float(x @ y / (x @ x))
    resid = float(np.linalg.norm(y - c * x) / np.linalg.norm(y))
    return FitResult(c, None, resid, (float(curve.R[0]), float(curve.R[-1])))


def fit_error_exponent(curve: CountCurve, c: float) -> FitResult:
    """Slope of log|N - c R^2| against log R after dropping the first decade of
    R (all samples are kept if that would leave fewer than 3), plus the sup of
    |N - c R^2| / R^{4/3} over every sample."""
    if not c > 0:
        raise ValueError("c must be positive")
    if len(curve) < 10:
        raise DegenerateGridError("need at least 10 samples")
    R = curve.R
    resid = np.abs(curve.N - c * R**2)
    sup_ratio = float(np.max(resid / R ** (4.0 / 3.0)))
    keep = R >= 10 * R[0]
    note = ""
    if keep.sum() < 3:
        keep = np.ones_like(R, dtype=bool)
        note = "range below one decade; all samples used"
    keep &= resid > 0
    if keep.sum() < 2:
        return FitResult(c, None, 0.0, (float(R[0]), float(R[-1])), sup_ratio, "all residuals zero: exponent undefined")
    slope, _ = np.polyfit(np.log(R[keep]), np.log(resid[keep]), 1)
    return FitResult(c, float(slope), float(np.linalg.norm(resid)), (float(R[0]), float(R[-1])), sup_ratio, note)


def sector_profile(orbit, nbins: int, R: float) -> list[tuple[int, int]]:
    """Counts of orbit points with |p| <= R in the half-open bins
    [2 pi k / nbins, 2 pi (k + 1) / nbins)."""
    if nbins < 2:
        raise ValueError("need at least 2 bins")
    if R > orbit.radius_cap * (1 + 1e-12):
        raise RegionError("R exceeds orbit cap")
    k = orbit.count(R)
    ang = orbit.angles[:k]
    idx = np.minimum((ang / (TWO_PI / nbins)).astype(np.int64), nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return [(b, int(counts[b])) for b in range(nbins)]


def sandwich_check(orbit, U: float, R: float) -> dict:
    """Theta_{f-} <= N(R) <= Theta_{f+} + N(R/U) with f+-(u) = psi+-(|u| / R)."""
    from .mellin import make_cutoff_pair

    pair = make_cutoff_pair(U)
    hi = pair.support("plus")[1]
    if R * hi > orbit.radius_cap * (1 + 1e-12):
        raise RegionError(f"R (1 + 1/U) = {R * hi:.6g} exceeds orbit cap {orbit.radius_cap:.6g}")
    k = int(np.searchsorted(orbit.norms, R * hi * (1 + 1e-12), side="right"))
    x = orbit.norms[:k] / R
    lower = float(np.sum(pair.minus(x)))
    upper = float(np.sum(pair.plus(x)))
    N = orbit.count(R)
    inner = orbit.count(R / U)
    # summation roundoff on the smooth sums
    slack = 1e-9 * max(1, k)
    ok = lower <= N + slack and N <= upper + inner + slack
    return {"R": R, "U": U, "lower": lower, "count": N, "upper": upper, "inner": inner, "pass": bool(ok)}
