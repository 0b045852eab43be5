"""Unimodular 2x2 matrices, the plane and upper half-plane actions, Iwasawa
coordinates and polar coordinates.

Matrices built from Python ints stay exact under products and inverses, so
SL2(Z) computations never round.  Anything else is double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral
from typing import NamedTuple

import numpy as np

from .config import TOL

TWO_PI = 2.0 * math.pi


class DeterminantError(ValueError):
    pass


class ZeroVectorError(ValueError):
    """Raised when an angle is requested for the zero vector."""


def normalize_angle(theta):
    """Reduce angles to [0, 2pi); values that round to 2pi map to 0."""
    out = np.mod(theta, TWO_PI)
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _is_int(x) -> bool:
    return isinstance(x, Integral) and not isinstance(x, bool)


@dataclass(frozen=True)
class Mat2:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if self.is_integral:
            if det != 1:
                raise DeterminantError(f"integer matrix has det {det}")
        elif abs(det - 1.0) > TOL.det * max(1.0, self.max_abs() ** 2):
            raise DeterminantError(f"det = {det!r} differs from 1")

    @property
    def is_integral(self) -> bool:
        return all(_is_int(x) for x in (self.a, self.b, self.c, self.d))

    def max_abs(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: Mat2) -> Mat2:
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return Mat2(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def __neg__(self) -> Mat2:
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def inv(self) -> Mat2:
        # det = 1
        return Mat2(self.d, -self.b, -self.c, self.a)

    def transpose(self) -> Mat2:
        return Mat2(self.a, self.c, self.b, self.d)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    def as_int_array(self) -> np.ndarray:
        if not self.is_integral:
            raise TypeError("matrix has non-integer entries")
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def allclose(self, other: Mat2, tol: float = TOL.recompose) -> bool:
        return bool(np.max(np.abs(self.as_array() - other.as_array())) <= tol)

    def exact_equal(self, other: Mat2) -> bool:
        return (self.a, self.b, self.c, self.d) == (other.a, other.b, other.c, other.d)

    @classmethod
    def from_array(cls, arr) -> Mat2:
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            vals = [int(x) for x in arr.ravel()]
        else:
            vals = [float(x) for x in arr.ravel()]
        return cls(*vals)


IDENTITY = Mat2(1, 0, 0, 1)
MINUS_IDENTITY = Mat2(-1, 0, 0, -1)


def rotation(theta: float) -> Mat2:
    c, s = math.cos(theta), math.sin(theta)
    return Mat2(c, -s, s, c)


def diag(y: float) -> Mat2:
    """diag(y, 1/y)"""
    return Mat2(y, 0.0, 0.0, 1.0 / y)


def a_t(t: float) -> Mat2:
    """diag(e^{t/2}, e^{-t/2}), the diagonal flow parametrised by t."""
    return diag(math.exp(t / 2.0))


def unipotent(s) -> Mat2:
    if _is_int(s):
        return Mat2(1, s, 0, 1)
    return Mat2(1.0, float(s), 0.0, 1.0)


@dataclass(frozen=True)
class PlaneVector:
    x: float
    y: float

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def theta(self) -> float:
        return polar(self)[1]

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def __neg__(self) -> PlaneVector:
        return PlaneVector(-self.x, -self.y)


E1 = PlaneVector(1, 0)


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError(f"Im(z) must be positive, got {self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


class IwasawaCoords(NamedTuple):
    theta: float
    yscale: float
    x: float


def apply_linear(g: Mat2, v: PlaneVector) -> PlaneVector:
    return PlaneVector(g.a * v.x + g.b * v.y, g.c * v.x + g.d * v.y)


def mobius(g: Mat2, z: UpperHalfPoint) -> UpperHalfPoint:
    w = (g.a * z.z + g.b) / (g.c * z.z + g.d)
    return UpperHalfPoint(w.real, w.imag)


def polar(v: PlaneVector) -> tuple[float, float]:
    if v.x == 0 and v.y == 0:
        raise ZeroVectorError("polar angle of the zero vector is undefined")
    return math.hypot(v.x, v.y), normalize_angle(math.atan2(v.y, v.x))


def iwasawa(g: Mat2) -> IwasawaCoords:
    """Write g = r_theta diag(y, 1/y) u_x.

    y and theta come from the first column g e1 = y (cos theta, sin theta);
    x is read off diag(1/y, y) r_{-theta} g = u_x.
    """
    a, b, c, d = (float(t) for t in (g.a, g.b, g.c, g.d))
    y = math.hypot(a, c)
    theta = normalize_angle(math.atan2(c, a))
    ct, st = a / y, c / y
    # (r_{-theta} g)_{12} = cos*b + sin*d
    x = (ct * b + st * d) / y
    return IwasawaCoords(theta, y, x)


def recompose(coords: IwasawaCoords) -> Mat2:
    theta, y, x = coords
    return rotation(theta) @ diag(y) @ unipotent(float(x))


def iwasawa_arrays(m: np.ndarray):
    """Vectorised Iwasawa coordinates for a stack of matrices of shape (n, 4)
    stored row-major as (a, b, c, d)."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    y = np.hypot(a, c)
    theta = normalize_angle(np.arctan2(c, a))
    x = (a * b + c * d) / (y * y)
    return theta, y, x


def polar_arrays(xy: np.ndarray):
    xy = np.asarray(xy, dtype=float)
    r = np.hypot(xy[:, 0], xy[:, 1])
    theta = normalize_angle(np.arctan2(xy[:, 1], xy[:, 0]))
    return r, theta


def angle_in_interval(theta, start: float, length: float, tol: float = 0.0):
    """Closed membership of angles in the arc [start, start + length] mod 2pi."""
    if length >= TWO_PI - tol:
        return np.ones(np.shape(theta), dtype=bool)
    delta = np.mod(np.asarray(theta) - start, TWO_PI)
    return (delta <= length + tol) | (delta >= TWO_PI - tol)
