"""Finite slices of discrete orbits Gamma v inside a radius cap.

Enumeration is a level-synchronous breadth-first search over the Schreier
graph of the generators (and their inverses) acting on vectors.  Vectors
leaving the slack ball ``norm_slack * R_cap`` are pruned; a run is certified
once the slack ball is exhausted and the in-cap count has not moved over the
last ``stabilization_window`` depths.

For SL2(Z) there is an exact gcd oracle; ``PrimitiveOrbit`` streams sums over
primitive vectors for caps too large to materialise.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import TOL
from .geometry import Mat2, PlaneVector, polar_arrays
from .lattices import LatticeSpec


class EnumerationError(RuntimeError):
    pass


class CapExceededError(ValueError):
    pass


@dataclass(frozen=True)
class EnumOptions:
    dedup_quantum: float | None = None  # None -> 1e-9 * R_cap
    max_depth: int = 1_000_000
    stabilization_window: int = 2
    norm_slack: float = 4.0

    def __post_init__(self):
        if self.dedup_quantum is not None and not self.dedup_quantum > 0:
            raise ValueError("dedup_quantum must be positive")
        if self.max_depth < 1 or self.stabilization_window < 1:
            raise ValueError("max_depth and stabilization_window must be positive")
        if self.norm_slack < 1:
            raise ValueError("norm_slack must be >= 1")

    def quantum(self, R_cap: float) -> float:
        return self.dedup_quantum if self.dedup_quantum is not None else 1e-9 * R_cap

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class OrbitSet:
    """Deduplicated orbit points with norm <= radius_cap, sorted by norm then angle."""

    base_vector: PlaneVector
    radius_cap: float
    points: np.ndarray
    depth: np.ndarray
    depth_used: int
    stabilized: bool
    quantum: float = 0.0
    exact_points: np.ndarray | None = None
    lattice: str = ""
    provenance: str = "bfs"
    norms: np.ndarray = field(init=False, repr=False)
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.depth = np.asarray(self.depth, dtype=np.int32).reshape(-1)
        r, th = polar_arrays(self.points) if len(self.points) else (np.empty(0), np.empty(0))
        order = np.lexsort((th, r))
        self.points = self.points[order]
        self.depth = self.depth[order]
        if self.exact_points is not None:
            self.exact_points = np.asarray(self.exact_points)[order]
        self.norms = r[order]
        self.angles = th[order]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def tol(self) -> float:
        return max(self.quantum, TOL.boundary * self.radius_cap)

    def require_stabilized(self):
        if not self.stabilized:
            raise EnumerationError("orbit enumeration did not stabilize; results are partial")

    def count(self, R: float) -> int:
        """Closed-ball count, boundary within the dedup quantum counted in."""
        if R > self.radius_cap * (1 + 1e-12):
            raise CapExceededError(f"R={R} exceeds orbit cap {self.radius_cap}")
        if self.exact_points is not None:
            m = _floor_square(R)
            n2 = self._exact_norm2()
            return int(np.searchsorted(n2, m, side="right"))
        return int(np.searchsorted(self.norms, R + self.tol, side="right"))

    def _exact_norm2(self) -> np.ndarray:
        if not hasattr(self, "_n2"):
            p = self.exact_points.astype(np.int64)
            self._n2 = p[:, 0] * p[:, 0] + p[:, 1] * p[:, 1]
        return self._n2

    def quadratic_bound(self, R_min: float | None = None) -> float:
        """sup of N(R)/R^2 over [R_min, cap]; N is a right-continuous step
        function, so the sup sits at orbit norms."""
        if len(self) == 0:
            return 0.0
        R_min = self.norms[0] if R_min is None else R_min
        upto = np.searchsorted(self.norms, self.norms, side="right")
        keep = self.norms >= R_min
        if not keep.any():
            return float(len(self) / R_min**2)
        first = self.count(R_min) / R_min**2
        return float(max(first, np.max(upto[keep] / self.norms[keep] ** 2)))

    def growth_constant(self) -> float:
        """Bound for N(R)/R^2 used by tail estimates past the cap: the sup over
        the top half of the enumerated range."""
        return self.quadratic_bound(0.5 * self.radius_cap)

    def power_sums(self, s_values) -> np.ndarray:
        s_values = np.atleast_1d(np.asarray(s_values, dtype=complex))
        logr = np.log(self.norms)
        return np.array([np.sum(np.exp(-2.0 * s * logr)) for s in s_values])

    def twisted_power_sums(self, s_values, n: int) -> np.ndarray:
        s_values = np.atleast_1d(np.asarray(s_values, dtype=complex))
        logr = np.log(self.norms)
        return np.array([np.sum(np.exp(-2.0 * s * logr - 1j * n * self.angles)) for s in s_values])

    def point_set(self) -> set[tuple]:
        if self.exact_points is not None:
            return {(int(x), int(y)) for x, y in self.exact_points}
        q = self.quantum or 1e-9 * self.radius_cap
        return {(int(round(x / q)), int(round(y / q))) for x, y in self.points}

    def restricted(self, R_cap: float) -> OrbitSet:
        """The sub-orbit inside a smaller cap."""
        k = self.count(R_cap)
        return OrbitSet(
            self.base_vector, R_cap, self.points[:k], self.depth[:k], self.depth_used,
            self.stabilized, self.quantum,
            None if self.exact_points is None else self.exact_points[:k],
            self.lattice, self.provenance,
        )


def _floor_square(R: float) -> int:
    return int(math.floor(R * R * (1.0 + 1e-12) + 1e-12))


# ---------------------------------------------------------------------------
# breadth-first search engine


class _KeyMaker:
    """Maps state rows to 1-d keys for unique/isin.  Integer states (exact, or
    floats quantized to a grid) are packed into one int64 when the coordinate
    range allows, otherwise viewed as fixed-width byte strings.

    For quantized floats, a coordinate within `margin` of a rounding midpoint
    may round either way depending on the path that produced it, so
    ``variants`` also returns the keys with such coordinates rounded to the
    other side."""

    margin = 0.01

    def __init__(self, k: int, span_bound: float, quantum: float | None):
        self.k = k
        self.scale = None if quantum is None else 1.0 / quantum
        span = span_bound if self.scale is None else span_bound * self.scale
        self.span = int(math.ceil(span)) + 3
        self.base = 2 * self.span + 1
        self.packed = self.base**k < 2**62

    @property
    def exact(self) -> bool:
        return self.scale is None

    def _pack(self, q: np.ndarray) -> np.ndarray:
        if q.dtype == object:
            return np.array([repr(tuple(int(t) for t in r)) for r in q])
        if self.packed:
            out = np.zeros(len(q), dtype=np.int64)
            for j in range(self.k):
                out = out * self.base + (q[:, j] + self.span)
            return out
        rows = np.ascontiguousarray(q.astype(np.int64))
        return rows.view(np.dtype((np.void, 8 * self.k))).ravel()

    def __call__(self, states: np.ndarray) -> np.ndarray:
        q = states if self.scale is None else np.rint(states * self.scale).astype(np.int64)
        return self._pack(q)

    def variants(self, states: np.ndarray) -> np.ndarray:
        """(n, 2^k) keys: every choice of rounding direction on near-midpoint
        coordinates (other coordinates keep their nearest rounding)."""
        scaled = states * self.scale
        q = np.rint(scaled).astype(np.int64)
        frac = scaled - np.floor(scaled)
        near = np.abs(frac - 0.5) < self.margin
        other = np.where(scaled > q, q + 1, q - 1)
        cols = []
        for mask in range(1 << self.k):
            flip = np.array([(mask >> j) & 1 for j in range(self.k)], dtype=bool)
            cols.append(self._pack(np.where(near & flip, other, q)))
        return np.stack(cols, axis=1)


@dataclass
class _BFSResult:
    states: np.ndarray
    depth: np.ndarray
    depth_used: int
    exhausted: bool
    stable_depths: int


def _bfs(start: np.ndarray, maps: list[np.ndarray], inside_fn, in_cap_fn, key_fn,
         max_depth: int) -> _BFSResult:
    """Explore every state reachable from `start` by row maps s -> s @ M while
    staying in {inside_fn}.  Only states satisfying in_cap_fn are returned."""
    k = start.shape[-1]
    cur = start.reshape(1, k)
    cur_keys = key_fn(cur)
    prev_keys = cur_keys[:0]
    mask = in_cap_fn(cur)
    kept = [cur[mask]]
    kept_depth = [np.zeros(int(mask.sum()), dtype=np.int32)]
    history = [int(mask.sum())]
    depth = 0
    exhausted = False
    while depth < max_depth:
        depth += 1
        cand = np.concatenate([cur @ M for M in maps])
        cand = cand[inside_fn(cand)]
        ckeys, idx = np.unique(key_fn(cand), return_index=True)
        cand = cand[idx]
        # neighbours of level d lie in levels d-1, d, d+1 (symmetric generators)
        seen = np.concatenate([prev_keys, cur_keys])
        if key_fn.exact:
            fresh = ~np.isin(ckeys, seen)
        else:
            fresh = _fresh_quantized(key_fn.variants(cand), ckeys, seen)
        prev_keys, cur_keys = cur_keys, ckeys[fresh]
        cur = cand[fresh]
        if len(cur) == 0:
            exhausted = True
            break
        mask = in_cap_fn(cur)
        kept.append(cur[mask])
        kept_depth.append(np.full(int(mask.sum()), depth, dtype=np.int32))
        history.append(history[-1] + int(mask.sum()))
    # trailing levels that added nothing inside the cap; the empty
    # terminating level counts as one
    stable = 1 if exhausted else 0
    for i in range(len(history) - 1, 0, -1):
        if history[i] != history[i - 1]:
            break
        stable += 1
    return _BFSResult(np.concatenate(kept), np.concatenate(kept_depth), depth, exhausted, stable)


def _fresh_quantized(variants: np.ndarray, ckeys: np.ndarray, seen: np.ndarray) -> np.ndarray:
    """Candidates none of whose rounding variants were seen on the previous two
    levels; near-duplicates within the level keep the one with the smaller key."""
    fresh = ~np.isin(variants, seen).any(axis=1)
    own = np.arange(len(ckeys))
    for j in range(1, variants.shape[1]):
        alt = variants[:, j]
        pos = np.searchsorted(ckeys, alt)
        pos_c = np.minimum(pos, len(ckeys) - 1)
        hit = (pos < len(ckeys)) & (ckeys[pos_c] == alt) & (pos_c < own)
        fresh &= ~hit
    return fresh


def _symmetric(gens: list[Mat2]) -> list[Mat2]:
    out: list[Mat2] = []
    for g in gens:
        for h in (g, g.inv()):
            if not any(h.allclose(k, 1e-14) for k in out):
                out.append(h)
    return out


def _search(start, maps, R_cap, opts: EnumOptions, exact: bool):
    """Shared driver: Euclidean norm of the state row, pruned at the slack ball."""
    bound = opts.norm_slack * R_cap
    k = start.shape[-1]
    if exact:
        max_entry = max(int(np.max(np.abs(M))) for M in maps)
        # squared norms of candidates stay below (k * max_entry * bound)^2
        dtype = np.int64 if (k * max_entry * bound) ** 2 < 2**62 else object
        maps = [M.astype(dtype) for M in maps]
        start = start.astype(dtype)
        m_cap, m_bound = _floor_square(R_cap), _floor_square(bound)
        sq = lambda s: np.sum(s * s, axis=1)  # noqa: E731
        inside = lambda s: (sq(s) <= m_bound).astype(bool)  # noqa: E731
        in_cap = lambda s: (sq(s) <= m_cap).astype(bool)  # noqa: E731
        keys = _KeyMaker(k, bound, None)
        quantum = 0.0
    else:
        quantum = opts.quantum(R_cap)
        maps = [M.astype(float) for M in maps]
        start = start.astype(float)
        nrm = lambda s: np.sqrt(np.sum(s * s, axis=1))  # noqa: E731
        inside = lambda s: nrm(s) <= bound  # noqa: E731
        in_cap = lambda s: nrm(s) <= R_cap * (1 + TOL.boundary)  # noqa: E731
        keys = _KeyMaker(k, bound, quantum)
    res = _bfs(start, maps, inside, in_cap, keys, opts.max_depth)
    stabilized = res.exhausted and res.stable_depths >= opts.stabilization_window
    return res, stabilized, quantum


def enumerate_vectors(gens: list[Mat2], v: PlaneVector, R_cap: float,
                      opts: EnumOptions | None = None, lattice: str = "") -> OrbitSet:
    """Orbit slice of v under the group generated by `gens` (inverses added)."""
    opts = opts or EnumOptions()
    if v.x == 0 and v.y == 0:
        raise ValueError("base vector must be nonzero")
    gens = _symmetric(list(gens))
    if not gens:
        raise ValueError("at least one generator needed")
    exact = all(g.is_integral for g in gens) and isinstance(v.x, int) and isinstance(v.y, int)
    # column action v -> g v written on row states as s -> s @ g^T
    maps = [(g.as_int_array() if exact else g.as_array()).T for g in gens]
    start = np.array([v.x, v.y], dtype=np.int64 if exact else float)
    res, stabilized, quantum = _search(start, maps, R_cap, opts, exact)
    return OrbitSet(
        base_vector=v,
        radius_cap=float(R_cap),
        points=res.states.astype(float),
        depth=res.depth,
        depth_used=res.depth_used,
        stabilized=stabilized,
        quantum=quantum if not exact else 1e-9 * R_cap,
        exact_points=res.states.astype(np.int64) if exact else None,
        lattice=lattice,
        provenance="bfs",
    )


def enumerate_orbit(spec: LatticeSpec, v: PlaneVector, R_cap: float,
                    opts: EnumOptions | None = None) -> OrbitSet:
    return enumerate_vectors(list(spec.generators), v, R_cap, opts, lattice=spec.name)


def enumerate_group(spec: LatticeSpec, frob_bound: float, opts: EnumOptions | None = None):
    """Group elements of Frobenius norm <= frob_bound as (n, 4) row-major rows,
    found by a Cayley-graph search from the identity.

    Returns (elements, depth, stabilized)."""
    opts = opts or EnumOptions(norm_slack=2.0)
    gens = _symmetric(list(spec.generators))
    exact = all(g.is_integral for g in gens)
    eye = np.eye(2, dtype=np.int64 if exact else float)
    # gamma -> gamma h multiplies each row of gamma by h
    maps = [np.kron(eye, g.as_int_array() if exact else g.as_array()) for g in gens]
    start = np.array([1, 0, 0, 1], dtype=np.int64 if exact else float)
    res, stabilized, _ = _search(start, maps, frob_bound, opts, exact)
    return res.states.astype(float), res.depth, stabilized


def count_at_radius(orbit: OrbitSet, R: float) -> int:
    orbit.require_stabilized()
    return orbit.count(R)


# ---------------------------------------------------------------------------
# SL2(Z) oracles


def primitive_points_array(R: float) -> np.ndarray:
    """All (x, y) in Z^2 with gcd(|x|, |y|) = 1 and x^2 + y^2 <= R^2, brute force."""
    if R < 1:
        raise ValueError("R must be >= 1")
    m = _floor_square(R)
    r = math.isqrt(m)
    chunks = []
    step = max(1, 4_000_000 // (2 * r + 1))
    ys = np.arange(-r, r + 1, dtype=np.int64)
    for x0 in range(-r, r + 1, step):
        xs = np.arange(x0, min(x0 + step, r + 1), dtype=np.int64)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        mask = (X * X + Y * Y <= m) & (np.gcd(X, Y) == 1)
        chunks.append(np.stack([X[mask], Y[mask]], axis=1))
    return np.concatenate(chunks)


def primitive_points_oracle(R: float) -> set[tuple[int, int]]:
    return {(int(x), int(y)) for x, y in primitive_points_array(R)}


def oracle_orbit(R_cap: float) -> OrbitSet:
    """The SL2(Z) orbit of e1 inside the cap, produced by the gcd oracle."""
    pts = primitive_points_array(R_cap)
    return OrbitSet(
        base_vector=PlaneVector(1, 0),
        radius_cap=float(R_cap),
        points=pts.astype(float),
        depth=np.full(len(pts), -1, dtype=np.int32),
        depth_used=0,
        stabilized=True,
        quantum=1e-9 * R_cap,
        exact_points=pts,
        lattice="sl2z",
        provenance="gcd-oracle",
    )


def _isqrt_array(m: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(m.astype(float))).astype(np.int64)
    r -= (r * r > m).astype(np.int64)
    r += ((r + 1) * (r + 1) <= m).astype(np.int64)
    return r


def _mobius_sieve(n: int) -> np.ndarray:
    mu = np.ones(n + 1, dtype=np.int64)
    is_comp = np.zeros(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if not is_comp[p]:
            is_comp[2 * p::p] = True
            mu[p::p] *= -1
            mu[p * p::p * p] = 0
    mu[0] = 0
    return mu


def _disk_count(m: int) -> int:
    """#{(x, y) != 0 : x^2 + y^2 <= m}"""
    if m < 1:
        return 0
    r = math.isqrt(m)
    xs = np.arange(-r, r + 1, dtype=np.int64)
    return int(np.sum(2 * _isqrt_array(m - xs * xs) + 1)) - 1


def primitive_count(R: float) -> int:
    """Number of primitive integer vectors with norm <= R, by Moebius inversion
    of ordinary disk counts: sum_d mu(d) L(R/d)."""
    if R < 1:
        return 0
    m = _floor_square(R)
    dmax = math.isqrt(m)
    mu = _mobius_sieve(dmax)
    return int(sum(int(mu[d]) * _disk_count(m // (d * d)) for d in range(1, dmax + 1) if mu[d]))


@dataclass
class PrimitiveOrbit:
    """SL2(Z) e1 inside a cap, evaluated by streaming over rows rather than
    stored.  Offers the radial sums needed for Eisenstein values."""

    radius_cap: float
    workers: int = 1
    block: int = 2_000_000
    lattice: str = "sl2z"
    stabilized: bool = True

    def count(self, R: float) -> int:
        if R > self.radius_cap * (1 + 1e-12):
            raise CapExceededError(f"R={R} exceeds cap {self.radius_cap}")
        return primitive_count(R)

    def growth_constant(self) -> float:
        grid = np.linspace(0.5 * self.radius_cap, self.radius_cap, 9)
        return max(primitive_count(R) / R**2 for R in grid) * (1 + 2.0 / math.sqrt(self.radius_cap))

    def _row_blocks(self):
        m = _floor_square(self.radius_cap)
        r = math.isqrt(m)
        xs = np.arange(1, r + 1, dtype=np.int64)
        lengths = _isqrt_array(m - xs * xs) + 1  # y = 0..ymax
        cum = np.cumsum(lengths)
        start = 0
        while start < len(xs):
            stop = int(np.searchsorted(cum, (cum[start - 1] if start else 0) + self.block, side="right"))
            stop = max(stop, start + 1)
            yield xs[start:stop], lengths[start:stop]
            start = stop

    @staticmethod
    def _block_sums(xs, lengths, s_values):
        X = np.repeat(xs, lengths)
        offsets = np.cumsum(lengths) - lengths
        Y = np.arange(len(X), dtype=np.int64) - np.repeat(offsets, lengths)
        keep = np.gcd(X, Y) == 1
        logn2 = np.log((X[keep] * X[keep] + Y[keep] * Y[keep]).astype(float))
        return np.array([np.sum(np.exp(-s * logn2)) for s in s_values])

    def power_sums(self, s_values) -> np.ndarray:
        """sum over primitive |p| <= cap of |p|^{-2s}; the quadrant x > 0, y >= 0
        is a fundamental set for the rotation by pi/2, hence the factor 4."""
        s_values = np.atleast_1d(np.asarray(s_values, dtype=complex))
        blocks = list(self._row_blocks())
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                parts = list(ex.map(lambda b: self._block_sums(b[0], b[1], s_values), blocks))
        else:
            parts = [self._block_sums(b[0], b[1], s_values) for b in blocks]
        # fixed-order reduction keeps results independent of the worker count
        return 4.0 * np.sum(np.array(parts), axis=0)


def totients(n: int) -> np.ndarray:
    """Euler phi(0..n) by sieve."""
    phi = np.arange(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


# ---------------------------------------------------------------------------
# binary cache

MAGIC = b"ORB1"


def cache_key(lattice_id: str, v: PlaneVector, R_cap: float, opts: EnumOptions) -> str:
    blob = json.dumps([lattice_id, [float(v.x), float(v.y)], float(R_cap), opts.digest()]).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def write_orbit(path, orbit: OrbitSet, options_digest: str = "") -> Path:
    path = Path(path)
    header = json.dumps({
        "lattice": orbit.lattice,
        "v": [float(orbit.base_vector.x), float(orbit.base_vector.y)],
        "v_int": isinstance(orbit.base_vector.x, int) and isinstance(orbit.base_vector.y, int),
        "R_cap": orbit.radius_cap,
        "depth_used": orbit.depth_used,
        "stabilized": orbit.stabilized,
        "quantum": orbit.quantum,
        "exact": orbit.exact_points is not None,
        "provenance": orbit.provenance,
        "options": options_digest,
        "n": len(orbit),
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(orbit.points.astype("<f8").tobytes())
        fh.write(orbit.depth.astype("<i4").tobytes())
    return path


def read_orbit(path) -> OrbitSet:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an ORB1 orbit cache")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8:8 + hlen])
    n = header["n"]
    off = 8 + hlen
    pts = np.frombuffer(data, dtype="<f8", count=2 * n, offset=off).reshape(n, 2).astype(float)
    depth = np.frombuffer(data, dtype="<i4", count=n, offset=off + 16 * n).astype(np.int32)
    vx, vy = header["v"]
    v = PlaneVector(int(vx), int(vy)) if header["v_int"] else PlaneVector(vx, vy)
    return OrbitSet(
        base_vector=v,
        radius_cap=header["R_cap"],
        points=pts,
        depth=depth,
        depth_used=header["depth_used"],
        stabilized=header["stabilized"],
        quantum=header["quantum"],
        exact_points=np.rint(pts).astype(np.int64) if header["exact"] else None,
        lattice=header["lattice"],
        provenance=header["provenance"],
    )
