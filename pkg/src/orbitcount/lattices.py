"""Lattice presets: SL2(Z), the Hecke triangle groups H(q), and custom
generator sets.

Covolumes are stored constants (hyperbolic area of a fundamental domain);
the test-suite checks them against quadrature and Monte Carlo.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field, replace

from .geometry import IDENTITY, MINUS_IDENTITY, Mat2, unipotent


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class CuspData:
    normalizer: Mat2
    width: float
    # word in the generator labels equal to s^{-1}-conjugated translation by `width`
    witness: str


@dataclass(frozen=True)
class LatticeSpec:
    name: str
    generators: tuple[Mat2, ...]
    labels: tuple[str, ...]
    has_minus_id: bool
    covolume: float
    cusps: tuple[CuspData, ...]
    minus_id_word: str | None = None
    covolume_verified: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.generators) != len(self.labels):
            raise LatticeError("one label per generator required")
        if not self.covolume > 0:
            raise LatticeError("covolume must be positive")
        if self.has_minus_id:
            if self.minus_id_word is None:
                raise LatticeError("-Id membership needs a witness word")
            if not self.word(self.minus_id_word).allclose(MINUS_IDENTITY):
                raise LatticeError(f"witness {self.minus_id_word!r} is not -Id")
        for cusp in self.cusps:
            w = self.word(cusp.witness)
            conj = cusp.normalizer.inv() @ w @ cusp.normalizer
            if not conj.allclose(unipotent(float(cusp.width)), 1e-9):
                raise LatticeError(f"cusp witness {cusp.witness!r} is not a translation by {cusp.width}")

    @property
    def is_integral(self) -> bool:
        return all(g.is_integral for g in self.generators)

    def generator(self, label: str) -> Mat2:
        return self.generators[self.labels.index(label)]

    def word(self, word: str) -> Mat2:
        """Evaluate a word such as "ST" or "T^-1 S"; a trailing ' marks an inverse."""
        out = IDENTITY
        for label, inverse in _parse_word(word, self.labels):
            g = self.generator(label)
            out = out @ (g.inv() if inverse else g)
        return out

    def symmetric_generators(self) -> list[Mat2]:
        """Generators together with their inverses, without duplicates."""
        out: list[Mat2] = []
        for g in self.generators:
            for h in (g, g.inv()):
                if not any(h.allclose(k, 1e-14) for k in out):
                    out.append(h)
        return out


def _parse_word(word: str, labels) -> list[tuple[str, bool]]:
    out = []
    pos = 0
    word = word.replace(" ", "")
    ordered = sorted(labels, key=len, reverse=True)
    while pos < len(word):
        for lab in ordered:
            if word.startswith(lab, pos):
                pos += len(lab)
                inv = False
                if word.startswith("'", pos):
                    inv, pos = True, pos + 1
                out.append((lab, inv))
                break
        else:
            raise LatticeError(f"cannot parse word {word!r} at position {pos}")
    return out


S_MATRIX = Mat2(0, -1, 1, 0)


def preset_sl2z() -> LatticeSpec:
    return LatticeSpec(
        name="sl2z",
        generators=(S_MATRIX, unipotent(1)),
        labels=("S", "T"),
        has_minus_id=True,
        covolume=math.pi / 3.0,
        cusps=(CuspData(IDENTITY, 1, "T"),),
        minus_id_word="SS",
    )


def preset_hecke(q: int) -> LatticeSpec:
    if int(q) != q or q < 3:
        raise LatticeError(f"Hecke group needs integer q >= 3, got {q}")
    q = int(q)
    if q == 3:
        spec = preset_sl2z()
        return spec
    lam = 2.0 * math.cos(math.pi / q)
    return LatticeSpec(
        name=f"hecke:{q}",
        generators=(S_MATRIX, unipotent(lam)),
        labels=("S", "T"),
        has_minus_id=True,
        covolume=math.pi * (1.0 - 2.0 / q),
        cusps=(CuspData(IDENTITY, lam, "T"),),
        minus_id_word="SS",
        meta={"q": q},
    )


def custom_lattice(name: str, generators, labels=None, covolume: float | None = None,
                   cusps=(), minus_id_word: str | None = None) -> LatticeSpec:
    """A user lattice.  Without a trusted covolume the lattice is flagged
    unverified and absolute constants should not be read off it."""
    generators = tuple(generators)
    labels = tuple(labels) if labels is not None else tuple(f"g{i}" for i in range(len(generators)))
    return LatticeSpec(
        name=name,
        generators=generators,
        labels=labels,
        has_minus_id=minus_id_word is not None,
        covolume=1.0 if covolume is None else float(covolume),
        cusps=tuple(cusps),
        minus_id_word=minus_id_word,
        covolume_verified=False,
    )


def extend_with_minus_id(spec: LatticeSpec) -> LatticeSpec:
    """Adjoin -Id.  The image in PSL2 is unchanged, hence so is the covolume."""
    if spec.has_minus_id:
        warnings.warn(f"{spec.name} already contains -Id; returning it unchanged", stacklevel=2)
        return spec
    label = "M"
    while label in spec.labels:
        label += "M"
    return replace(
        spec,
        name=f"{spec.name}+-id",
        generators=spec.generators + (MINUS_IDENTITY,),
        labels=spec.labels + (label,),
        has_minus_id=True,
        minus_id_word=label,
    )


def covolume(spec: LatticeSpec) -> float:
    return spec.covolume


def quadratic_constant(spec: LatticeSpec, cusp: int = 0) -> float:
    """Growth constant of |Gamma v ∩ B(0, R)| / R^2 for v the normalised cusp
    vector: (2 if -Id is in the group else 1) * width / covol.

    The width enters because bottom rows modulo the stabilizer are counted
    once per translation step; for SL2(Z) this is 6/pi."""
    width = float(spec.cusps[cusp].width) if spec.cusps else 1.0
    return (2.0 if spec.has_minus_id else 1.0) * width / spec.covolume


_HECKE = re.compile(r"^hecke:(\d+)$")


def resolve_lattice(lattice_id: str) -> LatticeSpec:
    lattice_id = lattice_id.strip().lower()
    if lattice_id == "sl2z":
        return preset_sl2z()
    m = _HECKE.match(lattice_id)
    if m:
        return preset_hecke(int(m.group(1)))
    raise LatticeError(f"unknown lattice id {lattice_id!r} (expected 'sl2z' or 'hecke:q')")
