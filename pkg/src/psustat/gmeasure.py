"""Countably supported complex measures on PSU(1,1)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ResourceError
from .group import ELEMENT_CAP, MERGE_TOL, GeneratorSet, GroupBall, MapIndex
from .moebius import MoebiusMap, compose, distance_to_origin

PROB_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GroupMeasure:
    """Finite list of (map, complex weight) atoms.

    Duplicate maps are merged on construction (tolerance ``MERGE_TOL``)
    and zero weights are dropped. Atom order is preserved from first
    occurrence; it is the default enumeration used by
    :func:`weight_decay_rate`.
    """

    atoms: tuple
    label: str = ""

    def __post_init__(self):
        atoms = self.atoms
        if not isinstance(atoms, _Merged):
            atoms = _merge(atoms)
        object.__setattr__(self, "atoms", tuple(atoms))

    # -- constructors -------------------------------------------------------

    @classmethod
    def dirac(cls, g: MoebiusMap, weight: complex = 1.0, label: str = "") -> "GroupMeasure":
        return cls(((g, complex(weight)),), label)

    @classmethod
    def uniform(cls, gens: GeneratorSet | Sequence[MoebiusMap], label: str = "") -> "GroupMeasure":
        """Uniform probability on the alphabet of ``gens`` (inverses included if symmetrized)."""
        letters = gens.alphabet if isinstance(gens, GeneratorSet) else list(gens)
        w = 1.0 / len(letters)
        lab = label or (f"uniform-on-generators[{gens.label}]" if isinstance(gens, GeneratorSet) else "uniform")
        return cls(tuple((g, complex(w)) for g in letters), lab)

    @classmethod
    def from_json(cls, obj: dict) -> "GroupMeasure":
        unknown = set(obj) - {"atoms", "label"}
        if unknown:
            raise ConfigurationError(f"unknown measure keys: {sorted(unknown)}")
        atoms = []
        for atom in obj["atoms"]:
            g = MoebiusMap.from_json(atom)
            atoms.append((g, complex(*atom["w"])))
        return cls(tuple(atoms), str(obj.get("label", "")))

    @classmethod
    def load(cls, path) -> "GroupMeasure":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "atoms": [dict(g.to_json(), w=[w.real, w.imag]) for g, w in self.atoms],
        }

    # -- queries ------------------------------------------------------------

    def __len__(self):
        return len(self.atoms)

    @property
    def maps(self) -> list[MoebiusMap]:
        return [g for g, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=complex)

    def total_mass(self) -> complex:
        return complex(self.weights.sum()) if self.atoms else 0j

    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum()) if self.atoms else 0.0

    def is_probability(self, tol: float = PROB_TOL) -> bool:
        w = self.weights
        if w.size == 0:
            return False
        return bool(np.all(np.abs(w.imag) <= tol) and np.all(w.real >= -tol)
                    and abs(w.real.sum() - 1.0) <= tol)

    def weight_of(self, g: MoebiusMap, tol: float = MERGE_TOL) -> complex:
        for h, w in self.atoms:
            if g.isclose(h, tol):
                return w
        return 0j

    def scaled(self, c: complex) -> "GroupMeasure":
        return GroupMeasure(tuple((g, c * w) for g, w in self.atoms), self.label)

    def __add__(self, other: "GroupMeasure") -> "GroupMeasure":
        return GroupMeasure(self.atoms + other.atoms, self.label or other.label)

    def __rmul__(self, c):
        return self.scaled(c)


class _Merged(tuple):
    """Atom tuple already merged; skips the second pass in the constructor."""


def _merge(atoms: Iterable, cap: int = ELEMENT_CAP) -> tuple:
    index = MapIndex(MERGE_TOL)
    weights: list[complex] = []
    for g, w in atoms:
        if not isinstance(g, MoebiusMap):
            raise DomainError("atoms must be (MoebiusMap, weight) pairs")
        idx, new = index.find_or_add(g)
        if new:
            if len(index) > cap:
                raise ResourceError(f"measure support exceeds cap {cap}")
            weights.append(complex(w))
        else:
            weights[idx] += complex(w)
    return _Merged((g, w) for g, w in zip(index.maps, weights) if w != 0)


def delta_identity() -> GroupMeasure:
    return GroupMeasure.dirac(MoebiusMap.identity(), 1.0, "delta_id")


def convolve(mu: GroupMeasure, nu: GroupMeasure, cap: int = ELEMENT_CAP) -> GroupMeasure:
    """mu * nu: atoms (g h, mu(g) nu(h)), merged by canonical map."""
    if len(mu) * len(nu) > 50 * cap:
        raise ResourceError("convolution product list too large")
    prods = tuple((compose(g, h), w * v) for g, w in mu.atoms for h, v in nu.atoms)
    return GroupMeasure(_merge(prods, cap), mu.label)


def convolution_power(mu: GroupMeasure, n: int, cap: int = ELEMENT_CAP) -> GroupMeasure:
    if n < 0:
        raise ConfigurationError("convolution power requires n >= 0")
    out = delta_identity()
    for _ in range(n):
        out = convolve(out, mu, cap)
    return GroupMeasure(_Merged(out.atoms), f"{mu.label}^*{n}")


def first_moment(mu: GroupMeasure) -> float:
    """Sum of |mu(g)| d(0, g.0)."""
    return float(sum(abs(w) * distance_to_origin(g) for g, w in mu.atoms))


def blaschke_sum(mu: GroupMeasure) -> float:
    """Sum over the support of 1 - |g.0|."""
    # 1 - |b|/|a| = 1 / (|a| (|a| + |b|)) avoids cancellation near the circle.
    return float(sum(1.0 / (abs(g.a) * (abs(g.a) + abs(g.b))) for g, _ in mu.atoms))


def ordering_from_ball(ball: GroupBall) -> list[MoebiusMap]:
    return ball.maps


def weight_decay_rate(mu: GroupMeasure, ordering: Sequence[MoebiusMap] | None = None) -> float:
    """Finite-truncation estimate of limsup |mu(g_n)|^{1/n}.

    ``ordering`` enumerates the support (n starts at 1); maps absent from
    ``mu`` weigh 0. The estimate is the maximum of |mu(g_n)|^{1/n} over the
    trailing half of the enumeration. Default: the atom order of ``mu``.
    """
    if len(mu) == 0:
        raise DomainError("weight decay rate of the empty measure")
    if ordering is None:
        w = np.abs(mu.weights)
    else:
        index = MapIndex(MERGE_TOL)
        for g in mu.maps:
            index.add(g)
        lookup = np.abs(mu.weights)
        w = np.zeros(len(ordering))
        for i, g in enumerate(ordering):
            j = index.find(g)
            if j is not None:
                w[i] = lookup[j]
    n = np.arange(1, len(w) + 1)
    start = len(w) // 2
    tail_w, tail_n = w[start:], n[start:]
    with np.errstate(divide="ignore"):
        vals = np.where(tail_w > 0, np.exp(np.log(tail_w) / tail_n), 0.0)
    return float(vals.max())
