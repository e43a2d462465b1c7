"""Generator presets and breadth-first enumeration of group balls."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigurationError, ResourceError
from .moebius import INF, MoebiusMap, apply, classify, compose, inverse

MERGE_TOL = 1e-9
ELEMENT_CAP = 10**6


class MapIndex:
    """Tolerance-aware lookup of maps keyed by their canonical (a, b) pair.

    Two maps are merged when every coordinate of (a, b) or of (-a, -b)
    agrees within ``tol``. Coordinates are bucketed on a grid of width
    ``8 * tol`` and a query visits only the buckets a ``tol``-box can reach.
    """

    def __init__(self, tol: float = MERGE_TOL):
        self.tol = tol
        self.cell = 8.0 * tol
        self._buckets: dict[tuple, list[int]] = {}
        self.maps: list[MoebiusMap] = []

    def __len__(self):
        return len(self.maps)

    def _coords(self, a: complex, b: complex):
        return (a.real, a.imag, b.real, b.imag)

    def _key(self, coords):
        return tuple(math.floor(x / self.cell) for x in coords)

    def _candidate_keys(self, coords):
        opts = []
        for x in coords:
            lo = math.floor((x - self.tol) / self.cell)
            hi = math.floor((x + self.tol) / self.cell)
            opts.append((lo,) if lo == hi else (lo, hi))
        return itertools.product(*opts)

    def find(self, g: MoebiusMap) -> int | None:
        for sign in (1.0, -1.0):
            coords = self._coords(sign * g.a, sign * g.b)
            for key in self._candidate_keys(coords):
                for idx in self._buckets.get(key, ()):
                    if g.isclose(self.maps[idx], self.tol):
                        return idx
        return None

    def add(self, g: MoebiusMap) -> int:
        """Insert g (assumed absent) and return its index."""
        idx = len(self.maps)
        self.maps.append(g)
        self._buckets.setdefault(self._key(self._coords(g.a, g.b)), []).append(idx)
        return idx

    def find_or_add(self, g: MoebiusMap) -> tuple[int, bool]:
        idx = self.find(g)
        if idx is not None:
            return idx, False
        return self.add(g), True


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple
    symmetrized: bool = True
    label: str = ""

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ConfigurationError("generator set must be non-empty")
        idx = MapIndex()
        for g in gens:
            if idx.find(g) is not None:
                raise ConfigurationError("generators must be pairwise distinct")
            idx.add(g)
        object.__setattr__(self, "generators", gens)

    @property
    def alphabet(self) -> list[MoebiusMap]:
        """Letters used in words: the generators, then their inverses if symmetrized."""
        gens = list(self.generators)
        if self.symmetrized:
            gens += [inverse(g) for g in self.generators]
        return gens

    def inverse_letter(self, i: int) -> int | None:
        if not self.symmetrized:
            return None
        k = len(self.generators)
        return i + k if i < k else i - k

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "symmetrized": self.symmetrized,
            "generators": [g.to_json() for g in self.generators],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorSet":
        unknown = set(obj) - {"label", "symmetrized", "generators"}
        if unknown:
            raise ConfigurationError(f"unknown generator-set keys: {sorted(unknown)}")
        return cls(
            tuple(MoebiusMap.from_json(g) for g in obj["generators"]),
            bool(obj.get("symmetrized", True)),
            str(obj.get("label", "")),
        )

    @classmethod
    def load(cls, path) -> "GeneratorSet":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GroupBall:
    elements: tuple  # of (word, MoebiusMap)
    radius: int
    generators: GeneratorSet | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.elements)

    @property
    def maps(self) -> list[MoebiusMap]:
        return [g for _, g in self.elements]

    @property
    def words(self) -> list[tuple]:
        return [w for w, _ in self.elements]


# -- ping-pong -----------------------------------------------------------------

def isometric_disk(g: MoebiusMap):
    """Disk {|-conj(b) z + a| < 1}: centre g(INF), radius 1/|b|.

    g maps the exterior of its own isometric circle onto this disk.
    """
    if g.b == 0:
        return None
    return (g.a / g.b.conjugate(), 1.0 / abs(g.b))


def ping_pong_disjoint(gens: GeneratorSet) -> bool:
    """True when the isometric disks of all letters are pairwise disjoint."""
    disks = []
    for g in gens.alphabet:
        d = isometric_disk(g)
        if d is None:
            return False
        disks.append(d)
    for (c1, r1), (c2, r2) in itertools.combinations(disks, 2):
        if abs(c1 - c2) <= r1 + r2:
            return False
    return True


# -- presets -------------------------------------------------------------------

PRESETS = ("single-hyperbolic", "rotation", "free-hyperbolic", "schottky")


def preset(name: str, **params) -> GeneratorSet:
    """Build a named generator set.

    single-hyperbolic(ell): one translation of length ell along the real axis.
    rotation(theta): z -> e^{i theta} z.
    free-hyperbolic(ell, angle): two translations of length ell whose axes
        meet at ``angle``; ping-pong is verified.
    schottky(ell, n_generators): n translations with axes equally spaced by
        pi/n; ping-pong is verified.
    """
    if name == "single-hyperbolic":
        ell = float(params.pop("ell", 2 * math.acosh(math.sqrt(2))))
        sym = bool(params.pop("symmetrized", False))
        _no_extra(name, params)
        if not ell > 0:
            raise ConfigurationError("ell must be positive")
        return GeneratorSet((MoebiusMap.hyperbolic(ell),), sym, f"single-hyperbolic(ell={ell!r})")
    if name == "rotation":
        theta = float(params.pop("theta", math.pi / 2))
        sym = bool(params.pop("symmetrized", False))
        _no_extra(name, params)
        if not 0 < theta < 2 * math.pi:
            raise ConfigurationError("theta must lie in (0, 2 pi)")
        return GeneratorSet((MoebiusMap.rotation(theta),), sym, f"rotation(theta={theta!r})")
    if name == "free-hyperbolic":
        ell = float(params.pop("ell", 3.0))
        angle = float(params.pop("angle", math.pi / 2))
        _no_extra(name, params)
        if not ell > 0:
            raise ConfigurationError("ell must be positive")
        if not 0 < angle < math.pi:
            raise ConfigurationError("axes angle must lie in (0, pi)")
        gens = GeneratorSet(
            (MoebiusMap.hyperbolic(ell), MoebiusMap.hyperbolic(ell, angle)),
            True,
            f"free-hyperbolic(ell={ell!r}, angle={angle!r})",
        )
        _require_ping_pong(gens)
        return gens
    if name == "schottky":
        ell = float(params.pop("ell", 3.0))
        n = int(params.pop("n_generators", 2))
        _no_extra(name, params)
        if not ell > 0:
            raise ConfigurationError("ell must be positive")
        if n < 1:
            raise ConfigurationError("n_generators must be >= 1")
        gens = GeneratorSet(
            tuple(MoebiusMap.hyperbolic(ell, j * math.pi / n) for j in range(n)),
            True,
            f"schottky(ell={ell!r}, n_generators={n})",
        )
        _require_ping_pong(gens)
        return gens
    raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESETS}")


def _no_extra(name, params):
    if params:
        raise ConfigurationError(f"unknown parameters for preset {name!r}: {sorted(params)}")


def _require_ping_pong(gens: GeneratorSet):
    if not ping_pong_disjoint(gens):
        raise ConfigurationError(
            f"{gens.label}: ping-pong disks overlap; configuration is not certified discrete"
        )


# -- enumeration ---------------------------------------------------------------

def enumerate_ball(gens: GeneratorSet, radius: int, cap: int = ELEMENT_CAP,
                   tol: float = MERGE_TOL) -> GroupBall:
    """All products of at most ``radius`` letters, duplicates merged.

    Elements are ordered by word length, then lexicographically by word;
    a merged element keeps its first (shortest, lexicographically least)
    word.
    """
    if radius < 0:
        raise ConfigurationError("radius must be >= 0")
    letters = gens.alphabet
    index = MapIndex(tol)
    index.add(MoebiusMap.identity())
    elements = [((), index.maps[0])]
    frontier = [((), index.maps[0])]
    for _ in range(radius):
        nxt = []
        for word, g in frontier:
            back = gens.inverse_letter(word[-1]) if word else None
            for i, x in enumerate(letters):
                if i == back:
                    continue
                h = compose(g, x)
                _, new = index.find_or_add(h)
                if new:
                    if len(index) > cap:
                        raise ResourceError(f"group ball exceeds element cap {cap}")
                    item = (word + (i,), h)
                    nxt.append(item)
                    elements.append(item)
        frontier = nxt
        if not frontier:
            break
    return GroupBall(tuple(elements), radius, gens)


def orbit_points(ball: GroupBall | Iterable[MoebiusMap], base=0j) -> list:
    maps = ball.maps if isinstance(ball, GroupBall) else list(ball)
    return [apply(g, base) for g in maps]


def free_group_ball_size(rank: int, radius: int) -> int:
    """Number of reduced words of length <= radius in a free group."""
    if radius == 0:
        return 1
    m = 2 * rank
    return 1 + sum(m * (m - 1) ** (k - 1) for k in range(1, radius + 1))


def word_to_map(gens: GeneratorSet, word: Sequence[int]) -> MoebiusMap:
    letters = gens.alphabet
    g = MoebiusMap.identity()
    for i in word:
        g = compose(g, letters[i])
    return g


def translation_lengths(gens: GeneratorSet) -> list[float]:
    return [classify(g).translation_length for g in gens.generators]


__all__ = [
    "INF", "GeneratorSet", "GroupBall", "MapIndex", "PRESETS", "preset",
    "enumerate_ball", "orbit_points", "free_group_ball_size", "ping_pong_disjoint",
    "isometric_disk", "word_to_map", "translation_lengths",
]
