"""Möbius algebra for PSU(1,1) acting on the Riemann sphere.

A map is stored as the pair (a, b) with |a|^2 - |b|^2 = 1 and acts by

    z -> (a z + b) / (conj(b) z + conj(a)).

The point at infinity is the singleton ``INF``; it is never encoded as a
large float. Scalar functions accept ``complex`` or ``INF``. Functions that
only make sense for finite points (``derivative``, ``busemann``, ...) also
accept numpy arrays and are vectorised over them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

POLE_TOL = 1e-12
NORM_TOL = 1e-12


class Infinity:
    """The point at infinity of the extended complex plane."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()

ExtendedComplex = Union[complex, Infinity]


def is_inf(z) -> bool:
    return z is INF


def _canonical_sign(a: complex, b: complex) -> tuple[complex, complex]:
    # Re a >= 0, tie-break Im a >= 0, then Re b >= 0.
    if a.real > 0:
        return a, b
    if a.real < 0:
        return -a, -b
    if a.imag > 0:
        return a, b
    if a.imag < 0:
        return -a, -b
    if b.real >= 0:
        return a, b
    return -a, -b


@dataclass(frozen=True)
class MoebiusMap:
    """Element of PSU(1,1) in canonical normalized form.

    Construction renormalizes so that |a|^2 - |b|^2 = 1 and picks the sign
    representative with Re a >= 0, so (a, b) and (-a, -b) build equal maps.
    """

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        if not all(math.isfinite(x) for x in (a.real, a.imag, b.real, b.imag)):
            raise DomainError(f"non-finite coefficients ({a}, {b})")
        det = abs(a) ** 2 - abs(b) ** 2
        # |a|^2 - |b|^2 carries an absolute rounding error of order eps |a|^2,
        # so for long products it cannot be checked; reproject keeping b.
        roundoff = 1e-14 * abs(a) ** 2
        if abs(det - 1.0) <= 1e-15:
            pass
        elif abs(det - 1.0) <= roundoff:
            a = a / abs(a) * math.sqrt(1.0 + abs(b) ** 2)
        elif det <= 0:
            raise DomainError(f"|a|^2 - |b|^2 = {det} is not positive; not in PSU(1,1)")
        else:
            s = math.sqrt(det)
            a, b = a / s, b / s
        a, b = _canonical_sign(a, b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, theta: float) -> "MoebiusMap":
        """z -> e^{i theta} z."""
        return cls(cmath.exp(0.5j * theta), 0.0)

    @classmethod
    def hyperbolic(cls, length: float, axis_angle: float = 0.0) -> "MoebiusMap":
        """Translation by ``length`` along the diameter at ``axis_angle``.

        The attracting fixed point is e^{i axis_angle}.
        """
        h = cls(math.cosh(length / 2), math.sinh(length / 2))
        if axis_angle == 0.0:
            return h
        r = cls.rotation(axis_angle)
        return compose(compose(r, h), inverse(r))

    @classmethod
    def from_json(cls, obj: dict) -> "MoebiusMap":
        a = complex(*obj["a"])
        b = complex(*obj["b"])
        return cls(a, b)

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "b": [self.b.real, self.b.imag]}

    # -- conveniences -------------------------------------------------------

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def inv(self) -> "MoebiusMap":
        return inverse(self)

    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, b], [b.conjugate(), a.conjugate()]])

    def determinant_defect(self) -> float:
        return abs(abs(self.a) ** 2 - abs(self.b) ** 2 - 1.0)

    def isclose(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Equality of maps up to ``tol`` on the (a, b) pair, either sign."""
        d_plus = max(abs(self.a - other.a), abs(self.b - other.b))
        d_minus = max(abs(self.a + other.a), abs(self.b + other.b))
        return min(d_plus, d_minus) <= tol


def compose(g: MoebiusMap, h: MoebiusMap) -> MoebiusMap:
    """The map z -> g(h(z)), via the matrix product."""
    a = g.a * h.a + g.b * h.b.conjugate()
    b = g.a * h.b + g.b * h.a.conjugate()
    return MoebiusMap(a, b)


def inverse(g: MoebiusMap) -> MoebiusMap:
    return MoebiusMap(g.a.conjugate(), -g.b)


def apply(g: MoebiusMap, z):
    """Evaluate g at z.

    For scalars the pole -conj(a)/conj(b) (within ``POLE_TOL``) maps to INF and
    INF maps to a/conj(b). Arrays are evaluated elementwise and must not
    contain the pole.
    """
    a, b = g.a, g.b
    if isinstance(z, np.ndarray):
        return (a * z + b) / (b.conjugate() * z + a.conjugate())
    if z is INF:
        return INF if b == 0 else a / b.conjugate()
    z = complex(z)
    den = b.conjugate() * z + a.conjugate()
    if abs(den) <= POLE_TOL * abs(b):
        return INF
    return (a * z + b) / den


def _check_not_pole(g: MoebiusMap, z):
    if z is INF:
        raise DomainError("derivative is not defined at INF")
    den = g.b.conjugate() * z + g.a.conjugate()
    pole_hit = np.abs(den) <= POLE_TOL * abs(g.b)
    if np.any(pole_hit):
        raise DomainError("point coincides with the pole of the map")
    return den


def derivative(g: MoebiusMap, z):
    """g'(z) = 1 / (conj(b) z + conj(a))^2."""
    den = _check_not_pole(g, z)
    return 1.0 / den**2


def pole_image(g: MoebiusMap) -> ExtendedComplex:
    """g(INF) = a / conj(b), or INF for b = 0."""
    return apply(g, INF)


def pole(g: MoebiusMap) -> ExtendedComplex:
    """The point g sends to INF, namely g^{-1}(INF)."""
    return pole_image(inverse(g))


def busemann(z, xi):
    """log((1 - |z|^2) / |z - xi|^2) for |z| < 1 and |xi| = 1."""
    z = np.asarray(z, dtype=complex) if not np.isscalar(z) else complex(z)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("busemann requires |z| < 1")
    if np.any(np.abs(np.abs(xi) - 1.0) > 1e-12):
        raise DomainError("busemann requires |xi| = 1")
    return np.log1p(-np.abs(z) ** 2) - 2.0 * np.log(np.abs(z - xi))


def half_log_derivative_pole(g: MoebiusMap, z):
    """(1/2) g''(z) / g'(z) = -1 / (z - g^{-1}(INF))."""
    p = pole(g)
    if p is INF:
        return np.zeros_like(z, dtype=complex) if isinstance(z, np.ndarray) else 0j
    diff = z - p
    if np.any(np.abs(diff) <= POLE_TOL):
        raise DomainError("point coincides with the pole of the map")
    return -1.0 / diff


def hyperbolic_norm(z):
    """Hyperbolic distance d(0, z) = log((1 + |z|) / (1 - |z|))."""
    r = np.abs(z)
    if np.any(r >= 1.0):
        raise DomainError("hyperbolic_norm requires |z| < 1")
    return 2.0 * np.arctanh(r)


def distance_to_origin(g: MoebiusMap) -> float:
    """d(0, g.0) = 2 log(|a| + |b|), free of the cancellation in 1 - |g.0|."""
    return 2.0 * math.log(abs(g.a) + abs(g.b))


@dataclass(frozen=True)
class Classification:
    kind: str  # identity | elliptic | parabolic | hyperbolic
    translation_length: float = 0.0
    fixed_points: tuple = ()


def classify(g: MoebiusMap, tol: float = 1e-9) -> Classification:
    """Trace classification by |Re a|.

    Hyperbolic maps report their translation length 2 arccosh|Re a| and
    their two boundary fixed points, attracting one first.
    """
    a, b = g.a, g.b
    tr = abs(a.real)
    if abs(b) < NORM_TOL and abs(a.imag) < NORM_TOL:
        return Classification("identity")
    if tr < 1.0 - tol:
        return Classification("elliptic")
    bc = b.conjugate()
    if tr <= 1.0 + tol:
        return Classification("parabolic", 0.0, (1j * a.imag / bc,))
    # Fixed points solve conj(b) z^2 - 2i Im(a) z - b = 0.
    root = math.sqrt(max(a.real**2 - 1.0, 0.0))
    z1 = (1j * a.imag + root) / bc
    z2 = (1j * a.imag - root) / bc
    if abs(derivative(g, z1)) > abs(derivative(g, z2)):
        z1, z2 = z2, z1
    return Classification("hyperbolic", 2.0 * math.acosh(tr), (z1, z2))


def random_map(rng: np.random.Generator, max_b: float = 2.0) -> MoebiusMap:
    """A random element with |b| <= max_b, for tests and property runs."""
    b = max_b * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
    phase = cmath.exp(2j * math.pi * rng.uniform())
    a = phase * math.sqrt(1.0 + abs(b) ** 2)
    return MoebiusMap(a, b)


def identity_defects(trials: int = 1000, seed: int = 0, max_b: float = 2.0) -> dict:
    """Maximum defects of the basic Möbius identities over random samples.

    Keys: ``log_derivative`` (log(1-|gz|^2) - log(1-|z|^2) = log|g'(z)|),
    ``cocycle`` (busemann(gz, g xi) = busemann(z, xi) - busemann(g^{-1}0, xi)),
    ``inside_outside`` (conj(g(1/conj z)) = 1/g(z)), ``zero_infinity``
    (g(INF) conj(g(0)) = 1) and ``log_derivative_pole``
    ((1/2) g''/g' = -1/(z - g^{-1}(INF)), against -conj(b)/(conj(b) z + conj(a))).
    """
    rng = np.random.default_rng(seed)
    out = dict.fromkeys(
        ("log_derivative", "cocycle", "inside_outside", "zero_infinity", "log_derivative_pole"), 0.0)
    for _ in range(trials):
        g = random_map(rng, max_b)
        z = 0.95 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        xi = cmath.exp(2j * math.pi * rng.uniform())
        gz = apply(g, z)
        lhs = math.log1p(-abs(gz) ** 2) - math.log1p(-abs(z) ** 2)
        d = abs(lhs - math.log(abs(derivative(g, z))))
        out["log_derivative"] = max(out["log_derivative"], d)
        gxi = apply(g, xi)
        gxi /= abs(gxi)
        d = abs(busemann(gz, gxi) - busemann(z, xi) + busemann(apply(inverse(g), 0j), xi))
        out["cocycle"] = max(out["cocycle"], float(d))
        w = apply(g, 1.0 / z.conjugate())
        d = abs(w.conjugate() - 1.0 / gz) / max(1.0, abs(1.0 / gz))
        out["inside_outside"] = max(out["inside_outside"], d)
        if g.b != 0:
            d = abs(pole_image(g) * apply(g, 0j).conjugate() - 1.0)
            out["zero_infinity"] = max(out["zero_infinity"], d)
        direct = -g.b.conjugate() / (g.b.conjugate() * z + g.a.conjugate())
        d = abs(half_log_derivative_pole(g, z) - direct) / max(1.0, abs(direct))
        out["log_derivative_pole"] = max(out["log_derivative_pole"], d)
    return out
