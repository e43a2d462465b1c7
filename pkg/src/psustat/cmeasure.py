"""Measures on the unit circle in atomic, Fourier-band and grid form.

All three forms use the unit-harmonic-mass convention

    a_k = integral of e^{-ikt} dnu(t),    a_0 = mass,

so a point mass has a_k = e^{-ik theta} for every k and Lebesgue measure
has a_0 = 1 and all other coefficients zero. Grid densities are sampled at
t_j = 2 pi j / M and integrated with the rectangle rule, so their mean is
the mass.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, PreconditionError, ResourceError
from .group import ELEMENT_CAP
from .gmeasure import GroupMeasure
from .moebius import MoebiusMap, inverse

TWO_PI = 2.0 * math.pi
DEFAULT_K = 64
DEFAULT_M = 1024
ANGLE_MERGE_TOL = 1e-12
WEIGHT_PRUNE_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class FourierCoeffs:
    """Band a_k for -K <= k <= K, stored at index k + K."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if v.size % 2 != 1:
            raise ConfigurationError("a band -K..K has an odd number of coefficients")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_dict(cls, coeffs: dict, K: int | None = None) -> "FourierCoeffs":
        K = max(abs(k) for k in coeffs) if K is None else K
        v = np.zeros(2 * K + 1, dtype=complex)
        for k, a in coeffs.items():
            if abs(k) <= K:
                v[k + K] = a
        return cls(v)

    @property
    def K(self) -> int:
        return (self.values.size - 1) // 2

    def __getitem__(self, k: int) -> complex:
        K = self.K
        return complex(self.values[k + K]) if abs(k) <= K else 0j

    @property
    def positive(self) -> np.ndarray:
        """a_0, a_1, ..., a_K."""
        return self.values[self.K:]

    @property
    def negative(self) -> np.ndarray:
        """a_0, a_{-1}, ..., a_{-K}."""
        return self.values[: self.K + 1][::-1]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values - self.values[::-1].conj()) <= tol))

    def resized(self, K: int) -> "FourierCoeffs":
        if K == self.K:
            return self
        out = np.zeros(2 * K + 1, dtype=complex)
        m = min(K, self.K)
        out[K - m: K + m + 1] = self.values[self.K - m: self.K + m + 1]
        return FourierCoeffs(out)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


class CircleMeasure:
    """Common interface of the three representations."""

    kind = ""

    @property
    def mass(self) -> complex:
        return fourier_coeffs(self, 0)[0]

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.mass - 1.0) <= tol

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AtomicMeasure(CircleMeasure):
    angles: np.ndarray
    weights: np.ndarray
    kind: str = field(default="atomic", init=False)

    def __post_init__(self):
        ang = np.mod(np.asarray(self.angles, dtype=float).ravel(), TWO_PI)
        w = np.asarray(self.weights, dtype=complex).ravel()
        if ang.shape != w.shape:
            raise ConfigurationError("angles and weights must have equal length")
        if not (np.all(np.isfinite(ang)) and np.all(np.isfinite(w))):
            raise ConfigurationError("non-finite atom data")
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "weights", w)

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def is_positive(self) -> bool:
        return bool(np.all(np.abs(self.weights.imag) <= 1e-12) and np.all(self.weights.real >= 0))

    def __len__(self):
        return self.angles.size

    def to_json(self) -> dict:
        return {
            "kind": "atomic",
            "angles": self.angles.tolist(),
            "weights": [[w.real, w.imag] for w in self.weights],
        }


@dataclass(frozen=True, eq=False)
class FourierMeasure(CircleMeasure):
    coeffs: FourierCoeffs
    kind: str = field(default="fourier", init=False)

    def is_positive(self) -> bool:
        """Hermitian band; nonnegativity of the density is not checked."""
        return self.coeffs.is_hermitian()

    def to_json(self) -> dict:
        return {
            "kind": "fourier",
            "K": self.coeffs.K,
            "coeffs": [[a.real, a.imag] for a in self.coeffs.values],
        }


@dataclass(frozen=True, eq=False)
class GridMeasure(CircleMeasure):
    density: np.ndarray
    kind: str = field(default="grid", init=False)

    def __post_init__(self):
        d = np.asarray(self.density).ravel()
        d = d.astype(float) if not np.iscomplexobj(d) else d.astype(complex)
        if d.size < 2:
            raise ConfigurationError("grid needs at least two samples")
        if not np.all(np.isfinite(d)):
            raise ConfigurationError("non-finite density samples")
        object.__setattr__(self, "density", d)

    @property
    def M(self) -> int:
        return self.density.size

    @property
    def angles(self) -> np.ndarray:
        return TWO_PI * np.arange(self.M) / self.M

    def is_positive(self) -> bool:
        d = self.density
        return bool(np.all(np.abs(np.imag(d)) <= 1e-12) and np.all(np.real(d) >= 0))

    def to_json(self) -> dict:
        d = self.density
        dens = d.tolist() if not np.iscomplexobj(d) else [[x.real, x.imag] for x in d]
        return {"kind": "grid", "density": dens}


# -- constructors ----------------------------------------------------------------

def lebesgue() -> FourierMeasure:
    return FourierMeasure(FourierCoeffs(np.array([1.0 + 0j])))


def point_mass(theta: float, weight: complex = 1.0) -> AtomicMeasure:
    return AtomicMeasure(np.array([theta]), np.array([weight]))


def atomic(angles: Sequence[float], weights: Sequence[complex] | None = None) -> AtomicMeasure:
    """Atoms at ``angles``; equal weights summing to 1 when ``weights`` is omitted."""
    angles = np.asarray(angles, dtype=float)
    if weights is None:
        weights = np.full(angles.size, 1.0 / angles.size)
    return merge_atoms(AtomicMeasure(angles, weights))


def fourier(coeffs: dict, K: int | None = None) -> FourierMeasure:
    """Fourier-band measure from {k: a_k}."""
    return FourierMeasure(FourierCoeffs.from_dict(coeffs, K))


def grid_from_function(func, M: int = DEFAULT_M) -> GridMeasure:
    t = TWO_PI * np.arange(M) / M
    return GridMeasure(np.asarray(func(t)))


def from_json(obj: dict) -> CircleMeasure:
    kind = obj.get("kind")
    if kind == "atomic":
        _check_keys(obj, {"kind", "angles", "weights"})
        w = [complex(*x) if isinstance(x, (list, tuple)) else complex(x) for x in obj["weights"]]
        return AtomicMeasure(np.array(obj["angles"], dtype=float), np.array(w))
    if kind == "fourier":
        _check_keys(obj, {"kind", "K", "coeffs"})
        vals = np.array([complex(*x) for x in obj["coeffs"]])
        fc = FourierCoeffs(vals)
        if "K" in obj and int(obj["K"]) != fc.K:
            raise ConfigurationError("K does not match the number of coefficients")
        return FourierMeasure(fc)
    if kind == "grid":
        _check_keys(obj, {"kind", "density"})
        d = obj["density"]
        if d and isinstance(d[0], (list, tuple)):
            d = [complex(*x) for x in d]
        return GridMeasure(np.array(d))
    raise ConfigurationError(f"unknown circle-measure kind {kind!r}")


def load(path) -> CircleMeasure:
    return from_json(json.loads(Path(path).read_text()))


def _check_keys(obj, allowed):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigurationError(f"unknown circle-measure keys: {sorted(unknown)}")


def to_csv(nu: CircleMeasure, K: int = DEFAULT_K) -> str:
    """CSV text: grid samples or atoms as (angle, re, im), then the band (k, re, im)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(nu, GridMeasure):
        w.writerow(["angle", "density_re", "density_im"])
        for t, d in zip(nu.angles, nu.density.astype(complex)):
            w.writerow([repr(float(t)), repr(d.real), repr(d.imag)])
    elif isinstance(nu, AtomicMeasure):
        w.writerow(["angle", "weight_re", "weight_im"])
        for t, x in zip(nu.angles, nu.weights):
            w.writerow([repr(float(t)), repr(x.real), repr(x.imag)])
    w.writerow(["k", "a_re", "a_im"])
    fc = fourier_coeffs(nu, K)
    for k in range(-fc.K, fc.K + 1):
        a = fc[k]
        w.writerow([k, repr(a.real), repr(a.imag)])
    return buf.getvalue()


# -- coefficients and conversions ---------------------------------------------------

def fourier_coeffs(nu: CircleMeasure, K: int) -> FourierCoeffs:
    """a_k for |k| <= K."""
    if K < 0:
        raise ConfigurationError("K must be >= 0")
    ks = np.arange(-K, K + 1)
    if isinstance(nu, AtomicMeasure):
        vals = np.exp(-1j * np.outer(ks, nu.angles)) @ nu.weights if len(nu) else np.zeros(ks.size)
        return FourierCoeffs(vals)
    if isinstance(nu, FourierMeasure):
        return nu.coeffs.resized(K)
    if isinstance(nu, GridMeasure):
        c = np.fft.fft(nu.density) / nu.M
        return FourierCoeffs(c[np.mod(ks, nu.M)])
    raise TypeError(f"not a circle measure: {type(nu).__name__}")


def grid_samples(coeffs: FourierCoeffs, M: int) -> np.ndarray:
    """Evaluate sum a_k e^{ikt} at t_j = 2 pi j / M (requires M > 2K)."""
    K = coeffs.K
    if M <= 2 * K:
        raise ConfigurationError("grid too coarse for the band")
    buf = np.zeros(M, dtype=complex)
    buf[np.mod(np.arange(-K, K + 1), M)] = coeffs.values
    vals = np.fft.ifft(buf) * M
    return vals.real if coeffs.is_hermitian() else vals


def to_grid(nu: CircleMeasure, M: int | None = None) -> GridMeasure:
    if isinstance(nu, GridMeasure):
        return nu if M in (None, nu.M) else GridMeasure(_resample(nu.density, TWO_PI * np.arange(M) / M) * 1.0)
    if isinstance(nu, FourierMeasure):
        M = M or _fourier_grid_size(nu.coeffs.K)
        return GridMeasure(grid_samples(nu.coeffs, M))
    raise ConfigurationError("atomic measures have no grid density")


def _fourier_grid_size(K: int) -> int:
    return max(64, 1 << math.ceil(math.log2(8 * max(K, 1))))


def _resample(density: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of grid samples evaluated at angles ``s``."""
    M = density.size
    c = np.fft.fft(density) / M
    k = np.fft.fftfreq(M, 1.0 / M)
    nyq = None
    if M % 2 == 0:
        nyq = c[M // 2]
        keep = k != -(M // 2)
        c, k = c[keep], k[keep]
    scale = np.abs(c).sum()
    sig = np.abs(c) > 1e-17 * scale if scale > 0 else np.zeros(c.shape, bool)
    c, k = c[sig], k[sig]
    out = np.empty(s.shape, dtype=complex)
    step = max(1, 2**20 // max(k.size, 1))
    for i in range(0, s.size, step):
        out[i:i + step] = np.exp(1j * np.outer(s[i:i + step], k)) @ c
    if nyq is not None and nyq != 0:
        out += nyq * np.cos(0.5 * M * s)
    return out.real if not np.iscomplexobj(density) else out


def merge_atoms(nu: AtomicMeasure, tol: float = ANGLE_MERGE_TOL,
                prune: float = WEIGHT_PRUNE_TOL) -> AtomicMeasure:
    """Merge atoms closer than ``tol`` in angle and drop weights below ``prune``."""
    if len(nu) == 0:
        return nu
    order = np.argsort(nu.angles, kind="stable")
    ang, w = nu.angles[order], nu.weights[order]
    new_group = np.concatenate([[True], np.diff(ang) >= tol])
    gid = np.cumsum(new_group) - 1
    if gid[-1] > 0 and ang[0] + TWO_PI - ang[-1] < tol:
        gid[gid == gid[-1]] = 0
    n = gid.max() + 1
    sums = np.zeros(n, dtype=complex)
    np.add.at(sums, gid, w)
    first = np.zeros(n, dtype=float)
    first[gid[::-1]] = ang[::-1]
    keep = np.abs(sums) >= prune
    return AtomicMeasure(first[keep], sums[keep])


# -- dynamics ------------------------------------------------------------------------

def pushforward(g: MoebiusMap, nu: CircleMeasure) -> CircleMeasure:
    """g_* nu in the representation of nu."""
    if isinstance(nu, AtomicMeasure):
        a, b = g.a, g.b
        z = nu.points
        return AtomicMeasure(np.angle((a * z + b) / (b.conjugate() * z + a.conjugate())), nu.weights)
    if isinstance(nu, GridMeasure):
        return GridMeasure(_push_density(g, nu.density))
    if isinstance(nu, FourierMeasure):
        K = nu.coeffs.K
        grid = to_grid(nu, _fourier_grid_size(K))
        return FourierMeasure(fourier_coeffs(GridMeasure(_push_density(g, grid.density)), K))
    raise TypeError(f"not a circle measure: {type(nu).__name__}")


def _push_density(g: MoebiusMap, density: np.ndarray) -> np.ndarray:
    """Pushforward of grid samples: spectral when resolved, conservative otherwise.

    The spectral rule density(g^{-1} xi) |(g^{-1})'(xi)| is exact for band-limited
    input but, once the image is too sharp for the grid, interpolation ringing
    is amplified by the Jacobian and iteration diverges. Such images are redone
    by remapping cell masses through the cumulative distribution, which keeps
    the mass exactly and keeps positive densities positive.
    """
    M = density.size
    t = TWO_PI * np.arange(M) / M
    xi = np.exp(1j * t)
    h = inverse(g)
    den = h.b.conjugate() * xi + h.a.conjugate()
    src = np.angle((h.a * xi + h.b) / den)
    out = _resample(density, src) / np.abs(den) ** 2
    if _resolved(out):
        return out
    return _push_cells(h, density)


def _resolved(density: np.ndarray, tol: float = 1e-6) -> bool:
    c = np.abs(np.fft.fft(density))
    k = np.abs(np.fft.fftfreq(density.size, 1.0 / density.size))
    total = c.sum()
    return total == 0 or c[k > 7 * density.size // 16].sum() <= tol * total


def _push_cells(h: MoebiusMap, density: np.ndarray) -> np.ndarray:
    """Cell-average pushforward under g = h^{-1} with a piecewise-constant source."""
    M = density.size
    step = TWO_PI / M
    edges = TWO_PI * (np.arange(M + 1) - 0.5) / M
    xi = np.exp(1j * edges)
    src = np.angle((h.a * xi + h.b) / (h.b.conjugate() * xi + h.a.conjugate()))
    # h preserves orientation, so every cell's preimage is a positive arc
    src = src[0] + np.concatenate([[0.0], np.cumsum(np.mod(np.diff(src), TWO_PI))])
    cum = np.concatenate([[0.0], np.cumsum(density) * step])
    y = (src + 0.5 * step) / step
    turns = np.floor(y / M)
    y = y - turns * M
    j = np.minimum(np.floor(y).astype(int), M - 1)
    F = turns * cum[-1] + cum[j] + (y - j) * density[j] * step
    return np.diff(F) / step


def markov_step(mu: GroupMeasure, nu: CircleMeasure, cap: int = ELEMENT_CAP) -> CircleMeasure:
    """sum over atoms of mu(g) g_* nu."""
    if not mu.is_probability():
        warnings.warn("markov_step with a non-probability measure; result may be non-positive",
                      stacklevel=2)
    if isinstance(nu, AtomicMeasure):
        if len(mu) * len(nu) > cap:
            raise ResourceError(f"atomic markov step exceeds cap {cap}")
        parts = [pushforward(g, nu) for g in mu.maps]
        ang = np.concatenate([p.angles for p in parts])
        w = np.concatenate([wt * p.weights for wt, p in zip(mu.weights, parts)])
        return merge_atoms(AtomicMeasure(ang, w))
    if isinstance(nu, GridMeasure):
        dens = sum(w * _push_density(g, nu.density) for g, w in mu.atoms)
        if np.isrealobj(nu.density) and np.all(np.abs(mu.weights.imag) == 0):
            dens = np.real(dens)
        return GridMeasure(dens)
    if isinstance(nu, FourierMeasure):
        K = nu.coeffs.K
        grid = to_grid(nu, _fourier_grid_size(K)).density
        dens = sum(w * _push_density(g, grid) for g, w in mu.atoms)
        return FourierMeasure(fourier_coeffs(GridMeasure(dens), K))
    raise TypeError(f"not a circle measure: {type(nu).__name__}")


@dataclass
class IterationResult:
    measure: CircleMeasure
    history: list
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.history)


def stationary_iterate(mu: GroupMeasure, nu0: CircleMeasure, max_iter: int = 100,
                       tol: float = 1e-10, K: int = DEFAULT_K) -> IterationResult:
    """Iterate the Markov operator from ``nu0``.

    history[i] is max_{|k|<=K} |a_k^{(i+1)} - a_k^{(i)}|. Stops once a
    distance falls below ``tol`` or after ``max_iter`` steps. Convergence
    is reported, never assumed.
    """
    if not mu.is_probability():
        raise PreconditionError("stationary_iterate requires a probability measure")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if isinstance(nu0, AtomicMeasure):
        raise PreconditionError("atomic representation unsupported; use grid or Fourier form")
    nu = nu0
    if isinstance(nu, FourierMeasure) and nu.coeffs.K < K:
        nu = FourierMeasure(nu.coeffs.resized(K))
    a_prev = fourier_coeffs(nu, K).values
    history = []
    for _ in range(max_iter):
        nxt = markov_step(mu, nu)
        a_next = fourier_coeffs(nxt, K).values
        d = float(np.abs(a_next - a_prev).max())
        history.append(d)
        nu, a_prev = nxt, a_next
        if d < tol:
            return IterationResult(nu, history, True)
    return IterationResult(nu, history, False)
