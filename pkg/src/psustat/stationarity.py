"""Executable checks built on the functional equation for stationary measures.

For a circle measure nu and a group measure mu the residual is

    R(z) = sum_g mu(g) f(g^{-1} z) (g^{-1})'(z) - f(z) - sum_g mu(g) / (z - g(INF))

with f the Cauchy transform of nu. It vanishes identically when nu is
mu-stationary. A small residual is evidence consistent with stationarity
and nothing more: the converse direction is not available.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cmeasure import AtomicMeasure, CircleMeasure
from .errors import AccuracyError, DomainError, GeometryError, PreconditionError
from .gmeasure import GroupMeasure, convolve, delta_identity
from .moebius import INF, apply, inverse, pole_image
from .transforms import (BorelSeries, CauchyTransform, MAX_GRADED, _as_array, default_radii,
                         hardy_norm, log_poisson)

POLE_CLEARANCE = 1e-6
CONTOUR_CLEARANCE = 1e-3


# -- functional residual -------------------------------------------------------------

def _inverse_terms(mu: GroupMeasure):
    """(weight, a, b) of each g^{-1}, with the pole image g(INF)."""
    out = []
    for g, w in mu.atoms:
        h = inverse(g)
        out.append((w, h.a, h.b, pole_image(g)))
    return out


def _pushed_term(f, zz, terms):
    """sum mu(g) f(g^{-1} z) (g^{-1})'(z)."""
    acc = np.zeros(zz.shape, dtype=complex)
    for w, a, b, _ in terms:
        den = b.conjugate() * zz + a.conjugate()
        acc += w * f((a * zz + b) / den) / den**2
    return acc


def functional_residual(mu: GroupMeasure, nu: CircleMeasure, z, extended: bool = False,
                        f: Callable | None = None):
    """Defect of the functional equation at z (scalar or array).

    Inside the disk by default. ``extended=True`` admits any z off the unit
    circle and off the poles g(INF); intended for atomic nu, whose transform
    is an exact rational function on both sides.
    """
    zz, scalar = _as_array(z)
    if not extended and np.any(np.abs(zz) >= 1.0):
        raise DomainError("functional_residual requires |z| < 1 (use extended=True)")
    f = CauchyTransform(nu) if f is None else f
    terms = _inverse_terms(mu)
    borel = BorelSeries(mu)
    res = _pushed_term(f, zz, terms) - f(zz) - borel(zz)
    return complex(res[0]) if scalar else res


def disk_grid(r_max: float, n_circles: int = 8, n_angles: int = 32) -> np.ndarray:
    """Origin plus ``n_circles`` concentric circles up to ``r_max``, ``n_angles`` points each."""
    if not 0 < r_max < 1:
        raise DomainError("r_max must lie in (0, 1)")
    radii = r_max * np.arange(1, n_circles + 1) / n_circles
    t = 2 * math.pi * np.arange(n_angles) / n_angles
    pts = (radii[:, None] * np.exp(1j * t)[None, :]).ravel()
    return np.concatenate([[0j], pts])


@dataclass
class ResidualReport:
    grid: np.ndarray
    values: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def mean_abs(self) -> float:
        return float(np.mean(np.abs(self.values)))

    def verdict(self, tol: float = 1e-9) -> str:
        if self.max_abs < tol:
            return "consistent with stationarity"
        return "inconsistent with stationarity"

    def to_json(self, include_values: bool = False) -> dict:
        out = {"max_abs": self.max_abs, "mean_abs": self.mean_abs,
               "n_points": int(self.grid.size), "config": dict(self.config)}
        if include_values:
            out["points"] = [[float(z.real), float(z.imag)] for z in self.grid]
            out["values"] = [[float(v.real), float(v.imag)] for v in self.values]
        return out


def residual_report(mu: GroupMeasure, nu: CircleMeasure, r_max: float = 0.9,
                    grid_size: int = 32, n_circles: int = 8) -> ResidualReport:
    """Residual on :func:`disk_grid` (``grid_size`` angles per circle)."""
    grid = disk_grid(r_max, n_circles, grid_size)
    poles = BorelSeries(mu).poles
    if poles.size and np.min(np.abs(grid[:, None] - poles[None, :])) < POLE_CLEARANCE:
        raise GeometryError("residual grid passes too close to a pole")
    vals = functional_residual(mu, nu, grid)
    cfg = {"r_max": r_max, "grid_size": grid_size, "n_circles": n_circles,
           "nu_kind": nu.kind}
    if not isinstance(nu, AtomicMeasure):
        cfg["K"] = CauchyTransform(nu).coeffs.K
    return ResidualReport(grid, vals, cfg)


# -- Poisson level -----------------------------------------------------------------------

def drift(mu: GroupMeasure, nu: CircleMeasure):
    """l = sum mu(g) p_nu(g^{-1} 0); real for real mu and positive nu."""
    pts = np.array([apply(inverse(g), 0j) for g in mu.maps])
    vals = np.asarray(log_poisson(nu, pts))
    out = complex(mu.weights @ vals)
    real = np.isrealobj(vals) and np.all(mu.weights.imag == 0)
    return out.real if real else out


def poisson_stationarity_check(mu: GroupMeasure, nu: CircleMeasure, z_grid=None):
    """(mean, max deviation from the mean) of h(z) = sum mu(g) p(g^{-1} z) - p(z)."""
    zz = disk_grid(0.9) if z_grid is None else np.asarray(z_grid, dtype=complex)
    h = -np.asarray(log_poisson(nu, zz), dtype=complex)
    for g, w in mu.atoms:
        h = h + w * np.asarray(log_poisson(nu, apply(inverse(g), zz)))
    mean = complex(np.mean(h))
    dev = float(np.max(np.abs(h - mean)))
    if np.all(np.abs(h.imag) == 0):
        mean = mean.real
    return mean, dev


# -- Borel norm growth ------------------------------------------------------------------------

def borel_radii(series: BorelSeries, extra: int = 8, jmax_cap: int = 52) -> np.ndarray:
    """1 - 2^{-j} up to a few halvings past the smallest pole gap."""
    if series.poles.size == 0 or series.poles.size > MAX_GRADED:
        return default_radii()
    gap = float(np.min(np.abs(series.poles)) - 1.0)
    jmax = math.ceil(math.log2(1.0 / gap)) + extra if gap > 0 else jmax_cap
    return default_radii(min(max(12, jmax), jmax_cap))


def borel_norm_growth(mu: GroupMeasure, n_max: int, p: float = 1.0, M: int = 4096,
                      radii=None) -> list[tuple[int, float]]:
    """[(n, Hardy p-norm estimate of the Borel series of mu^{*n})] for n = 1..n_max.

    The raw sequence is returned; no monotonicity is imposed.
    """
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    out = []
    mu_n = delta_identity()
    for n in range(1, n_max + 1):
        mu_n = convolve(mu_n, mu)
        series = BorelSeries(mu_n)
        if series.poles.size == 0:
            out.append((n, 0.0))
            continue
        rr = borel_radii(series) if radii is None else radii
        est = hardy_norm(series, p, rr, M)
        out.append((n, est.sup_value))
    return out


def borel_norms_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "norm"])
    for n, v in rows:
        w.writerow([n, repr(float(v))])
    return buf.getvalue()


# -- truncated operators ----------------------------------------------------------------------

@dataclass
class OperatorMatrix:
    """entries[j, k] = coefficient of z^j in the image of z^k, 0 <= j, k <= K."""

    K: int
    entries: np.ndarray
    kind: str = "T"
    p: float = 2.0

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(coeffs, dtype=complex)[: self.K + 1]

    def to_json(self) -> dict:
        return {"K": self.K, "kind": self.kind, "p": self.p,
                "re": self.entries.real.tolist(), "im": self.entries.imag.tolist()}


def _taylor_columns(image: Callable[[np.ndarray, int], np.ndarray], K: int, orders: int,
                    r0: float, M: int | None):
    if not 0 < r0 < 1:
        raise DomainError("r0 must lie in (0, 1)")
    if r0 ** (orders - 1) < 1e-14:
        raise AccuracyError(f"r0^K = {r0 ** (orders - 1):.2e} below 1e-14; extraction ill-conditioned")
    M = M or max(64, 1 << math.ceil(math.log2(8 * orders)))
    if M < 8 * K:
        raise AccuracyError("quadrature needs at least 8K points")
    z = r0 * np.exp(2j * math.pi * np.arange(M) / M)
    scale = r0 ** -np.arange(orders)
    cols = np.empty((orders, K + 1), dtype=complex)
    for k in range(K + 1):
        c = np.fft.fft(image(z, k)) / M
        cols[:, k] = c[:orders] * scale
    return cols


def t_mu_matrix(mu: GroupMeasure, K: int, r0: float = 0.5, M: int | None = None) -> OperatorMatrix:
    """Finite section of T f = sum mu(g) (f o g^{-1}) (g^{-1})' - f on {1, z, ..., z^K}."""
    if K < 1:
        raise PreconditionError("K must be >= 1")
    terms = _inverse_terms(mu)

    def image(z, k):
        return _pushed_term(lambda u: u**k, z, terms) - z**k

    return OperatorMatrix(K, _taylor_columns(image, K, K + 1, r0, M), "T")


def t_mu_adjoint_matrix(mu: GroupMeasure, K: int, r0: float = 0.5,
                        M: int | None = None) -> OperatorMatrix:
    """Finite section of T* f = S*(sum conj(mu(g)) f(g z) g(z)) - f.

    S* is the backward shift, applied exactly to the coefficient sequence.
    Conjugated weights make this the H^2 adjoint for complex mu as well.
    """
    if K < 1:
        raise PreconditionError("K must be >= 1")
    atoms = [(w.conjugate(), g.a, g.b) for g, w in mu.atoms]

    def image(z, k):
        acc = np.zeros(z.shape, dtype=complex)
        for w, a, b in atoms:
            gz = (a * z + b) / (b.conjugate() * z + a.conjugate())
            acc += w * gz ** (k + 1)
        return acc

    cols = _taylor_columns(image, K, K + 2, r0, M)[1:]   # S*: drop order 0 and shift
    cols -= np.eye(K + 1)
    return OperatorMatrix(K, cols, "T*")


# -- contour charge ------------------------------------------------------------------------------

def contour_charge(mu: GroupMeasure, f: Callable, center: complex, radius: float,
                   M: int = 2048) -> complex:
    """(1 / 2 pi i) times the counterclockwise integral of the residual of f.

    For entire f the composition terms are exact derivatives and integrate
    to zero, so the charge is minus the mu-mass of the poles g(INF) inside.
    """
    center = complex(center)
    if radius <= 0:
        raise GeometryError("contour radius must be positive")
    c = abs(center)
    # two circles meet iff |R - 1| <= |center| <= R + 1
    if abs(radius - 1.0) - CONTOUR_CLEARANCE <= c <= radius + 1.0 + CONTOUR_CLEARANCE:
        raise GeometryError("contour meets the unit circle")
    terms = _inverse_terms(mu)
    for *_, p in terms:
        if p is not INF and abs(abs(p - center) - radius) < CONTOUR_CLEARANCE:
            raise GeometryError(f"contour passes within {CONTOUR_CLEARANCE} of the pole {p}")
    t = 2 * math.pi * np.arange(M) / M
    u = np.exp(1j * t)
    z = center + radius * u
    vals = _pushed_term(f, z, terms) - np.asarray(f(z)) * np.ones(M) - BorelSeries(mu)(z)
    # dz = i radius u dt; divided by 2 pi i gives mean(vals * radius * u)
    return complex(np.mean(vals * radius * u))


# -- Stolz coverage -----------------------------------------------------------------------------

@dataclass
class StolzReport:
    alpha: float
    eps: float
    angles: np.ndarray
    covered: np.ndarray

    @property
    def coverage_fraction(self) -> float:
        return float(np.mean(self.covered))

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "eps": self.eps, "boundary_grid": int(self.angles.size),
                "coverage_fraction": self.coverage_fraction}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["angle", "covered"])
        for t, c in zip(self.angles, self.covered):
            w.writerow([repr(float(t)), int(c)])
        return buf.getvalue()


def stolz_coverage(points, alpha: float = 2.0, eps: float = 0.05,
                   boundary_grid: int = 1024) -> StolzReport:
    """Mark xi_j = e^{2 pi i j / G} covered when some point z has
    |z - xi| < alpha (1 - |z|) and 1 - |z| < eps.

    For fixed z the covered directions form the arc
    cos(t - arg z) > (1 + |z|^2 - alpha^2 (1 - |z|)^2) / (2 |z|).
    """
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    if not eps > 0:
        raise DomainError("eps must be positive")
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size and np.any(np.abs(pts) > 1.0):
        raise DomainError("Stolz points must lie in the disk")
    # points whose modulus rounds to 1 cover no direction and are ignored
    pts = pts[np.abs(pts) < 1.0]
    G = int(boundary_grid)
    angles = 2 * math.pi * np.arange(G) / G
    rho = np.abs(pts)
    sel = (1.0 - rho) < eps
    pts, rho = pts[sel], rho[sel]
    diff = np.zeros(G + 1, dtype=np.int64)
    full = False
    if pts.size:
        origin = rho == 0
        full = bool(np.any(origin))
        rho_nz, phi = rho[~origin], np.angle(pts[~origin])
        c = (1 + rho_nz**2 - alpha**2 * (1 - rho_nz) ** 2) / (2 * rho_nz)
        full = full or bool(np.any(c < -1))
        ok = c < 1
        half = np.arccos(np.clip(c[ok], -1, 1))
        phi = phi[ok]
        step = 2 * math.pi / G
        lo = np.floor((phi - half) / step).astype(np.int64) + 1
        hi = np.ceil((phi + half) / step).astype(np.int64) - 1
        for a, b in zip(lo, hi):
            if b < a:
                continue
            if b - a + 1 >= G:
                full = True
                break
            a0, b0 = a % G, b % G
            if a0 <= b0:
                diff[a0] += 1
                diff[b0 + 1] -= 1
            else:
                diff[a0] += 1
                diff[G] -= 1
                diff[0] += 1
                diff[b0 + 1] -= 1
    covered = np.ones(G, bool) if full else np.cumsum(diff[:G]) > 0
    return StolzReport(float(alpha), float(eps), angles, covered)


__all__ = [
    "functional_residual", "disk_grid", "ResidualReport", "residual_report", "drift",
    "poisson_stationarity_check", "borel_radii", "borel_norm_growth", "borel_norms_csv",
    "OperatorMatrix", "t_mu_matrix", "t_mu_adjoint_matrix", "contour_charge",
    "StolzReport", "stolz_coverage",
]
