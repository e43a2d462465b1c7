"""Cauchy and log-Poisson transforms, pole series, Blaschke products, Hardy norms.

With the unit-harmonic-mass convention of :mod:`psustat.cmeasure` the Cauchy
transform of a point mass at xi is simply 1 / (xi - z), on both sides of the
circle.

Circle means are computed by one of two rules:

* a uniform trapezoid rule with M_r = max(M, 16 / (1 - r)) points (rounded up
  to a power of two, capped at ``MAX_NODES``), for functions without known
  singularities;
* composite 16-point Gauss-Legendre on panels graded geometrically towards
  supplied singularities, when those are known and few. The grading scale at
  radius r is the gap ||s| - r| to each singularity s.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cmeasure import (AtomicMeasure, CircleMeasure, FourierMeasure, GridMeasure,
                       fourier_coeffs)
from .errors import AccuracyError, DomainError, EvaluationError
from .gmeasure import GroupMeasure, blaschke_sum
from .moebius import INF, POLE_TOL, apply, pole_image

CIRCLE_TOL = 1e-9
MAX_NODES = 1 << 20
MAX_GRADED = 64
GL_ORDER = 16
GAP_EPS_FACTOR = 128.0
_CHUNK = 1 << 22

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def default_radii(jmax: int = 12) -> np.ndarray:
    return 1.0 - 2.0 ** -np.arange(1, jmax + 1)


def aleksandrov_radii(jmax: int = 15) -> np.ndarray:
    return 1.0 - 10.0 ** -np.arange(1, jmax + 1, dtype=float)


# -- Cauchy transform --------------------------------------------------------------

def _as_array(z):
    scalar = np.isscalar(z)
    return np.atleast_1d(np.asarray(z, dtype=complex)), scalar


def _atomic_kernel_sum(points, weights, z):
    out = np.empty(z.shape, dtype=complex)
    flat, res = z.ravel(), out.ravel()
    step = max(1, _CHUNK // max(points.size, 1))
    for i in range(0, flat.size, step):
        zz = flat[i:i + step]
        res[i:i + step] = (1.0 / (points[None, :] - zz[:, None])) @ weights
    return out


class CauchyTransform:
    """f_nu as a vectorised callable, with a polar evaluator for circle sampling."""

    def __init__(self, nu: CircleMeasure):
        self.nu = nu
        if isinstance(nu, AtomicMeasure):
            self.kind = "atomic"
            self.points, self.weights = nu.points, nu.weights
        else:
            self.kind = "series"
            if isinstance(nu, GridMeasure):
                fc = fourier_coeffs(nu, (nu.M - 1) // 2)
            else:
                fc = nu.coeffs
            self.coeffs = fc
            self._inner = fc.positive[1:][::-1]      # a_K ... a_1 for polyval
            self._outer = fc.negative[::-1]          # a_{-K} ... a_0

    @property
    def singularities(self):
        return self.points if self.kind == "atomic" else None

    @property
    def bandwidth(self):
        """Polynomial degree inside the disk (series form), else None."""
        return self.coeffs.K if self.kind == "series" else None

    def __call__(self, z):
        zz, scalar = _as_array(z)
        if np.any(np.abs(np.abs(zz) - 1.0) <= CIRCLE_TOL):
            raise DomainError("Cauchy transform is not defined on the unit circle")
        if self.kind == "atomic":
            if np.any(np.min(np.abs(zz[..., None] - self.points), axis=-1, initial=np.inf) <= POLE_TOL):
                raise DomainError("z coincides with an atom")
            out = _atomic_kernel_sum(self.points, self.weights, zz)
        else:
            out = np.empty(zz.shape, dtype=complex)
            inside = np.abs(zz) < 1.0
            out[inside] = np.polyval(self._inner, zz[inside]) if self._inner.size else 0.0
            w = 1.0 / zz[~inside]
            out[~inside] = -w * np.polyval(self._outer, w)
        return complex(out[0]) if scalar else out

    def polar(self, r: float, t: np.ndarray) -> np.ndarray:
        """f(r e^{it}), with the atom gaps 1 - r e^{i tau} formed without cancellation."""
        if self.kind != "atomic":
            z = r * np.exp(1j * t)
            return np.polyval(self._inner, z) if self._inner.size else np.zeros(t.shape, complex)
        d = 1.0 - r
        out = np.empty(t.shape, dtype=complex)
        ang = np.angle(self.points)
        coef = self.weights * np.exp(-1j * ang)
        step = max(1, _CHUNK // max(ang.size, 1))
        for i in range(0, t.size, step):
            tau = t[i:i + step, None] - ang[None, :]
            gap = d - r * np.expm1(1j * tau)       # 1 - r e^{i tau}
            out[i:i + step] = (1.0 / gap) @ coef
        return out

    def truncation_bound(self, z) -> float:
        """Tail bound |a|_inf |z|^{K+1} / (1 - |z|) (inside) for series evaluation."""
        if self.kind == "atomic":
            return 0.0
        K = self.coeffs.K
        amax = self.coeffs.max_abs()
        rho = abs(z) if abs(z) < 1 else 1.0 / abs(z)
        return amax * rho ** (K + 1) / (1.0 - rho)


def cauchy_transform(nu: CircleMeasure, z):
    """f_nu(z) for |z| != 1: atom sum, or the interior/exterior series of the band."""
    return CauchyTransform(nu)(z)


def cauchy_with_bound(nu: CircleMeasure, z) -> tuple[complex, float]:
    f = CauchyTransform(nu)
    return f(z), f.truncation_bound(z)


# -- log-Poisson transform -----------------------------------------------------------

def _band(nu: CircleMeasure, K: int | None):
    if isinstance(nu, GridMeasure):
        return fourier_coeffs(nu, (nu.M - 1) // 2 if K is None else K)
    if isinstance(nu, FourierMeasure):
        return nu.coeffs if K is None else nu.coeffs.resized(K)
    return fourier_coeffs(nu, 64 if K is None else K)


def _check_disk(zz):
    if np.any(np.abs(zz) >= 1.0):
        raise DomainError("log-Poisson transform requires |z| < 1")


def log_poisson_split(nu: CircleMeasure, z, K: int | None = None):
    """(f_plus, f_minus) with f_plus = sum a_k z^k / k and f_minus = sum a_{-k} conj(z)^k / k."""
    zz, scalar = _as_array(z)
    _check_disk(zz)
    if isinstance(nu, AtomicMeasure) and K is None:
        # sum_k (z / xi)^k / k = -log(1 - z conj(xi))
        xi = nu.points[None, :]
        flat = zz.ravel()[:, None]
        fp = (-np.log(1 - flat * xi.conj())) @ nu.weights
        fm = (-np.log(1 - flat.conj() * xi)) @ nu.weights
        fp, fm = fp.reshape(zz.shape), fm.reshape(zz.shape)
    else:
        fc = _band(nu, K)
        k = np.arange(1, fc.K + 1)
        pos = np.concatenate([[0], fc.positive[1:] / k])[::-1]
        neg = np.concatenate([[0], fc.negative[1:] / k])[::-1]
        fp, fm = np.polyval(pos, zz), np.polyval(neg, zz.conj())
    if scalar:
        return complex(fp[0]), complex(fm[0])
    return fp, fm


def log_poisson(nu: CircleMeasure, z, K: int | None = None):
    """p_nu(z) = a_0 log(1 - |z|^2) + 2-sided log series.

    Atomic measures use the closed form sum_j w_j busemann(z, xi_j) (exact);
    other forms sum the band. Real output for Hermitian data.
    """
    zz, scalar = _as_array(z)
    _check_disk(zz)
    a0 = fourier_coeffs(nu, 0)[0]
    if isinstance(nu, AtomicMeasure) and K is None:
        xi = nu.points
        base = np.log1p(-np.abs(zz) ** 2)
        out = np.empty(zz.shape, dtype=complex)
        flat = zz.ravel()
        res = out.ravel()
        step = max(1, _CHUNK // max(xi.size, 1))
        for i in range(0, flat.size, step):
            w = flat[i:i + step, None]
            res[i:i + step] = (-2.0 * np.log(np.abs(w - xi[None, :]))) @ nu.weights
        out += a0 * base
        hermitian = np.all(nu.weights.imag == 0)
    else:
        fp, fm = log_poisson_split(nu, zz, K)
        out = a0 * np.log1p(-np.abs(zz) ** 2) + fp + fm
        hermitian = _band(nu, K).is_hermitian()
    if hermitian:
        out = out.real
    return out[0].item() if scalar else out


def log_poisson_tail_bound(z, K: int) -> float:
    """|z|^{K+1} / ((K+1)(1-|z|)), per half of the series, for coefficients bounded by 1."""
    r = abs(z)
    if r >= 1:
        raise DomainError("tail bound requires |z| < 1")
    return r ** (K + 1) / ((K + 1) * (1.0 - r))


def taylor_recover(p_func: Callable, K: int, r0: float = 0.5, M: int | None = None):
    """FourierCoeffs a_{-K..K} of nu recovered from samples of p_nu on |z| = r0.

    The Fourier coefficient of p_nu(r0 e^{it}) - log(1 - r0^2) at frequency
    +k (resp. -k) is a_k r0^k / k (resp. a_{-k} r0^k / k). a_0 is set to 1.
    """
    from .cmeasure import FourierCoeffs

    if not 0 < r0 < 1:
        raise DomainError("r0 must lie in (0, 1)")
    if r0 ** K < 1e-14:
        raise AccuracyError(f"r0^K = {r0 ** K:.2e} is below 1e-14; extraction is ill-conditioned")
    M = M or max(128, 1 << math.ceil(math.log2(4 * K + 4)))
    t = 2 * math.pi * np.arange(M) / M
    z = r0 * np.exp(1j * t)
    h = np.asarray(p_func(z), dtype=complex) - math.log1p(-r0 * r0)
    c = np.fft.fft(h) / M
    k = np.arange(1, K + 1)
    scale = k / r0 ** k
    vals = np.zeros(2 * K + 1, dtype=complex)
    vals[K] = 1.0
    vals[K + 1:] = c[k] * scale
    vals[:K] = (c[(-k) % M] * scale)[::-1]
    return FourierCoeffs(vals)


# -- pole series and Blaschke products ------------------------------------------------

class BorelSeries:
    """z -> sum mu(g) / (z - g(INF)); atoms with g(INF) = INF contribute 0."""

    def __init__(self, mu: GroupMeasure):
        poles, weights = [], []
        for g, w in mu.atoms:
            p = pole_image(g)
            if p is not INF:
                poles.append(p)
                weights.append(w)
        self.poles = np.array(poles, dtype=complex)
        self.weights = np.array(weights, dtype=complex)

    @property
    def singularities(self):
        return self.poles

    def __call__(self, z):
        zz, scalar = _as_array(z)
        if self.poles.size == 0:
            out = np.zeros(zz.shape, dtype=complex)
        else:
            if np.any(np.min(np.abs(zz[..., None] - self.poles), axis=-1) <= POLE_TOL):
                raise DomainError("z coincides with a pole of the Borel series")
            out = -_atomic_kernel_sum(self.poles, self.weights, zz)
        return complex(out[0]) if scalar else out

    def polar(self, r: float, t: np.ndarray) -> np.ndarray:
        if self.poles.size == 0:
            return np.zeros(t.shape, dtype=complex)
        rho, phi = np.abs(self.poles), np.angle(self.poles)
        coef = self.weights * np.exp(-1j * phi)
        out = np.empty(t.shape, dtype=complex)
        step = max(1, _CHUNK // max(rho.size, 1))
        for i in range(0, t.size, step):
            tau = t[i:i + step, None] - phi[None, :]
            # r e^{i tau} - rho = (r - rho) + r (e^{i tau} - 1)
            diff = (r - rho)[None, :] + r * np.expm1(1j * tau)
            out[i:i + step] = (1.0 / diff) @ coef
        return out


def borel_series(mu: GroupMeasure, z):
    return BorelSeries(mu)(z)


def blaschke_product(mu: GroupMeasure, z):
    """Product over supp mu of the normalized factors |z_n|/z_n (z_n - z)/(1 - conj(z_n) z).

    z_n = g.0. Factors with z_n = 0 are g^{-1}(z) itself. Each factor is
    g^{-1} times a unimodular constant, chosen positive at 0.
    """
    zz, scalar = _as_array(z)
    if np.any(np.abs(zz) >= 1.0):
        raise DomainError("Blaschke product requires |z| < 1")
    out = np.ones(zz.shape, dtype=complex)
    for g, _ in mu.atoms:
        zn = apply(g, 0j)
        if zn == 0:
            out *= apply(g.inv(), zz)
        else:
            out *= (abs(zn) / zn) * (zn - zz) / (1.0 - zn.conjugate() * zz)
    return complex(out[0]) if scalar else out


def blaschke_zeros(mu: GroupMeasure) -> np.ndarray:
    return np.array([apply(g, 0j) for g in mu.maps], dtype=complex)


# -- Hardy norms -----------------------------------------------------------------------

@dataclass
class HardyEstimate:
    """Lower estimates of the p-means of f on a finite radius schedule.

    ``resolved[i]`` is False when the uniform rule needed more than
    ``MAX_NODES`` points at radius ``radii[i]`` and was capped.
    """

    p: float
    radii: np.ndarray
    values: np.ndarray
    nodes: list = field(default_factory=list)
    resolved: list = field(default_factory=list)

    @property
    def sup_value(self) -> float:
        return float(np.max(self.values))

    @property
    def sup_radius(self) -> float:
        return float(self.radii[int(np.argmax(self.values))])

    @property
    def largest_radius(self) -> float:
        return float(np.max(self.radii))

    @property
    def sup_at_largest_radius(self) -> bool:
        """True when the sup sits at the edge of the schedule (growth may continue)."""
        return self.sup_radius == self.largest_radius

    def is_monotone(self, tol: float = 1e-6) -> bool:
        order = np.argsort(self.radii)
        v = self.values[order]
        return bool(np.all(np.diff(v) >= -tol * np.maximum(1.0, np.abs(v[1:]))))

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "radii": [float(r) for r in self.radii],
            "values": [float(v) for v in self.values],
            "sup_value": self.sup_value,
            "largest_radius": self.largest_radius,
            "sup_at_largest_radius": self.sup_at_largest_radius,
            "resolved": [bool(x) for x in self.resolved],
        }


def _uniform_nodes(r: float, M: int, bandwidth=None):
    # a polynomial of degree K is integrated exactly once the grid exceeds 2K
    scale = 16.0 / (1.0 - r) if bandwidth is None else 4.0 * bandwidth
    need = 1 << max(0, math.ceil(math.log2(max(M, scale))))
    n = min(need, MAX_NODES)
    t = 2 * math.pi * np.arange(n) / n
    return t, np.full(n, 1.0 / n), need <= MAX_NODES


def _graded_nodes(r: float, singularities: np.ndarray, base_panels: int = 32):
    """Gauss-Legendre nodes on [0, 2 pi) graded towards each singular angle."""
    breaks = [2 * math.pi * np.arange(base_panels) / base_panels]
    for s in singularities:
        phi = math.atan2(s.imag, s.real)
        h = max(abs(abs(s) - r), 1e-300)
        offs = []
        x = h
        while x < math.pi:
            offs.append(x)
            x *= 2.0
        offs = np.array(offs)
        breaks.append(np.mod(phi + np.concatenate([[0.0], offs, -offs]), 2 * math.pi))
    b = np.unique(np.concatenate(breaks))
    edges = np.concatenate([b, [b[0] + 2 * math.pi]])
    lo, hi = edges[:-1], edges[1:]
    keep = hi - lo > 0
    lo, hi = lo[keep], hi[keep]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel() / (2 * math.pi)
    return t, w


def _circle_samples(f, r: float, M: int, singularities):
    if singularities is not None and 0 < len(singularities) <= MAX_GRADED:
        t, w = _graded_nodes(r, np.asarray(singularities, dtype=complex))
        ok = True
    else:
        t, w, ok = _uniform_nodes(r, M, getattr(f, "bandwidth", None))
    vals = f.polar(r, t) if hasattr(f, "polar") else np.asarray(f(r * np.exp(1j * t)))
    vals = np.broadcast_to(np.asarray(vals), t.shape)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"non-finite samples of f at radius {r!r}", radius=r)
    return np.abs(vals), w, ok, t.size


def _p_mean(absv, w, p):
    if math.isinf(p):
        return float(absv.max())
    m = absv.max()
    if m == 0:
        return 0.0
    # scale before powering to avoid overflow for large p
    return float(m * (w @ (absv / m) ** p) ** (1.0 / p))


def hardy_norm(f, p: float = 1.0, radii: Sequence[float] | None = None, M: int = 4096,
               singularities=None) -> HardyEstimate:
    """p-means (mean of |f(r e^{it})|^p)^{1/p} on a radius schedule.

    ``f`` is any vectorised callable on the disk. Objects exposing
    ``singularities`` (such as :class:`CauchyTransform` and
    :class:`BorelSeries`) get graded quadrature automatically, as do
    explicitly passed singularity lists of at most ``MAX_GRADED`` points.
    """
    if not p > 0:
        raise DomainError("p must be positive")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if np.any((radii <= 0) | (radii >= 1)):
        raise DomainError("radii must lie in (0, 1)")
    if singularities is None:
        singularities = getattr(f, "singularities", None)
    return _hardy_multi(f, [p], radii, M, singularities)[0]


def _hardy_multi(f, ps, radii, M, singularities) -> list[HardyEstimate]:
    vals = np.zeros((len(ps), len(radii)))
    nodes, resolved = [], []
    for j, r in enumerate(radii):
        absv, w, ok, n = _circle_samples(f, float(r), M, singularities)
        for i, p in enumerate(ps):
            vals[i, j] = _p_mean(absv, w, p)
        nodes.append(n)
        resolved.append(ok)
    return [HardyEstimate(float(p), np.array(radii), vals[i], list(nodes), list(resolved))
            for i, p in enumerate(ps)]


def aleksandrov_statistic(nu: CircleMeasure, p_list: Sequence[float], radii=None,
                          M: int = 4096) -> list[tuple[float, float]]:
    """[(p, (1 - p) * ||f_nu||_p)] with radii 1 - 10^{-j}, j = 1..15 by default.

    A finite p-schedule only estimates the liminf as p -> 1; read the output
    as a diagnostic.
    """
    ps = [float(p) for p in p_list]
    if any(not 0 < p < 1 for p in ps):
        raise DomainError("p values must lie in (0, 1)")
    radii = aleksandrov_radii() if radii is None else np.asarray(radii, dtype=float)
    f = CauchyTransform(nu)
    ests = _hardy_multi(f, ps, radii, M, f.singularities)
    return [(p, (1.0 - p) * e.sup_value) for p, e in zip(ps, ests)]


# -- boundary gap -------------------------------------------------------------------------

@dataclass
class BoundaryGap:
    r: float
    angles: np.ndarray
    samples: np.ndarray
    eps: float

    @property
    def l1(self) -> float:
        return float(np.mean(np.abs(self.samples)))

    @property
    def vanish_fraction(self) -> float:
        return float(np.mean(np.abs(self.samples) < self.eps))

    def to_json(self, include_samples: bool = False) -> dict:
        out = {"r": self.r, "M": int(self.angles.size), "eps": self.eps,
               "l1": self.l1, "vanish_fraction": self.vanish_fraction}
        if include_samples:
            out["samples"] = [[float(s.real), float(s.imag)] for s in self.samples]
        return out


def boundary_gap(nu: CircleMeasure, r: float, M: int = 4096, eps: float | None = None) -> BoundaryGap:
    """g_r(t) = f_nu(r e^{it}) - f_nu(e^{it} / r) on M equispaced angles.

    ``eps`` defaults to 128 (1 - r).
    """
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    eps = GAP_EPS_FACTOR * (1.0 - r) if eps is None else float(eps)
    t = 2 * math.pi * np.arange(M) / M
    u = np.exp(1j * t)
    f = CauchyTransform(nu)
    g = f(r * u) - f(u / r)
    return BoundaryGap(float(r), t, g, eps)


# -- CSV ------------------------------------------------------------------------------------

def field_table_csv(f, radii: Sequence[float], M: int = 64) -> str:
    """Rows (r, t, Re f, Im f) on concentric circles."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "t", "re", "im"])
    t = 2 * math.pi * np.arange(M) / M
    for r in radii:
        vals = np.asarray(f(r * np.exp(1j * t)), dtype=complex)
        for tj, v in zip(t, vals):
            w.writerow([repr(float(r)), repr(float(tj)), repr(v.real), repr(v.imag)])
    return buf.getvalue()


def aleksandrov_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "statistic"])
    for p, s in rows:
        w.writerow([repr(float(p)), repr(float(s))])
    return buf.getvalue()


__all__ = [
    "CauchyTransform", "cauchy_transform", "cauchy_with_bound", "log_poisson",
    "log_poisson_split", "log_poisson_tail_bound", "taylor_recover", "BorelSeries",
    "borel_series", "blaschke_product", "blaschke_zeros", "blaschke_sum", "HardyEstimate",
    "hardy_norm", "aleksandrov_statistic", "aleksandrov_radii", "default_radii",
    "BoundaryGap", "boundary_gap", "field_table_csv", "aleksandrov_csv",
]
