"""Monte-Carlo random walks X_n = g_1 ... g_n on PSU(1,1).

All samples advance together as numpy arrays. The first row (a, b) of X_n
is kept as e^L (u, v) with |u| = 1, so that

    X_n.0 = u v,    1 - |X_n.0| = e^{-2L} / (1 + |v|),    d(0, X_n.0) = 2L + 2 log(1 + |v|).

The boundary gap and the distance therefore stay accurate long after
|X_n.0| has rounded to 1, and the angle arg(u v) is tracked at full
precision throughout.

Random numbers come from a counter-based hash: the uniform drawn by sample
i at step n is a bijective 64-bit mix of (seed, i, n). Sample streams are
disjoint by construction and need no shared state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cmeasure import AtomicMeasure, merge_atoms
from .errors import ConfigurationError, PreconditionError
from .gmeasure import GroupMeasure

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
MAX_SAMPLES = 1 << 31
UNREACHED_WARN = 0.01


def splitmix64(x: np.ndarray) -> np.ndarray:
    """The splitmix64 finalizer applied elementwise to uint64 data (a bijection)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _C1
        z = (z ^ (z >> np.uint64(27))) * _C2
        return z ^ (z >> np.uint64(31))


def uniforms(seed: int, sample: np.ndarray, step: int) -> np.ndarray:
    """U(0,1) draws for the given sample indices at one step."""
    key = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    ctr = (np.asarray(sample, dtype=np.uint64) << np.uint64(32)) | np.uint64(step)
    bits = splitmix64(splitmix64(ctr ^ key))
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class WalkConfig:
    mu: GroupMeasure
    seed: int = 0
    boundary_tol: float = 1e-6
    max_steps: int = 10_000

    def __post_init__(self):
        if not self.mu.is_probability() or np.any(self.mu.weights.imag != 0):
            raise PreconditionError("walk requires a probability measure with real weights")
        if not 0 < self.boundary_tol < 1:
            raise ConfigurationError("boundary_tol must lie in (0, 1)")
        if not 1 <= self.max_steps < 2**32:
            raise ConfigurationError("max_steps must lie in [1, 2^32)")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        return {"seed": int(self.seed), "boundary_tol": self.boundary_tol,
                "max_steps": self.max_steps, "mu": self.mu.to_json()}


class _Walker:
    """Vectorised state (u, v, L) for a batch of sample indices."""

    def __init__(self, cfg: WalkConfig, samples: np.ndarray):
        self.cfg = cfg
        self.samples = np.asarray(samples, dtype=np.int64)
        if self.samples.size and (self.samples.min() < 0 or self.samples.max() >= MAX_SAMPLES):
            raise ConfigurationError(f"sample indices must lie in [0, {MAX_SAMPLES})")
        n = self.samples.size
        self.u = np.ones(n, dtype=complex)
        self.v = np.zeros(n, dtype=complex)
        self.L = np.zeros(n)
        w = cfg.mu.weights.real
        self.cum = np.cumsum(w) / w.sum()
        self.A = np.array([g.a for g in cfg.mu.maps])
        self.B = np.array([g.b for g in cfg.mu.maps])
        self.step = 0

    def advance(self, active=None):
        idx = slice(None) if active is None else active
        smp = self.samples[idx]
        r = uniforms(self.cfg.seed, smp, self.step)
        k = np.minimum(np.searchsorted(self.cum, r, side="right"), self.cum.size - 1)
        c, d = self.A[k], self.B[k]
        u, v = self.u[idx], self.v[idx]
        na = u * c + v * d.conjugate()
        nb = u * d + v * c.conjugate()
        # |na|^2 - 1 = |d|^2 (1 + |v|^2) + 2 Re(u c conj(v) d), using |u| = 1, |c|^2 - |d|^2 = 1
        excess = np.abs(d) ** 2 * (1 + np.abs(v) ** 2) + 2 * (u * c * v.conjugate() * d).real
        m = np.abs(na)
        self.u[idx] = na / m
        self.v[idx] = nb / m
        self.L[idx] = self.L[idx] + 0.5 * np.log1p(excess)
        self.step += 1

    @property
    def points(self):
        return self.u * self.v

    @property
    def log_gap(self):
        """log(1 - |X.0|)."""
        return -2.0 * self.L - np.log1p(np.abs(self.v))

    @property
    def distance(self):
        return 2.0 * self.L + 2.0 * np.log1p(np.abs(self.v))


@dataclass
class PathSample:
    """Orbit points X_n.0, log(1 - |X_n.0|) and d(0, X_n.0) for n = 1..steps."""

    points: np.ndarray
    log_gaps: np.ndarray
    distances: np.ndarray


def sample_paths(cfg: WalkConfig, steps: int, n_paths: int = 1, first: int = 0) -> PathSample:
    """Paths for sample indices first .. first + n_paths - 1; arrays shaped (n_paths, steps)."""
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    w = _Walker(cfg, np.arange(first, first + n_paths))
    pts = np.empty((n_paths, steps), dtype=complex)
    gaps = np.empty((n_paths, steps))
    dist = np.empty((n_paths, steps))
    for n in range(steps):
        w.advance()
        pts[:, n], gaps[:, n], dist[:, n] = w.points, w.log_gap, w.distance
    return PathSample(pts, gaps, dist)


def sample_path(cfg: WalkConfig, steps: int, sample: int = 0) -> np.ndarray:
    """X_n.0 for n = 1..steps along one sample stream."""
    return sample_paths(cfg, steps, 1, sample).points[0]


@dataclass
class HittingBatch:
    angles: np.ndarray
    steps_used: np.ndarray
    reached: np.ndarray


def hitting_samples(cfg: WalkConfig, samples) -> HittingBatch:
    """Run each sample until 1 - |X_n.0| < boundary_tol or max_steps."""
    w = _Walker(cfg, np.asarray(samples))
    n = w.samples.size
    log_tol = math.log(cfg.boundary_tol)
    steps = np.zeros(n, dtype=np.int64)
    reached = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for s in range(cfg.max_steps):
        if active.size == 0:
            break
        w.advance(active)
        steps[active] = s + 1
        hit = w.log_gap[active] < log_tol
        reached[active[hit]] = True
        active = active[~hit]
    return HittingBatch(np.mod(np.angle(w.points), 2 * math.pi), steps, reached)


def hitting_sample(cfg: WalkConfig, sample: int = 0) -> tuple[float, int, bool]:
    """(angle, steps_used, reached) for one sample stream."""
    b = hitting_samples(cfg, [sample])
    return float(b.angles[0]), int(b.steps_used[0]), bool(b.reached[0])


@dataclass
class EmpiricalHitting:
    measure: AtomicMeasure
    n_requested: int
    n_reached: int
    warning: str | None = None
    angles: np.ndarray = field(default=None, repr=False)

    @property
    def n_dropped(self) -> int:
        return self.n_requested - self.n_reached

    @property
    def reached_fraction(self) -> float:
        return self.n_reached / self.n_requested

    def to_json(self) -> dict:
        return {"n_requested": self.n_requested, "n_reached": self.n_reached,
                "n_dropped": self.n_dropped, "reached_fraction": self.reached_fraction,
                "warning": self.warning}


def empirical_hitting_measure(cfg: WalkConfig, N: int, batch: int = 1 << 16) -> EmpiricalHitting:
    """Atomic measure with weight 1/n_reached on each reached hitting angle.

    Unreached samples are dropped and counted; more than 1% unreached
    attaches (and emits) a reliability warning.
    """
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    angles, reached = [], []
    for start in range(0, N, batch):
        b = hitting_samples(cfg, np.arange(start, min(N, start + batch)))
        angles.append(b.angles)
        reached.append(b.reached)
    ang = np.concatenate(angles)
    ok = np.concatenate(reached)
    kept = ang[ok]
    n_ok = int(kept.size)
    msg = None
    if N - n_ok > UNREACHED_WARN * N:
        msg = f"{N - n_ok} of {N} samples did not reach the boundary tolerance"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if n_ok:
        nu = merge_atoms(AtomicMeasure(kept, np.full(n_ok, 1.0 / n_ok)))
    else:
        nu = AtomicMeasure(np.zeros(0), np.zeros(0))
    return EmpiricalHitting(nu, int(N), n_ok, msg, kept)


def empirical_escape_rate(cfg: WalkConfig, N: int, n: int, batch: int = 1 << 16) -> float:
    """Mean over N sample streams of d(0, X_n.0) / n."""
    if N < 1 or n < 1:
        raise ConfigurationError("N and n must be >= 1")
    total = 0.0
    for start in range(0, N, batch):
        w = _Walker(cfg, np.arange(start, min(N, start + batch)))
        for _ in range(n):
            w.advance()
        total += float(np.sum(w.distance))
    return total / (N * n)


__all__ = [
    "WalkConfig", "splitmix64", "uniforms", "PathSample", "sample_paths", "sample_path",
    "HittingBatch", "hitting_samples", "hitting_sample", "EmpiricalHitting",
    "empirical_hitting_measure", "empirical_escape_rate",
]
