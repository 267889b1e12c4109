"""Spectrally positive alpha-stable Levy process and its dual.

Convention: ``E exp(-lam X_t) = exp(t psi(lam))`` with ``psi(lam) = c_plus lam**alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Regime = Literal["drifts_up", "oscillates", "drifts_down"]


@dataclass(frozen=True, slots=True)
class StableParams:
    """Index ``alpha`` in (1, 2] and scale ``c_plus`` > 0.

    When ``c_plus`` is omitted it defaults to 1, or to 1/2 at ``alpha = 2``
    so that the process is a standard Brownian motion.
    """

    alpha: float = 1.5
    c_plus: float | None = None

    def __post_init__(self):
        a = float(self.alpha)
        if not (1.0 < a <= 2.0):
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        c = self.c_plus
        if c is None:
            c = 0.5 if a == 2.0 else 1.0
        c = float(c)
        if not (c > 0 and math.isfinite(c)):
            raise ValueError(f"c_plus must be positive, got {self.c_plus}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "c_plus", c)


@dataclass(frozen=True, slots=True)
class RegimeReport:
    regime: Regime
    phi_zero: float


@dataclass(frozen=True)
class Path:
    """A discretized cadlag trajectory.

    ``kill_index`` marks absorption; consumers never read beyond it.
    """

    times: np.ndarray
    values: np.ndarray
    x0: float
    kill_index: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("times and values must be 1-d arrays of equal positive length")
        if t[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        if v[0] != self.x0:
            raise ValueError("values[0] must equal x0")
        if self.kill_index is not None and not (0 <= self.kill_index < t.size):
            raise ValueError("kill_index out of range")

    def __len__(self) -> int:
        return self.times.size

    @property
    def alive_values(self) -> np.ndarray:
        end = self.times.size if self.kill_index is None else self.kill_index + 1
        return self.values[:end]

    @property
    def alive_times(self) -> np.ndarray:
        end = self.times.size if self.kill_index is None else self.kill_index + 1
        return self.times[:end]


def psi(params: StableParams, lam: float) -> float:
    """Laplace exponent ``c_plus * lam**alpha``."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    return params.c_plus * lam**params.alpha


def phi_inverse(params: StableParams, q: float) -> float:
    """Right inverse of ``psi``."""
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    return (q / params.c_plus) ** (1.0 / params.alpha)


def classify_regime(params: StableParams) -> RegimeReport:
    """Drift trichotomy from the largest root of psi and the sign of psi'(0+)."""
    phi0 = phi_inverse(params, 0.0)
    # psi'(0+) = c alpha lam**(alpha-1) at 0+, i.e. 0 for alpha > 1
    dpsi0 = 0.0 if params.alpha > 1 else params.c_plus
    if phi0 > 0:
        return RegimeReport("drifts_up", phi0)
    if dpsi0 < 0:
        return RegimeReport("drifts_up", phi0)
    if dpsi0 > 0:
        return RegimeReport("drifts_down", phi0)
    return RegimeReport("oscillates", phi0)


def cms_constants(alpha: float) -> tuple[float, float, float]:
    """Constants ``(B, S, sigma_unit)`` of the Chambers-Mallows-Stuck map for beta = 1.

    ``sigma_unit`` rescales the S1 variate so that ``E exp(-lam Z) = exp(lam**alpha)``.
    """
    ta = math.tan(math.pi * alpha / 2)
    B = math.atan(ta) / alpha
    S = (1.0 + ta * ta) ** (0.5 / alpha)
    sigma_unit = abs(math.cos(math.pi * alpha / 2)) ** (1.0 / alpha)
    return B, S, sigma_unit


def unit_stable(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Draws ``Z`` with ``E exp(-lam Z) = exp(lam**alpha)`` (totally skewed to the right)."""
    if alpha == 2.0:
        return rng.standard_normal(size) * math.sqrt(2.0)
    B, S, su = cms_constants(alpha)
    V = math.pi * (rng.random(size) - 0.5)
    W = rng.standard_exponential(size)
    aVB = alpha * (V + B)
    x = S * np.sin(aVB) / np.cos(V) ** (1.0 / alpha) * (np.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha)
    return su * x


def sample_increment(params: StableParams, dt: float, rng: np.random.Generator, size=None):
    """One draw (or ``size`` draws) of ``X_dt - X_0``."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    scale = (params.c_plus * dt) ** (1.0 / params.alpha)
    z = unit_stable(params.alpha, 1 if size is None else size, rng) * scale
    return float(z[0]) if size is None else z


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent stream for one path, keyed by ``(seed, path_index)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(path_index)]))


def simulate_path(params: StableParams, x0: float, horizon: float, dt: float,
                  rng: np.random.Generator) -> Path:
    """Euler grid path ``x0 + cumulative increments`` on ``k * dt``, no killing."""
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ValueError(f"horizon {horizon} shorter than dt {dt}")
    n = int(math.floor(horizon / dt + 1e-9))
    inc = sample_increment(params, dt, rng, size=n)
    values = np.empty(n + 1)
    values[0] = x0
    np.cumsum(inc, out=values[1:])
    values[1:] += x0
    if not np.all(np.isfinite(values)):
        bad = int(np.argmin(np.isfinite(values)))
        raise FloatingPointError(f"non-finite path value at grid index {bad}")
    return Path(np.arange(n + 1) * dt, values, float(x0))


def first_passage(path: Path, level: float,
                  direction: Literal["below", "above"]) -> tuple[int, float] | None:
    """First grid index with ``value <= level`` (below) or ``>= level`` (above)."""
    v = path.alive_values
    if direction == "below":
        hit = np.flatnonzero(v <= level)
    elif direction == "above":
        hit = np.flatnonzero(v >= level)
    else:
        raise ValueError(f"direction must be 'below' or 'above', got {direction!r}")
    if hit.size == 0:
        return None
    k = int(hit[0])
    return k, float(path.times[k])


def dual_path(path: Path) -> Path:
    return Path(path.times, -path.values, -path.x0, path.kill_index)
