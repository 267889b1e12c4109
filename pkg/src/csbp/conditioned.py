"""Estimators for conditioned processes: Doob h-transforms and survival conditioning.

Kinds of h-transform:

* ``sp_positive``: spectrally positive X, ``h(x) = x``;
* ``sn_dual``: its spectrally negative dual, ``h(x) = W(x)``, proportional to ``x**(alpha-1)``;
* ``cb``: the CB process in its own clock, ``h(x) = x``.

The weight ``h(X_H) / h(x)`` is taken once, at the horizon (a stopping time of
the simulation grid), and is zero for killed paths.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from . import _kernels as K
from ._engine import BatchResult, WalkSpec, derive_seed, run_batch
from .closed_forms import (extinction_cdf, prop4_sup_law, qs_scale)
from .results import IdentityCheck, MCEstimate
from .stable_levy import StableParams
from .stats import ess as kish_ess

Kind = Literal["sp_positive", "sn_dual", "cb"]
ESS_FLOOR = 100.0


@dataclass(frozen=True)
class PathSummary:
    """Per-path quantities observed up to the horizon.

    ``value`` is the path value at the horizon, ``minimum`` and ``maximum`` the
    running extremes over the grid and ``alive`` whether the path survived.
    """

    value: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    alive: np.ndarray


@dataclass(frozen=True)
class WeightedSample:
    """Functional values with their h-transform weights (zero for dead paths)."""

    functional_value: np.ndarray
    weight: np.ndarray
    alive: np.ndarray

    @property
    def ess(self) -> float:
        return kish_ess(self.weight)


class Functional:
    """A path functional evaluated on a :class:`PathSummary`.

    ``levels`` lists values of the path near which the time grid is refined.
    """

    levels: tuple = ()

    def __call__(self, s: PathSummary) -> np.ndarray:
        raise NotImplementedError


class One(Functional):
    def __call__(self, s):
        return np.ones_like(s.value)


class Laplace(Functional):
    def __init__(self, lam: float):
        self.lam = float(lam)

    def __call__(self, s):
        return np.exp(-self.lam * np.maximum(s.value, 0.0))


class InfimumAbove(Functional):
    """Indicator that the running minimum stays at or above ``z``."""

    def __init__(self, z: float):
        self.z = float(z)
        self.levels = (self.z,)

    def __call__(self, s):
        return (s.minimum >= self.z).astype(float)


def _h(kind: Kind, params: StableParams, v: np.ndarray) -> np.ndarray:
    v = np.maximum(v, 0.0)
    if kind == "sn_dual":
        return v ** (params.alpha - 1.0)
    return v


def weighted_sample(kind: Kind, params: StableParams, x: float, horizon: float,
                    functional: Functional | Callable, n_paths: int, dt: float, seed: int,
                    *, clock: Literal["levy", "cb"] | None = None, eps: float = 0.1,
                    x_ref: float | None = None, uniform: bool = False) -> WeightedSample:
    """Simulate and weight; see :func:`h_transform_estimate`."""
    if not (x > 0 and horizon > 0):
        raise ValueError("x and horizon must be positive")
    if kind not in ("sp_positive", "sn_dual", "cb"):
        raise ValueError(f"unknown kind {kind!r}")
    if clock is None:
        clock = "cb" if kind == "cb" else "levy"
    if kind == "cb" and clock != "cb":
        raise ValueError("kind 'cb' runs in its own clock")
    levels = tuple(getattr(functional, "levels", ()))
    lower = 0.0
    if kind == "sn_dual" and isinstance(functional, InfimumAbove) and functional.z > 0:
        # the indicator is 0 once the path is below z, so the walk may stop there
        lower = functional.z
    spec = WalkSpec(
        params, float(x), sign=-1 if kind == "sn_dual" else 1,
        mode=K.MODE_EULER if kind == "cb" else (K.MODE_UNIFORM if uniform else K.MODE_RELATIVE),
        h=dt, eps=eps, x_ref=x_ref, levels=levels, lower=lower,
        t_stop=horizon if clock == "cb" else math.inf,
        s_stop=horizon if clock == "levy" else math.inf,
    )
    r = run_batch(spec, n_paths, seed, t_obs=[horizon] if clock == "cb" else [])
    return _weigh(kind, params, x, r, clock, functional, horizon)


def _weigh(kind, params, x, r: BatchResult, clock, functional, horizon) -> WeightedSample:
    alive = r.status == K.ST_HORIZON
    value = r.obs[:, 0] if clock == "cb" else r.X
    summary = PathSummary(np.where(alive, value, 0.0), r.xmin, r.xmax, alive)
    f = np.asarray(functional(summary), dtype=float)
    w = np.where(alive, _h(kind, params, r.X) / _h(kind, params, np.array([x]))[0], 0.0)
    if np.any(r.censored):
        raise RuntimeError(f"{int(r.censored.sum())} paths hit the step cap before the horizon")
    return WeightedSample(np.where(alive, f, 0.0), w, alive)


def h_transform_estimate(kind: Kind, params: StableParams, x: float, horizon: float,
                         functional: Functional | Callable, n_paths: int, dt: float,
                         seed: int, **kw) -> MCEstimate:
    """Estimate ``E^up_x[F]`` as ``E_x[F h(X_H) / h(x); H < kill time]``.

    Parameters
    ----------
    kind : {"sp_positive", "sn_dual", "cb"}
        Process and harmonic function.
    horizon : float
        Fixed horizon; Levy time for the first two kinds unless ``clock="cb"``.
    functional : Functional or callable
        Maps a :class:`PathSummary` to per-path values. Only quantities up to
        the horizon are available, so functionals looking beyond it cannot be
        expressed.
    dt : float
        Step parameter of the walk (CB-clock step unless ``uniform=True``).

    Returns
    -------
    MCEstimate
        With ``ess`` set and ``flagged`` when the ESS is below 100.
    """
    ws = weighted_sample(kind, params, x, horizon, functional, n_paths, dt, seed, **kw)
    e = ws.ess
    return MCEstimate.from_samples(ws.functional_value * ws.weight, seed, ess=e,
                                   flagged=e < ESS_FLOOR)


def survival_conditioned_laplace(params: StableParams, x: float, t: float, lam: float,
                                 n_paths: int, dt: float, seed: int, *,
                                 eps: float = 0.1) -> MCEstimate:
    """Rejection estimate of ``E_x[exp(-lam Y_t / c_t) | T > t]``.

    ``acceptance`` on the result estimates ``P_x(T > t) = 1 - extinction_cdf``.
    """
    r = run_batch(WalkSpec(params, float(x), h=dt, eps=eps, t_stop=t), n_paths, seed, t_obs=[t])
    y = r.obs[:, 0]
    acc = y > 0
    k = int(acc.sum())
    if k < 2:
        surv = 1.0 - extinction_cdf(params, x, t)
        raise RuntimeError(f"{k} surviving paths out of {n_paths}; survival probability {surv:.3g}")
    vals = np.exp(-lam * y[acc] / qs_scale(params, t))
    return MCEstimate.from_samples(vals, seed, acceptance=k / n_paths)


def simulate_cbi(params: StableParams, n_paths: int, dt: float, seed: int, *,
                 horizon: float, x: float = 0.0, t_obs=(), y_last: float = -math.inf,
                 eps: float = 0.1, x_ref: float = 1.0) -> BatchResult:
    """CB process with immigration ``phi(lam) = psi'(lam)``, i.e. the process conditioned to survive.

    Simulated as an Euler scheme in its own clock: the CB part runs the stable
    path for Levy time ``Y dt`` and an ``(alpha-1)``-stable subordinator adds
    immigration with Laplace exponent ``c alpha lam**(alpha-1)``.
    """
    spec = WalkSpec(params, float(x), mode=K.MODE_EULER, h=dt, eps=eps, x_ref=x_ref,
                    t_stop=horizon, lower=-math.inf,
                    immigration=params.c_plus * params.alpha)
    return run_batch(spec, n_paths, seed, t_obs=t_obs, y_last=y_last)


def cbi_sup_before_last_passage(params: StableParams, m_star: float, y: float, z,
                                n_paths: int, dt: float, seed: int, *,
                                horizon: float = 200.0) -> IdentityCheck:
    """Shape check of ``P^up(sup before the last passage below y <= z) = 1 - kappa y / z``.

    ``z`` may be a grid; the fitted intercept must be 1 within 0.03 and
    ``R**2 > 0.99``. ``kappa_hat`` is reported and, at ``alpha = 2``, compared
    with ``1 / m_star``.
    """
    t0 = time.perf_counter()
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zs < y) or y <= 0:
        raise ValueError("need z >= y > 0")
    r = simulate_cbi(params, n_paths, dt, seed, horizon=horizon, y_last=y)
    observed = r.t_last < 0.8 * horizon
    unobserved = 1.0 - float(observed.mean())
    sup = r.sup_last
    probs = np.array([float(np.mean(sup <= zz)) for zz in zs])
    ses = np.sqrt(probs * (1 - probs) / n_paths)
    xr = y / zs
    if zs.size >= 2:
        A = np.vstack([np.ones_like(xr), xr]).T
        coef, *_ = np.linalg.lstsq(A, probs, rcond=None)
        fit = A @ coef
        ss_res = float(np.sum((probs - fit) ** 2))
        ss_tot = float(np.sum((probs - probs.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        intercept, kappa = float(coef[0]), float(-coef[1])
    else:
        intercept, kappa, r2 = 1.0, float((1 - probs[0]) / xr[0]), 1.0
    monotone = bool(np.all(np.diff(probs[np.argsort(zs)]) >= -4 * ses.max()))
    passed = abs(intercept - 1.0) <= 0.03 and r2 > 0.99 and unobserved <= 0.01 and monotone
    diag = {
        "kappa_hat": kappa, "r2": r2, "unobserved_fraction": unobserved,
        "alpha_minus_one": params.alpha - 1.0, "probabilities": probs.tolist(),
        "z_grid": zs.tolist(), "monotone": monotone,
    }
    if params.alpha == 2.0:
        diag["one_over_m_star"] = 1.0 / m_star
        diag["formula_at_z_grid"] = [float(prop4_sup_law(m_star, y, zz)) if m_star * zz >= y
                                     else float("nan") for zz in zs]
    est = MCEstimate(intercept, float(ses.max()), n_paths, seed)
    return IdentityCheck(
        name="sup_prop4_shape",
        params={"alpha": params.alpha, "c_plus": params.c_plus, "m_star": m_star, "y": y,
                "horizon": horizon},
        closed_form=1.0, estimate=est, z=None, bias_budget=0.03, passed=passed,
        runtime_s=time.perf_counter() - t0, diagnostics=diag,
    )


def started_at_zero_proxy(params: StableParams, t: float) -> float:
    """Small starting point ``1e-3 * [c (alpha-1) t]**(1/(alpha-1))`` standing in for 0."""
    return 1e-3 * qs_scale(params, t)


def conditioned_dual_marginal(params: StableParams, t: float, n_paths: int, dt: float,
                              seed: int, *, x0: float | None = None,
                              eps: float = 0.1) -> WeightedSample:
    """Values at CB time ``t`` of the time-changed dual conditioned to stay positive, from near 0.

    The dual is started at a small ``x0``, run in its CB clock to the first
    grid time at or after ``t`` and weighted by ``W(X) / W(x0)`` there; the
    reported value is the left grid value at ``t``.
    """
    if x0 is None:
        x0 = started_at_zero_proxy(params, t)
    scale = qs_scale(params, t)
    spec = WalkSpec(params, float(x0), sign=-1, mode=K.MODE_RELATIVE, h=dt * t,
                    eps=eps, x_ref=scale, t_stop=t)
    r = run_batch(spec, n_paths, seed, t_obs=[t])
    return _weigh("sn_dual", params, x0, r, "cb", lambda s: s.value, t)


def seed_for(seed: int, *keys) -> int:
    return derive_seed(seed, *keys)
