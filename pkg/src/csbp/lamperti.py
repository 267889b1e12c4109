"""Lamperti time changes on discretized paths.

Two clocks are implemented:

* CB clock ``A_t = int_0^t ds / X_s`` turning a spectrally positive Levy path
  into a CB path ``Y = X o theta`` with ``theta`` the inverse of ``A``.
* Exponential functional ``I_s = int_0^s exp(index * xi_u) du`` turning a Levy
  path ``xi`` into a positive self-similar path ``x exp(xi o zeta)``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._engine import WalkSpec, derive_seed, record_paths, run_batch
from .results import IdentityCheck, MCEstimate
from .stable_levy import Path, StableParams
from .stats import ks_2samp


@dataclass(frozen=True)
class TimeChangedPath:
    """A base path, its clock and the time-changed path.

    ``knots`` carries the transformed path on the clock values themselves;
    ``output`` is either the same path or a resampling on a uniform grid.
    """

    base: Path
    clock_values: np.ndarray
    output: Path
    knots: Path
    absorbed: bool
    absorption_time: float = math.inf


def kill_at_zero(path: Path) -> Path:
    """Mark the first grid value ``<= 0`` as the absorption point."""
    hit = np.flatnonzero(path.values <= 0.0)
    if hit.size == 0:
        return path
    k = int(hit[0])
    if path.kill_index is not None and path.kill_index <= k:
        return path
    return Path(path.times, path.values, path.x0, k)


def _cb_clock(times: np.ndarray, values: np.ndarray, killed: bool) -> np.ndarray:
    # when killed, times[-1] is already the interpolated zero crossing
    dt = np.diff(times)
    A = np.zeros(times.size)
    if times.size == 1:
        return A
    if killed:
        inc = np.empty(dt.size)
        inc[:-1] = 0.5 * dt[:-1] * (1.0 / values[:-2] + 1.0 / values[1:-1])
        inc[-1] = dt[-1] / values[-2]
    else:
        inc = 0.5 * dt * (1.0 / values[:-1] + 1.0 / values[1:])
    np.cumsum(inc, out=A[1:])
    return A


def _uniform_resample(knots: Path, dt_out: float, absorbed: bool):
    end = float(knots.times[-1])
    grid = np.arange(0.0, end, dt_out)
    idx = np.searchsorted(knots.times, grid, side="right") - 1
    vals = knots.values[idx]
    if grid[-1] < end:
        grid = np.append(grid, end)
        vals = np.append(vals, 0.0 if absorbed else knots.values[-1])
    return grid, vals


def cb_time_change(base: Path, dt_out: float | None = None) -> TimeChangedPath:
    """CB path from a spectrally positive Levy path killed at its first passage below 0.

    The clock is the trapezoid rule for ``1/X`` on the base grid. On the killing
    step the base path is interpolated linearly to its zero crossing and the
    clock uses the left value there (``1/X`` is not integrable at the zero).
    Output values at clock times between knots are the left knot values.
    """
    if not base.x0 > 0:
        raise ValueError("base path must start above 0")
    killed = base.kill_index is not None
    times = base.alive_times
    vals = base.alive_values.copy()
    live = vals[:-1] if killed else vals
    if np.any(live <= 0):
        raise ValueError("path reaches 0 before its kill index; kill it first (kill_at_zero)")
    if killed:
        if vals[-1] > 0:
            raise ValueError("value at the kill index must be <= 0")
        x_prev = vals[-2]
        f = x_prev / (x_prev - vals[-1])
        times = times.copy()
        times[-1] = times[-2] + f * (times[-1] - times[-2])
    A = _cb_clock(times, vals, killed)
    if killed:
        vals[-1] = 0.0
    knots = Path(A, vals, base.x0, vals.size - 1 if killed else None)
    T = float(A[-1]) if killed else math.inf
    if dt_out is None:
        out = knots
    else:
        if not dt_out > 0:
            raise ValueError("dt_out must be positive")
        g, v = _uniform_resample(knots, dt_out, killed)
        out = Path(g, v, base.x0, g.size - 1 if killed else None)
    return TimeChangedPath(base, A, out, knots, killed, T)


def clock_inverse(tcp: TimeChangedPath, t):
    """``theta(t)``: Levy time at CB time ``t`` by linear interpolation of the clock."""
    return np.interp(t, tcp.clock_values, _base_times(tcp))


def _base_times(tcp: TimeChangedPath) -> np.ndarray:
    bt = tcp.base.alive_times.copy()
    if tcp.absorbed:
        v = tcp.base.alive_values
        f = v[-2] / (v[-2] - v[-1])
        bt[-1] = bt[-2] + f * (bt[-1] - bt[-2])
    return bt


def clock_at(tcp: TimeChangedPath, s):
    """``A(s)`` by linear interpolation on the base grid."""
    return np.interp(s, _base_times(tcp), tcp.clock_values)


def _log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (b - a) / (log b - log a), computed from the log ratio
    d = np.log(b) - np.log(a)
    out = a.copy()
    nz = np.abs(d) > 1e-300
    out[nz] = a[nz] * np.expm1(d[nz]) / d[nz]
    return out


def pssmp_from_levy(xi_path: Path, x: float, index: float) -> TimeChangedPath:
    """Positive self-similar path ``x exp(xi_{zeta(t x**-index)})``.

    The exponential functional is integrated exactly for a path whose value is
    linear between knots, so ``levy_from_pssmp`` inverts this map to rounding.
    """
    if not (x > 0 and index > 0):
        raise ValueError("x and index must be positive")
    s = xi_path.alive_times
    xi = xi_path.alive_values
    killed = xi_path.kill_index is not None
    e = np.exp(index * xi)
    inc = np.diff(s) * _log_mean(e[:-1], e[1:])
    clock = np.zeros(s.size)
    np.cumsum(inc, out=clock[1:])
    clock *= x**index
    vals = x * np.exp(xi)
    if killed:
        vals[-1] = 0.0
    knots = Path(clock, vals, x, vals.size - 1 if killed else None)
    return TimeChangedPath(xi_path, clock, knots, knots, killed,
                           float(clock[-1]) if killed else math.inf)


def levy_from_pssmp(y_path: Path, index: float) -> Path:
    """``log(Y / x0)`` re-timed by ``s(t) = int_0^t Y**-index``; the absorption point is dropped."""
    if not index > 0:
        raise ValueError("index must be positive")
    t = y_path.alive_times
    y = y_path.alive_values
    if y_path.kill_index is not None and y[-1] <= 0:
        t, y = t[:-1], y[:-1]
    if np.any(y <= 0):
        raise ValueError("path must be strictly positive before absorption")
    yi = y**index
    inc = np.diff(t) / _log_mean(yi[:-1], yi[1:])
    s = np.zeros(t.size)
    np.cumsum(inc, out=s[1:])
    xi = np.log(y / y_path.x0)
    xi[0] = 0.0
    return Path(s, xi, 0.0)


def reverse_path(path) -> Path:
    """Knot-wise time reversal ``r -> Y((T - r)-)`` of an absorbed path.

    The output starts at the absorption value 0 and ends at the initial value at
    ``r = T``; its last knot is marked as the end of life. Reading the reversed
    value at ``r`` uses :func:`reversed_value`, which takes the left limit.
    """
    if isinstance(path, TimeChangedPath):
        if not path.absorbed:
            raise ValueError("path is not absorbed")
        p = path.knots
    else:
        p = path
        if p.kill_index is None:
            raise ValueError("path is not absorbed")
    t = p.alive_times
    v = p.alive_values
    T = t[-1]
    rt = (T - t)[::-1]
    rt[0] = 0.0
    rv = v[::-1].copy()
    return Path(rt, rv, float(rv[0]), rt.size - 1)


def reversed_value(rev: Path, r: float) -> float:
    """``Y((T - r)-)``: value at the smallest reversed knot time strictly after ``r``."""
    t = rev.alive_times
    j = int(np.searchsorted(t, r, side="right"))
    if j >= t.size:
        return float("nan")
    return float(rev.values[j])


# --------------------------------------------------------------------------
# CB simulation via the CB clock of a stable path


def cb_spec(params: StableParams, x: float, dt: float, *, horizon: float = math.inf,
            eps: float = 0.1, levels=(), upper: float = math.inf, x_ref: float | None = None,
            uniform: bool = False) -> WalkSpec:
    """Walk configuration for a CB path started at ``x``.

    ``dt`` is the CB-clock step (Levy step ``dt * X``) unless ``uniform`` is set,
    in which case it is a fixed Levy-time step refined by factors of 2 below ``0.05 x``.
    """
    return WalkSpec(params, float(x), sign=1,
                    mode=K.MODE_UNIFORM if uniform else K.MODE_RELATIVE,
                    h=dt, eps=eps, levels=tuple(levels), t_stop=horizon, upper=upper,
                    x_ref=x_ref)


def simulate_cb_paths(params: StableParams, x: float, n_paths: int, dt: float, seed: int,
                      *, horizon: float = math.inf, dt_out: float | None = None,
                      **kw) -> list[TimeChangedPath]:
    """CB paths built by ``cb_time_change`` from recorded Levy paths (run to extinction)."""
    rec = record_paths(cb_spec(params, x, dt, horizon=horizon, **kw), n_paths, seed)
    return [cb_time_change(rec.levy_path(i), dt_out) for i in range(n_paths)]


def index_shift_check(params: StableParams, x: float, n_paths: int, dt: float, seed: int,
                      *, k: float = 2.0, t: float = 0.25) -> IdentityCheck:
    """Two-sample KS check that ``k Y_{k**-(alpha-1) t}`` from ``x`` matches ``Y_t`` from ``kx``."""
    t0 = time.perf_counter()
    b = params.alpha - 1.0
    s_small = k ** (-b) * t
    r1 = run_batch(cb_spec(params, x, dt, horizon=s_small, x_ref=1.0), n_paths,
                   derive_seed(seed, 1), t_obs=[s_small])
    r2 = run_batch(cb_spec(params, k * x, dt, horizon=t, x_ref=1.0), n_paths,
                   derive_seed(seed, 2), t_obs=[t])
    a = k * r1.obs[:, 0]
    c = r2.obs[:, 0]
    d, p = ks_2samp(a, c)
    est = MCEstimate.from_samples(a, seed)
    ref = MCEstimate.from_samples(c, seed)
    return IdentityCheck(
        name="selfsim_index_shift",
        params={"alpha": params.alpha, "c_plus": params.c_plus, "x": x, "k": k, "t": t},
        closed_form=ref.mean, estimate=est,
        z=(est.mean - ref.mean) / math.hypot(est.stderr, ref.stderr),
        bias_budget=0.0, passed=p > 0.01, ks=(d, p),
        runtime_s=time.perf_counter() - t0,
        diagnostics={"reference_stderr": ref.stderr},
    )
