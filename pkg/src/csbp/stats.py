"""Kolmogorov-Smirnov statistics with asymptotic p-values."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import kolmogorov

MIN_SAMPLES = 50


def ks_test(samples, cdf: Callable) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value against ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    try:
        F = np.asarray(cdf(x), dtype=float)
        if F.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        F = np.array([cdf(v) for v in x], dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - F)), float(np.max(F - (i - 1) / n)))
    return d, float(kolmogorov(d * math.sqrt(n)))


def ess(weights) -> float:
    """Kish effective sample size ``(sum w)**2 / sum w**2``."""
    w = np.asarray(weights, dtype=float)
    s2 = float(np.sum(w * w))
    return float(np.sum(w)) ** 2 / s2 if s2 > 0 else 0.0


def _ecdf(x: np.ndarray, w: np.ndarray | None, at: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if w is None:
        cw = np.arange(1, xs.size + 1) / xs.size
    else:
        ws = w[order]
        cw = np.cumsum(ws) / np.sum(ws)
    idx = np.searchsorted(xs, at, side="right")
    out = np.zeros(at.size)
    mask = idx > 0
    out[mask] = cw[idx[mask] - 1]
    return out


def ks_2samp(a, b, weights_a=None, weights_b=None) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value.

    Optional weights give weighted empirical CDFs; the sample size entering the
    p-value is then the Kish effective size.
    """
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    wa = None if weights_a is None else np.asarray(weights_a, dtype=float)
    wb = None if weights_b is None else np.asarray(weights_b, dtype=float)
    if wa is not None:
        keep = wa > 0
        xa, wa = xa[keep], wa[keep]
    if wb is not None:
        keep = wb > 0
        xb, wb = xb[keep], wb[keep]
    na = xa.size if wa is None else ess(wa)
    nb = xb.size if wb is None else ess(wb)
    if min(xa.size, xb.size) < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples in each group")
    pooled = np.unique(np.concatenate([xa, xb]))
    d = float(np.max(np.abs(_ecdf(xa, wa, pooled) - _ecdf(xb, wb, pooled))))
    en = math.sqrt(na * nb / (na + nb))
    return d, float(kolmogorov(d * en))
