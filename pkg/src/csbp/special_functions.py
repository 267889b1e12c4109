"""Gamma, Mittag-Leffler and the scale functions of the stable process.

The scale functions carry the scale constant ``c_plus`` through the rule
``W_c^(q)(x) = W_1^(q/c)(x) / c`` which follows from
``1 / (c lam**alpha - q) = (1/c) / (lam**alpha - q/c)``.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .stable_levy import StableParams

_EPS = sys.float_info.epsilon
# negative arguments: alternating series, cancellation grows like exp(|x|**(1/alpha))
NEG_ARG_LIMIT = 30.0
# positive arguments: stop before the value overflows
POS_ROOT_LIMIT = 600.0
_MAX_TERMS = 100_000


@dataclass(frozen=True, slots=True)
class SpecialFnResult:
    """A series value together with a bound on its truncation error."""

    value: float
    abs_error_estimate: float
    n_terms: int = 0


def gamma(x: float) -> float:
    return math.gamma(x)


def _check_range(alpha: float, x: float) -> None:
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x}")
    if x < -NEG_ARG_LIMIT:
        raise OverflowError(f"Mittag-Leffler argument {x} below -{NEG_ARG_LIMIT}")
    if x > 0 and x ** (1.0 / alpha) > POS_ROOT_LIMIT:
        raise OverflowError(f"Mittag-Leffler argument {x} too large for alpha={alpha}")


def _series(alpha: float, x: float, deriv: bool, n_terms: int | None) -> SpecialFnResult:
    # terms t_n = x**n / Gamma(1 + alpha n)            (deriv=False, n >= 0)
    #         t_n = n x**(n-1) / Gamma(1 + alpha n)     (deriv=True,  n >= 1)
    if x == 0.0:
        v = 1.0 / math.gamma(1.0 + alpha) if deriv else 1.0
        return SpecialFnResult(v, 0.0, 1)
    logx = math.log(abs(x))
    neg = x < 0

    def term(n: int) -> float:
        if deriv:
            lt = math.log(n) + (n - 1) * logx - math.lgamma(1.0 + alpha * n)
            sgn = -1.0 if (neg and (n - 1) % 2) else 1.0
        else:
            lt = n * logx - math.lgamma(1.0 + alpha * n)
            sgn = -1.0 if (neg and n % 2) else 1.0
        return sgn * math.exp(lt)

    start = 1 if deriv else 0
    total = 0.0
    abs_sum = 0.0
    n = start
    prev = None
    while True:
        t = term(n)
        total += t
        abs_sum += abs(t)
        n += 1
        if n_terms is not None:
            if n - start >= n_terms:
                break
            continue
        # stop once the terms decrease and are negligible
        if prev is not None and abs(t) < abs(prev) and abs(t) <= 0.25 * _EPS * abs_sum:
            break
        if n - start > _MAX_TERMS:
            raise RuntimeError("Mittag-Leffler series failed to converge")
        prev = t
    nxt = abs(term(n))
    nxt2 = abs(term(n + 1))
    ratio = nxt2 / nxt if nxt > 0 else 0.0
    if neg:
        trunc = nxt if ratio < 1.0 else math.inf
    else:
        trunc = nxt / (1.0 - ratio) if ratio < 1.0 else math.inf
    rounding = 2.0 * (n - start) * _EPS * abs_sum
    return SpecialFnResult(total, trunc + rounding, n - start)


def mittag_leffler(alpha: float, x: float, *, derivative: bool = False,
                   n_terms: int | None = None) -> SpecialFnResult:
    """Mittag-Leffler function ``E_alpha(x) = sum x**n / Gamma(1 + alpha n)``.

    Parameters
    ----------
    alpha : float
        Index, ``alpha >= 1`` (``alpha = 1`` gives ``exp``).
    x : float
        Real argument. Negative arguments are limited to ``|x| <= 30``;
        positive arguments to ``x**(1/alpha) <= 600``.
    derivative : bool
        Return ``E'_alpha(x)`` from the term-wise differentiated series.
    n_terms : int, optional
        Fix the number of terms instead of stopping on the term ratio.

    Returns
    -------
    SpecialFnResult
        Value and a bound on truncation plus accumulated rounding error.
    """
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    _check_range(alpha, x)
    return _series(alpha, x, derivative, n_terms)


def log_ml(alpha: float, x: float, *, derivative: bool = False) -> float:
    """``log E_alpha(x)`` (or ``log E'_alpha(x)``) for ``x >= 0``, without overflow.

    Beyond the series range the leading term of the asymptotic expansion
    ``E_alpha(x) ~ exp(x**(1/alpha)) / alpha`` is used; the neglected terms
    are algebraic in ``x`` and smaller by a factor ``exp(-600)``.
    """
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError(f"argument must be finite and nonnegative, got {x}")
    y = x ** (1.0 / alpha)
    if y <= POS_ROOT_LIMIT:
        return math.log(_series(alpha, x, derivative, None).value)
    if derivative:
        return y - 2.0 * math.log(alpha) + (1.0 / alpha - 1.0) * math.log(x)
    return y - math.log(alpha)


def ml(alpha: float, x: float) -> float:
    return mittag_leffler(alpha, x).value


def ml_deriv(alpha: float, x: float) -> float:
    return mittag_leffler(alpha, x, derivative=True).value


def scale_W(params: StableParams, q: float, x: float) -> float:
    """q-scale function ``W^(q)`` of the spectrally negative dual (0 for x < 0)."""
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    if x <= 0:
        return 0.0
    a, c = params.alpha, params.c_plus
    if q == 0:
        return x ** (a - 1.0) / (c * math.gamma(a))
    return a * x ** (a - 1.0) * ml_deriv(a, (q / c) * x**a) / c


def log_scale_W_ratio(params: StableParams, q: float, x: float, y: float) -> float:
    """``log(W^(q)(x) / W^(q)(y))`` for ``0 < x, y``, valid where the values overflow."""
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    if not (x > 0 and y > 0):
        raise ValueError("x and y must be positive")
    a, c = params.alpha, params.c_plus
    out = (a - 1.0) * math.log(x / y)
    if q > 0:
        out += (log_ml(a, (q / c) * x**a, derivative=True)
                - log_ml(a, (q / c) * y**a, derivative=True))
    return out


def scale_Z(params: StableParams, q: float, x: float) -> float:
    """``Z^(q)(x) = 1 + q * int_0^x W^(q)``; equal to 1 for x <= 0."""
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    if x <= 0 or q == 0:
        return 1.0
    a, c = params.alpha, params.c_plus
    return ml(a, (q / c) * x**a)
