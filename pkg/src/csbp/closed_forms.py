"""Exact laws of the stable CB process, its immigration version and related functionals.

Conventions: ``psi(lam) = c lam**alpha`` and ``beta = alpha - 1`` throughout.
"""
from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from scipy import integrate

from .special_functions import log_ml, log_scale_W_ratio, ml, scale_Z
from .stable_levy import StableParams, psi

QUAD_EPSABS = 1e-10
QUAD_LIMIT = 400
CANCELLATION_TOL = 1e-8


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class XiExponents:
    """Laplace exponents of the Levy processes behind the pssMp forms.

    ``Psi(lam) = m Gamma(lam+alpha) / (Gamma(lam) Gamma(alpha))`` with
    ``E exp(-lam xi_1) = exp(Psi(lam))``, so ``m = -E xi_1``. The tilted
    exponent ``Psi*`` has mean ``m_star / (alpha - 1)``.
    """

    alpha: float
    m: float
    m_star: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if not (self.m > 0 and self.m_star > 0):
            raise ValueError("m and m_star must be positive")

    @classmethod
    def canonical(cls, params: StableParams, m_star: float = 1.0) -> "XiExponents":
        return cls(params.alpha, canonical_m(params), m_star)


def canonical_m(params: StableParams) -> float:
    """The value of m that normalizes the entrance law: ``c (alpha-1) Gamma(alpha)``."""
    return params.c_plus * (params.alpha - 1.0) * math.gamma(params.alpha)


def _beta(params: StableParams) -> float:
    return params.alpha - 1.0


def u_t(params: StableParams, t: float, lam: float) -> float:
    """Solution of ``du/dt = -psi(u)``, ``u_0 = lam``."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    b = _beta(params)
    if t == 0:
        return float(lam)
    return (params.c_plus * b * t + lam ** (-b)) ** (-1.0 / b)


def cb_laplace(params: StableParams, x: float, t: float, lam: float) -> float:
    """``E_x exp(-lam Y_t) = exp(-x u_t(lam))``."""
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 1.0
    return math.exp(-x * u_t(params, t, lam))


def extinction_rate(params: StableParams, t: float) -> float:
    """``lim_{lam -> inf} u_t(lam) = [c (alpha-1) t]**(-1/(alpha-1))``."""
    b = _beta(params)
    return (params.c_plus * b * t) ** (-1.0 / b)


def extinction_cdf(params: StableParams, x: float, t: float) -> float:
    """``P_x(T <= t)`` for the extinction time ``T``."""
    if not (x > 0 and t > 0):
        raise ValueError("x and t must be positive")
    return math.exp(-x * extinction_rate(params, t))


def extinction_sf(params: StableParams, x: float, t: float) -> float:
    """``P_x(T > t)``, accurate when it is tiny."""
    if not (x > 0 and t > 0):
        raise ValueError("x and t must be positive")
    return -math.expm1(-x * extinction_rate(params, t))


def _difference(big: float, small_part: float, what: str) -> float:
    # big - small_part where both may be huge; refuse results lost to cancellation
    out = big - small_part
    err = 8.0 * sys.float_info.epsilon * (abs(big) + abs(small_part))
    if err > CANCELLATION_TOL:
        raise FloatingPointError(
            f"{what}: cancellation error {err:.2g} exceeds {CANCELLATION_TOL:g}; "
            "the arguments are too large for double precision")
    return out


def frechet_density(params: StableParams, s: float, *, literal: bool = False) -> float:
    """Density of the exponential functional, i.e. of the extinction time from ``x = 1``.

    This is the derivative of ``exp(-v**(-1/(alpha-1)))``, ``v = c (alpha-1) s``.
    ``literal=True`` drops the factor ``1/(alpha-1)`` produced by the chain
    rule; that variant integrates to ``alpha - 1``.
    """
    if not s > 0:
        raise ValueError(f"argument must be positive, got {s}")
    b = _beta(params)
    k = params.c_plus * b
    v = k * s
    # (k/b) v**(-alpha/b) exp(-v**(-1/b)), in log form to avoid overflow
    lg = math.log(k) - (params.alpha / b) * math.log(v) - v ** (-1.0 / b)
    if not literal:
        lg -= math.log(b)
    return math.exp(lg)


def tail_I_asymptotic(params: StableParams, t: float) -> float:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return extinction_rate(params, t)


def _quad(fun, a, b, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fun, a, b, epsabs=QUAD_EPSABS, epsrel=1e-12,
                                    limit=QUAD_LIMIT, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def entrance_law_expectation(params: StableParams, m: float, t: float,
                             f: Callable[[float], float], *,
                             breakpoints: Sequence[float] = (),
                             literal: bool = False) -> float:
    """Expectation of ``f`` under the entrance law from 0 at CB time ``t``.

    Computes ``(c/m) int_0^inf x**(-(2 alpha-1)/(alpha-1)) f(z(x)) exp(-x**(-1/(alpha-1))) dx``
    with ``z(x) = (t c (alpha-1) / x)**(1/(alpha-1))``; the law is Gamma with shape
    ``alpha`` and scale ``[c (alpha-1) t]**(1/(alpha-1))``. ``literal=True`` uses
    ``z(x) = t c (alpha-1) / x`` instead, which describes ``Y**(alpha-1)``.

    ``breakpoints`` lists values of ``z`` where ``f`` is discontinuous; the
    integration range is split there.
    """
    if not (m > 0 and t > 0):
        raise ValueError("m and t must be positive")
    a, c = params.alpha, params.c_plus
    b = a - 1.0
    k = t * c * b
    p = (2.0 * a - 1.0) / b

    def z_of(x: float) -> float:
        return k / x if literal else (k / x) ** (1.0 / b)

    def x_of(z: float) -> float:
        return k / z if literal else k / z**b

    def integrand(x: float) -> float:
        if x <= 0.0:
            return 0.0
        lw = -p * math.log(x) - x ** (-1.0 / b)
        if lw < -745.0:
            return 0.0
        return math.exp(lw) * f(z_of(x))

    cuts = sorted({x_of(z) for z in breakpoints if z > 0} | {1.0})
    edges = [0.0] + cuts + [math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _quad(integrand, lo, hi)
    return (c / m) * total


def cbi_entrance_laplace(params: StableParams, t: float, lam: float) -> float:
    """Laplace transform at time ``t`` of the immigration process started at 0."""
    if t < 0 or lam < 0:
        raise ValueError("t and lambda must be nonnegative")
    b = _beta(params)
    return (1.0 + params.c_plus * b * t * lam**b) ** (-params.alpha / b)


def cbi_exact_laplace(params: StableParams, x: float, t: float, lam: float) -> float:
    """``E_x^up exp(-lam Y_t) = exp(-x u_t) psi(u_t) / psi(lam)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    u = u_t(params, t, lam)
    return math.exp(-x * u) * (u / lam) ** params.alpha


def qs_scale(params: StableParams, t: float) -> float:
    """``c_t = [c (alpha-1) t]**(1/(alpha-1))``."""
    b = _beta(params)
    return (params.c_plus * b * t) ** (1.0 / b)


def qs_limit(params: StableParams, lam: float) -> float:
    """Limit of ``E_x(exp(-lam Y_t / c_t) | T > t)`` as ``t -> inf``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    b = _beta(params)
    # 1 - (1 + lam**-b)**(-1/b), written to keep precision at both ends
    return -math.expm1(-math.log1p(lam ** (-b)) / b)


def qs_ratio(params: StableParams, t: float, lam: float) -> float:
    """``u_t(lam / c_t) / u_t(inf)``.

    As ``t -> inf`` this tends to ``E_x(1 - exp(-lam Y_t / c_t) | T > t)``, so
    ``1 - qs_ratio`` converges to :func:`qs_limit`.
    """
    return u_t(params, t, lam / qs_scale(params, t)) / extinction_rate(params, t)


def survival_conditioned_exact(params: StableParams, x: float, t: float, lam: float) -> float:
    """Exact ``E_x(exp(-lam Y_t / c_t) | T > t)`` at finite ``t``."""
    ct = qs_scale(params, t)
    num = math.exp(-x * u_t(params, t, lam / ct)) - math.exp(-x * extinction_rate(params, t))
    return num / -math.expm1(-x * extinction_rate(params, t))


def cbi_qs_limit(params: StableParams, lam: float) -> float:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    b = _beta(params)
    return (lam**b + 1.0) ** (-params.alpha / b)


def cor1_infimum_law(params: StableParams, y: float, z: float) -> float:
    """Probability that the conditioned dual started at ``y`` never goes below ``z``."""
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    if z > y:
        return 0.0
    if z <= 0:
        return 1.0
    return ((y - z) / y) ** (params.alpha - 1.0)


def prop3_infimum_law(alpha: float, u: float, v: float) -> float:
    """Probability that ``xi`` stays above ``v`` before its last passage above ``u``."""
    if not (v < u < 0):
        raise ValueError(f"need v < u < 0, got u={u}, v={v}")
    return (-math.expm1(v - u)) ** (alpha - 1.0)


def thm2_exit(params: StableParams, x: float, a: float, q: float,
              branch: Literal["i", "ii"]) -> float:
    """Two-sided exit transforms of the CB process with progeny discount.

    ``i``: ``E_x[exp(-q int_0^{T_a+} Y); T_a+ < T_0-]``, reaching ``a`` first.
    ``ii``: ``E_x[exp(-q int_0^{T_0-} Y); T_0- < T_a+]``, extinction first.
    """
    if not (0 < x <= a):
        raise ValueError(f"need 0 < x <= a, got x={x}, a={a}")
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    ratio = 0.0 if x == a else math.exp(log_scale_W_ratio(params, q, a - x, a))
    if branch == "ii":
        return ratio
    if branch == "i":
        if q == 0:
            return 1.0 - ratio
        return _difference(scale_Z(params, q, a - x), ratio * scale_Z(params, q, a),
                           "thm2_exit branch i")
    raise ValueError(f"branch must be 'i' or 'ii', got {branch!r}")


def thm7_exp_functional(params: StableParams, a: float, q: float,
                        branch: Literal["expflp1", "expflp2"]) -> float:
    """Mittag-Leffler expressions for the exponential functional up to first passage.

    Equal to ``thm2_exit(x, x e**a, q x**-alpha)`` for any ``x > 0``.
    """
    if not (a > 0 and q > 0):
        raise ValueError("a and q must be positive")
    al, c = params.alpha, params.c_plus
    r = q / c
    inner = r * math.expm1(a) ** al
    outer = r * math.exp(al * a)
    fac = (-math.expm1(-a)) ** (al - 1.0)
    ratio = fac * math.exp(log_ml(al, inner, derivative=True) - log_ml(al, outer, derivative=True))
    if branch == "expflp2":
        return ratio
    if branch == "expflp1":
        return _difference(ml(al, inner), ratio * ml(al, outer), "expflp1")
    raise ValueError(f"branch must be 'expflp1' or 'expflp2', got {branch!r}")


def cor4_expn(params: StableParams, m_star: float, lam: float) -> float:
    """``E[(I*)**-1 exp(-lam / I*)]``-type transform of the tilted exponential functional."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    return m_star * (params.alpha - 1.0) * cbi_entrance_laplace(params, 1.0, lam)


def prop4_sup_law(m_star: float, y: float, z: float) -> float:
    """``1 - y / (m* z)``; domain ``z >= y > 0`` and ``m* z >= y``."""
    if not (z >= y > 0):
        raise ValueError(f"need z >= y > 0, got y={y}, z={z}")
    if m_star * z < y:
        raise ValueError(f"formula domain requires m* z >= y (m*={m_star}, y={y}, z={z})")
    return 1.0 - y / (m_star * z)


def _gamma_ratio(num: float, den: float) -> float:
    def sgn(v: float) -> float:
        return 1.0 if v > 0 or math.floor(v) % 2 == 0 else -1.0
    return sgn(num) * sgn(den) * math.exp(math.lgamma(num) - math.lgamma(den))


def _is_nonpos_int(v: float) -> bool:
    return v <= 0 and v == math.floor(v)


def xi_exponent(alpha: float, m: float, lam: float) -> float:
    """``Psi(lam) = m Gamma(lam+alpha) / (Gamma(lam) Gamma(alpha))``; exact 0 at lam = 0, -1, ..."""
    if _is_nonpos_int(lam):
        return 0.0
    if _is_nonpos_int(lam + alpha):
        raise ValueError(f"lambda={lam} is a pole of Gamma(lambda + alpha)")
    return m * _gamma_ratio(lam + alpha, lam) / math.gamma(alpha)


def xi_star_exponent(alpha: float, m_star: float, lam: float) -> float:
    """``Psi*(lam) = m* Gamma(lam-1+alpha) / (Gamma(lam-1) Gamma(alpha))``; exact 0 at lam = 1, 0, ..."""
    if _is_nonpos_int(lam - 1.0):
        return 0.0
    if _is_nonpos_int(lam - 1.0 + alpha):
        raise ValueError(f"lambda={lam} is a pole of Gamma(lambda - 1 + alpha)")
    return m_star * _gamma_ratio(lam - 1.0 + alpha, lam - 1.0) / math.gamma(alpha)
