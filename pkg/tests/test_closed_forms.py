import math
import sys

import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from csbp import closed_forms as cf
from csbp.special_functions import scale_Z
from csbp.stable_levy import StableParams

S15 = StableParams(1.5, 1.0)
S2 = StableParams(2.0, 0.5)

# u_t from a numerical solve of du/dt = -c u**alpha (rtol 1e-12)
U_ORACLE = [((1.5, 1.0), 0.5, 1.0, 0.6400000000000723), ((1.5, 1.0), 2.0, 3.0, 0.4019237886468295),
            ((1.3, 0.5), 1.0, 2.0, 1.1368504262074364), ((2.0, 0.5), 2.0, 1.0, 0.5000000000000919)]
# exp(-x u_t) * d u_t / d lam from the same solver and central differences
CBI_ORACLE = [((1.5, 1.0), 1.0, 0.5, 1.0, 0.2699737211113451),
              ((1.5, 1.0), 2.0, 1.0, 0.5, 0.23362931556351432)]


@pytest.mark.parametrize("p,t,lam,val", U_ORACLE)
def test_u_t_against_ode(p, t, lam, val):
    assert cf.u_t(StableParams(*p), t, lam) == pytest.approx(val, rel=1e-9)


def test_u_t_basic():
    assert cf.u_t(S15, 0.0, 7.0) == 7.0
    assert cf.u_t(S2, 2.0, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert cf.u_t(S15, 3.0, 2.0) == pytest.approx(cf.u_t(S15, 1.0, cf.u_t(S15, 2.0, 2.0)), rel=1e-12)


def test_cb_laplace():
    assert cf.cb_laplace(S15, 0.0, 1.0, 1.0) == 1.0
    assert cf.cb_laplace(S2, 1.0, 2.0, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert cf.cb_laplace(S15, 1.0, 0.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_extinction_cdf():
    assert cf.extinction_cdf(S2, 1.0, 2.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert cf.extinction_cdf(S15, 1.0, 1.0) == pytest.approx(math.exp(-4.0), rel=1e-14)
    ts = [0.1 * k for k in range(1, 60)]
    vals = [cf.extinction_cdf(S15, 1.0, t) for t in ts]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_frechet_density():
    tot, _ = integrate.quad(lambda s: cf.frechet_density(S15, s), 0, math.inf, epsabs=1e-12,
                            limit=200)
    assert abs(tot - 1.0) < 1e-8
    for t in (0.3, 1.0, 2.5):
        h = 1e-5
        fd = (cf.extinction_cdf(S15, 1.0, t + h) - cf.extinction_cdf(S15, 1.0, t - h)) / (2 * h)
        assert abs(cf.frechet_density(S15, t) - fd) < 1e-8
    assert cf.frechet_density(S15, 1e-6) < 1e-12
    lit, _ = integrate.quad(lambda s: cf.frechet_density(S15, s, literal=True), 0, math.inf,
                            epsabs=1e-12, limit=200)
    assert lit == pytest.approx(0.5, abs=1e-8)


def test_entrance_law_normalization():
    for p in (S15, S2, StableParams(1.3, 0.7)):
        m = cf.canonical_m(p)
        assert m == pytest.approx(p.c_plus * (p.alpha - 1) * math.gamma(p.alpha))
        assert abs(cf.entrance_law_expectation(p, m, 0.7, lambda z: 1.0) - 1.0) < 1e-8


def test_entrance_law_mean_against_gamma_quadrature():
    # second quadrature: Gamma(alpha) density with scale c_t
    m = cf.canonical_m(S15)
    ct = cf.qs_scale(S15, 1.0)
    dens = lambda z: z ** 0.5 * math.exp(-z / ct) / (math.gamma(1.5) * ct**1.5)
    ref, _ = integrate.quad(lambda z: z * dens(z), 0, math.inf, epsabs=1e-13)
    val = cf.entrance_law_expectation(S15, m, 1.0, lambda z: z)
    assert val == pytest.approx(ref, rel=1e-8)
    assert val == pytest.approx(0.375, rel=1e-8)


def test_entrance_law_time_scaling():
    m = cf.canonical_m(S15)
    k, a, t = 3.0, 0.2, 0.5
    scale = k ** (1 / 0.5)
    lhs = cf.entrance_law_expectation(S15, m, k * t, lambda z: float(z <= a * scale),
                                      breakpoints=[a * scale])
    rhs = cf.entrance_law_expectation(S15, m, t, lambda z: float(z <= a), breakpoints=[a])
    assert abs(lhs - rhs) < 1e-8


def test_entrance_law_literal_form_differs():
    m = cf.canonical_m(S15)
    f = lambda z: float(z <= 0.5)
    a = cf.entrance_law_expectation(S15, m, 1.0, f, breakpoints=[0.5])
    b = cf.entrance_law_expectation(S15, m, 1.0, f, breakpoints=[0.5], literal=True)
    assert abs(a - b) > 0.01


def test_cbi_entrance():
    assert cf.cbi_entrance_laplace(S15, 0.0, 3.0) == 1.0
    assert cf.cbi_entrance_laplace(S2, 2.0, 1.0) == pytest.approx(0.25, rel=1e-14)
    assert abs(cf.cbi_entrance_laplace(S15, 1.0, 1.0) - cf.cbi_exact_laplace(S15, 0.0, 1.0, 1.0)) < 1e-12


@pytest.mark.parametrize("p,x,t,lam,val", CBI_ORACLE)
def test_cbi_exact_against_derivative_oracle(p, x, t, lam, val):
    assert cf.cbi_exact_laplace(StableParams(*p), x, t, lam) == pytest.approx(val, rel=1e-7)


def test_cbi_exact_basic():
    assert cf.cbi_exact_laplace(S15, 1.3, 0.0, 0.7) == pytest.approx(math.exp(-1.3 * 0.7), rel=1e-14)
    assert cf.cbi_exact_laplace(S2, 0.0, 2.0, 1.0) == pytest.approx(0.25, rel=1e-14)
    vals = [cf.cbi_exact_laplace(S15, 1.0, 1.0, l) for l in (0.1, 0.5, 1, 2, 5)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_qs_limit():
    assert cf.qs_limit(S2, 1.0) == pytest.approx(0.5, rel=1e-15)
    # a Laplace transform: 1 at lam = 0+, the mass at 0 (none) as lam -> inf
    assert cf.qs_limit(S15, 1e-8) > 1 - 1e-4
    assert cf.qs_limit(S15, 1e8) < 1e-3


def test_qs_ratio_convergence():
    for lam in (0.5, 1.0, 2.0):
        assert abs(1 - cf.qs_ratio(S15, 1e6, lam) - cf.qs_limit(S15, lam)) < 1e-4
        assert abs(cf.survival_conditioned_exact(S15, 1.0, 1e6, lam) - cf.qs_limit(S15, lam)) < 1e-3
    vals = [abs(cf.survival_conditioned_exact(S15, 1.0, t, 1.0) - cf.qs_limit(S15, 1.0))
            for t in (1, 10, 100, 1e4)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_tail_asymptotic():
    r6 = cf.extinction_sf(S15, 1.0, 1e6) / cf.tail_I_asymptotic(S15, 1e6)
    r8 = cf.extinction_sf(S15, 1.0, 1e8) / cf.tail_I_asymptotic(S15, 1e8)
    assert abs(r6 - 1) < 1e-3 and abs(r8 - 1) < 1e-4
    vals = [cf.tail_I_asymptotic(S15, t) for t in (1, 10, 100)]
    assert vals[0] > vals[1] > vals[2]


def test_cbi_qs_limit():
    assert cf.cbi_qs_limit(S2, 1.0) == pytest.approx(0.25, rel=1e-15)
    assert cf.cbi_qs_limit(S15, 1e-12) == pytest.approx(1.0, abs=1e-5)
    t = 1e6
    ct = cf.qs_scale(S15, t)
    assert abs(cf.cbi_exact_laplace(S15, 1.0, t, 1.0 / ct) - cf.cbi_qs_limit(S15, 1.0)) < 1e-3


def test_infimum_laws():
    assert cf.cor1_infimum_law(S15, 1.0, 0.5) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert cf.cor1_infimum_law(S15, 1.0, 0.0) == 1.0
    assert cf.cor1_infimum_law(S15, 1.0, 1.0) == 0.0
    assert cf.prop3_infimum_law(1.5, -1.0, -2.0) == pytest.approx(0.7950600976206501, rel=1e-14)
    assert cf.prop3_infimum_law(1.5, -1.0, -60.0) == pytest.approx(1.0, abs=1e-12)
    assert cf.prop3_infimum_law(1.5, -1.0, -1.0 - 1e-12) < 1e-5
    with pytest.raises(ValueError):
        cf.prop3_infimum_law(1.5, -2.0, -1.0)


def test_two_sided_exit():
    assert cf.thm2_exit(S2, 1.0, 2.0, 0.0, "ii") == pytest.approx(0.5, rel=1e-14)
    assert cf.thm2_exit(S2, 1.0, 2.0, 0.0, "i") == pytest.approx(0.5, rel=1e-14)
    for x, a in ((1.0, 2.0), (1.0, 4.0), (0.3, 1.7)):
        assert cf.thm2_exit(S15, x, a, 0.0, "i") + cf.thm2_exit(S15, x, a, 0.0, "ii") == 1.0
        for q in (0.1, 0.5, 2.0):
            assert cf.thm2_exit(S15, x, a, q, "i") + cf.thm2_exit(S15, x, a, q, "ii") <= 1.0
    with pytest.raises(ValueError):
        cf.thm2_exit(S15, 2.0, 1.0, 0.0, "i")
    with pytest.raises(ValueError):
        cf.thm2_exit(S15, 1.0, 2.0, 0.0, "iii")


def test_exponential_functional_equivalence():
    for x in (1.0, 0.4, 2.5):
        a = math.log(math.e / 1.0)
        q = 0.7
        for br7, br2 in (("expflp1", "i"), ("expflp2", "ii")):
            v7 = cf.thm7_exp_functional(S15, math.log(math.e * x / x), q * x**1.5, br7)
            v2 = cf.thm2_exit(S15, x, math.e * x, q, br2)
            assert abs(v7 - v2) < 1e-10


def test_exponential_functional_limits():
    vals = [cf.thm7_exp_functional(S15, a, 0.5, "expflp2") for a in range(1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])) and vals[-1] <= 1.0
    s = cf.thm7_exp_functional(S15, 1.0, 1e-8, "expflp1") + cf.thm7_exp_functional(S15, 1.0, 1e-8, "expflp2")
    assert abs(s - 1.0) < 1e-4


def test_cancellation_is_refused():
    with pytest.raises(FloatingPointError):
        cf.thm7_exp_functional(S15, 4.0, 0.5, "expflp1")
    assert 0 < cf.thm7_exp_functional(S15, 3.0, 0.5, "expflp1") < 0.01


def test_cor4():
    assert cf.cor4_expn(S15, 2.0, 0.0) == pytest.approx(2.0 * 0.5)
    r = [cf.cor4_expn(S15, 2.0, l) / cf.cbi_entrance_laplace(S15, 1.0, l) for l in (0.1, 1.0, 5.0)]
    assert max(r) - min(r) < 1e-12
    assert cf.cor4_expn(S15, 2.0, 1e9) < 1e-6


def test_prop4_sup_law():
    assert cf.prop4_sup_law(1.0, 1.0, 1.0) == 0.0
    assert cf.prop4_sup_law(1.0, 1.0, 2.0) == 0.5
    assert cf.prop4_sup_law(1.0, 1.0, 1e12) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cf.prop4_sup_law(0.5, 1.0, 1.5)


def test_xi_exponents():
    m = cf.canonical_m(S15)
    assert cf.xi_exponent(1.5, m, -1.0) == 0.0
    assert cf.xi_star_exponent(1.5, 2.0, 1.0) == 0.0
    r = [cf.xi_exponent(1.5, m, l - 1) / cf.xi_star_exponent(1.5, 2.0, l) for l in (2.0, 2.5, 3.0)]
    assert max(r) - min(r) < 1e-12 * abs(r[0])
    assert r[0] == pytest.approx(m / 2.0, rel=1e-12)
    xe = cf.XiExponents.canonical(S15)
    assert xe.m == m
    with pytest.raises(ValueError):
        cf.XiExponents(1.5, -1.0)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(1.05, 2.0), s=st.floats(0.0, 3.0), t=st.floats(0.0, 3.0),
       lam=st.floats(1e-3, 50.0))
def test_u_semigroup(alpha, s, t, lam):
    p = StableParams(alpha, 1.0)
    assert cf.u_t(p, s + t, lam) == pytest.approx(cf.u_t(p, s, cf.u_t(p, t, lam)), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(1.05, 2.0), x=st.floats(0.01, 3.0), r=st.floats(1.01, 5.0),
       q=st.floats(0.0, 3.0))
def test_exit_transforms_are_subprobabilities(alpha, x, r, q):
    p = StableParams(alpha, 1.0)
    ii = cf.thm2_exit(p, x, r * x, q, "ii")
    try:
        i = cf.thm2_exit(p, x, r * x, q, "i")
    except FloatingPointError:
        # refusals are only allowed where the cancelling terms exceed 1e-8 / (8 eps)
        a = r * x
        terms = scale_Z(p, q, a - x) + ii * scale_Z(p, q, a)
        assert terms > cf.CANCELLATION_TOL / (8 * sys.float_info.epsilon)
        i = 0.0
    assert -1e-9 <= i and -1e-9 <= ii and i + ii <= 1.0 + 1e-9


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(1.05, 2.0), lam=st.floats(1e-3, 100.0))
def test_qs_limits_in_unit_interval(alpha, lam):
    p = StableParams(alpha, 1.0)
    assert 0.0 < cf.qs_limit(p, lam) < 1.0
    assert 0.0 < cf.cbi_qs_limit(p, lam) < 1.0
