"""Identity registry and Monte Carlo verification harness.

Each registered identity pairs a closed-form value with a seeded simulation.
Pass rules: ``|mean - closed_form| <= 4 stderr + bias_budget`` for moment
checks, ``p >= 0.01`` for KS checks unless the identity declares a maximal KS
distance ``ks_max``, in which case the statistic must stay below it.

Bias budgets scale with the step: ``budget(dt) = budget_ref * max(1, sqrt(dt / dt_ref))``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable

import numpy as np

from . import _engine
from . import _kernels as K
from ._engine import WalkSpec, derive_seed, record_paths, run_batch
from .closed_forms import (canonical_m, cbi_exact_laplace, cbi_qs_limit, cb_laplace,
                           cor1_infimum_law, entrance_law_expectation, extinction_cdf,
                           prop3_infimum_law, qs_limit, qs_scale, survival_conditioned_exact,
                           thm2_exit, thm7_exp_functional)
from .conditioned import (InfimumAbove, Laplace, cbi_sup_before_last_passage,
                          conditioned_dual_marginal, h_transform_estimate,
                          survival_conditioned_laplace)
from .lamperti import cb_time_change, index_shift_check, levy_from_pssmp
from .results import IdentityCheck, MCEstimate, moment_pass, z_score
from .stable_levy import StableParams
from .stats import ks_2samp, ks_test

__all__ = [
    "MCEstimate", "IdentityCheck", "Report", "REGISTRY", "run_identity", "run_suite",
    "load_config", "ConfigError", "ks_test", "ks_2samp",
]

SCHEMA_VERSION = 1
CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Identity:
    name: str
    runner: Callable
    defaults: dict
    description: str
    dt: float
    budget_ref: float = 0.0
    dt_ref: float = 1.0
    ks_max: float | None = None

    def budget(self, dt: float) -> float:
        return self.budget_ref * max(1.0, math.sqrt(dt / self.dt_ref))


REGISTRY: dict[str, Identity] = {}


def _register(name, description, defaults, dt, budget_ref=0.0, dt_ref=None, ks_max=None):
    def deco(fn):
        REGISTRY[name] = Identity(name, fn, dict(defaults), description, dt, budget_ref,
                                  dt_ref if dt_ref is not None else dt, ks_max)
        return fn
    return deco


def _params(p: dict) -> StableParams:
    return StableParams(p["alpha"], p.get("c_plus"))


def _moment_check(name, p, cf, est: MCEstimate, budget, t0, **diag) -> IdentityCheck:
    ok = moment_pass(est.mean, cf, est.stderr, budget) and not est.flagged
    extra = diag.pop("extra_pass", True)
    return IdentityCheck(name, p, float(cf), est, z_score(est.mean, cf, est.stderr), budget,
                         bool(ok and extra), runtime_s=time.perf_counter() - t0,
                         diagnostics=diag)


# --------------------------------------------------------------------------
# identities

_STABLE = {"alpha": 1.5, "c_plus": None}


@_register("extinction_frechet", "extinction time from x vs exp(-x [c(alpha-1)t]^(-1/(alpha-1)))",
           {**_STABLE, "x": 1.0, "eps": 0.1}, dt=5e-3, budget_ref=0.02, ks_max=0.02)
def _extinction(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x = p["x"]
    r = run_batch(WalkSpec(sp, x, h=dt, eps=p["eps"]), n, seed)
    T = np.where(r.killed, r.A, np.inf)
    b = sp.alpha - 1.0
    t_med = (x / math.log(2.0)) ** b / (sp.c_plus * b)
    cdf = lambda t: np.exp(-x * (sp.c_plus * b * np.asarray(t, float)) ** (-1.0 / b))
    d, pv = ks_test(T, cdf)
    est = MCEstimate.from_samples((T <= t_med).astype(float), seed)
    cf = extinction_cdf(sp, x, t_med)
    passed = d < ks_max if ks_max is not None else pv >= 0.01
    return IdentityCheck("extinction_frechet", p, cf, est, z_score(est.mean, cf, est.stderr),
                         budget, bool(passed), ks=(d, pv), runtime_s=time.perf_counter() - t0,
                         diagnostics={"censored": int(r.censored.sum()), "t_median": t_med,
                                      "ks_max": ks_max, "mean_steps": float(r.steps.mean())})


@_register("cb_laplace", "E_x exp(-lam Y_t) vs exp(-x u_t(lam))",
           {**_STABLE, "x": 1.0, "t": 0.5, "lam": 1.0, "eps": 0.1}, dt=2e-3, budget_ref=0.01)
def _cb_laplace(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, t, lam = p["x"], p["t"], p["lam"]
    cf = cb_laplace(sp, x, t, lam)
    if x == 0:
        est = MCEstimate.from_samples(np.ones(max(n, 2)), seed)
        return _moment_check("cb_laplace", p, cf, est, budget, t0)
    r = run_batch(WalkSpec(sp, x, h=dt, eps=p["eps"], t_stop=t), n, seed, t_obs=[t])
    est = MCEstimate.from_samples(np.exp(-lam * r.obs[:, 0]), seed)
    return _moment_check("cb_laplace", p, cf, est, budget, t0)


def _exit_batch(sp, p, n, dt, seed, upper):
    return run_batch(WalkSpec(sp, p["x"], h=dt, eps=p["eps"], upper=upper, levels=(upper,)),
                     n, seed)


def _exit_check(name, branch, p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, a, q = p["x"], p["a"], p["q"]
    r = _exit_batch(sp, p, n, dt, seed, a)
    disc = np.exp(-q * r.S)
    up = r.status == K.ST_UPPER
    vals = {"i": disc * up, "ii": disc * r.killed}
    cf = thm2_exit(sp, x, a, q, branch)
    est = MCEstimate.from_samples(vals[branch], seed)
    other = "ii" if branch == "i" else "i"
    diag = {"other_branch_estimate": float(np.mean(vals[other])),
            "other_branch_closed_form": thm2_exit(sp, x, a, q, other),
            "censored": int(r.censored.sum())}
    extra = True
    if q == 0:
        s = thm2_exit(sp, x, a, 0.0, "i") + thm2_exit(sp, x, a, 0.0, "ii")
        tot = MCEstimate.from_samples(vals["i"] + vals["ii"], seed)
        diag["closed_form_branch_sum"] = s
        diag["estimate_branch_sum"] = tot.mean
        extra = s == 1.0 and abs(tot.mean - 1.0) <= 4 * tot.stderr + 1e-12
    else:
        # the exponential-functional form evaluated at a' = log(a/x), q' = q x**alpha
        br7 = "expflp1" if branch == "i" else "expflp2"
        v7 = thm7_exp_functional(sp, math.log(a / x), q * x**sp.alpha, br7)
        diag["exp_functional_form"] = v7
        diag["exp_functional_abs_diff"] = abs(v7 - cf)
        extra = abs(v7 - cf) <= 1e-10
    return _moment_check(name, p, cf, est, budget, t0, extra_pass=extra, **diag)


_EXIT = {**_STABLE, "x": 1.0, "a": 2.0, "q": 0.0, "eps": 0.1}


@_register("exit_thm2_i", "discounted reach-a-first transform vs Z - W Z(a)/W(a)",
           _EXIT, dt=2e-3, budget_ref=0.01)
def _exit_i(p, n, dt, seed, budget, ks_max):
    return _exit_check("exit_thm2_i", "i", p, n, dt, seed, budget, ks_max)


@_register("exit_thm2_ii", "discounted extinction-first transform vs W(a-x)/W(a)",
           _EXIT, dt=2e-3, budget_ref=0.01)
def _exit_ii(p, n, dt, seed, budget, ks_max):
    return _exit_check("exit_thm2_ii", "ii", p, n, dt, seed, budget, ks_max)


@_register("expfunc_thm7", "exponential functional up to first passage vs Mittag-Leffler forms",
           {**_STABLE, "x": 1.0, "a": 1.0, "q": 0.5, "branch": "expflp1", "eps": 0.1},
           dt=2e-3, budget_ref=0.01)
def _thm7(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, a, q, br = p["x"], p["a"], p["q"], p["branch"]
    if br not in ("expflp1", "expflp2"):
        raise ConfigError(f"branch must be expflp1 or expflp2, got {br!r}")
    b = x * math.exp(a)
    q_cb = q / x**sp.alpha
    cf = thm7_exp_functional(sp, a, q, br)
    cf2 = thm2_exit(sp, x, b, q_cb, "i" if br == "expflp1" else "ii")
    r = run_batch(WalkSpec(sp, x, h=dt, eps=p["eps"], upper=b, levels=(b,)), n, seed)
    disc = np.exp(-q_cb * r.S)
    mask = (r.status == K.ST_UPPER) if br == "expflp1" else r.killed
    est = MCEstimate.from_samples(disc * mask, seed)
    return _moment_check("expfunc_thm7", p, cf, est, budget, t0,
                         extra_pass=abs(cf - cf2) <= 1e-10, exit_form=cf2,
                         abs_diff_forms=abs(cf - cf2))


@_register("infimum_cor1", "conditioned dual from y stays above z vs ((y-z)/y)^(alpha-1)",
           {**_STABLE, "y": 1.0, "z": 0.5, "horizon": 1000.0, "eps": 0.1}, dt=2e-3)
def _cor1(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    est = h_transform_estimate("sn_dual", sp, p["y"], p["horizon"], InfimumAbove(p["z"]),
                               n, dt, seed, eps=p["eps"], x_ref=p["y"])
    cf = cor1_infimum_law(sp, p["y"], p["z"])
    return _moment_check("infimum_cor1", p, cf, est, budget, t0, ess=est.ess)


@_register("infimum_prop3", "infimum of xi before its last passage above u vs (1-e^(v-u))^(alpha-1)",
           {**_STABLE, "x": 1.0, "u": -1.0, "v": -2.0, "eps": 0.1, "level_floor": 0.05,
            "chunk": 500}, dt=2e-3)
def _prop3(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, u, v = p["x"], p["u"], p["v"]
    cf = prop3_infimum_law(sp.alpha, u, v)
    spec = WalkSpec(sp, x, h=dt, eps=p["eps"], levels=(x * math.exp(u), x * math.exp(v)),
                    level_floor=p["level_floor"])
    chunk = int(p["chunk"])
    starts = list(range(0, n, chunk))
    workers = _engine.n_workers()

    def one(start):
        # knot arrays are large, so each chunk is reduced to indicators at once
        m = min(chunk, n - start)
        rec = record_paths(spec, m, seed, start)
        out = np.empty(m)
        for i in range(m):
            y = cb_time_change(rec.levy_path(i)).knots
            xi = levy_from_pssmp(y, sp.alpha - 1.0).values
            last = np.flatnonzero(xi >= u)[-1]
            out[i] = float(xi[: last + 1].min() >= v)
        return out, int(np.sum(rec.status != K.ST_KILLED))

    parts = []
    with ThreadPoolExecutor(workers) as ex:
        for w in range(0, len(starts), workers):
            parts.extend(ex.map(one, starts[w:w + workers]))
    hits = np.concatenate([h for h, _ in parts])
    censored = sum(c for _, c in parts)
    est = MCEstimate.from_samples(hits, seed)
    return _moment_check("infimum_prop3", p, cf, est, budget, t0, censored=censored,
                         extra_pass=censored == 0)


@_register("selfsim_index_shift", "k Y_{k^-(alpha-1) t} from x vs Y_t from kx (two-sample KS)",
           {**_STABLE, "x": 1.0, "k": 2.0, "t": 0.25}, dt=2e-3)
def _selfsim(p, n, dt, seed, budget, ks_max):
    chk = index_shift_check(_params(p), p["x"], n, dt, seed, k=p["k"], t=p["t"])
    chk.params = p
    return chk


def _reversal_batch(sp, p, n, dt, seed):
    return run_batch(WalkSpec(sp, p["x"], h=dt, eps=p["eps"]), n, seed, t_rev=p["t"])


def _indicator(a):
    return lambda z: 1.0 if z <= a else 0.0


@_register("entrance_law_thm3", "reversed CB marginal near extinction vs the entrance law",
           {**_STABLE, "x": 1.0, "t": 0.05, "level": 1.0, "eps": 0.025}, dt=2e-3, budget_ref=0.02)
def _entrance(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    t = p["t"]
    m = canonical_m(sp)
    a = p["level"] * qs_scale(sp, t)
    cf = entrance_law_expectation(sp, m, t, _indicator(a), breakpoints=[a])
    norm = entrance_law_expectation(sp, m, t, lambda z: 1.0)
    lit = entrance_law_expectation(sp, m, t, _indicator(a), breakpoints=[a], literal=True)
    r = _reversal_batch(sp, p, n, dt, seed)
    rev = r.rev[np.isfinite(r.rev)]
    est = MCEstimate.from_samples((rev <= a).astype(float), seed)
    return _moment_check("entrance_law_thm3", p, cf, est, budget, t0,
                         extra_pass=abs(norm - 1.0) <= 1e-8, normalization=norm,
                         canonical_m=m, threshold=a, literal_form_value=lit,
                         dropped=int(n - rev.size))


@_register("reversal_thm1_marginal",
           "reversed CB marginal vs time-changed conditioned dual from near 0 (weighted KS)",
           {**_STABLE, "x": 1.0, "t": 0.05, "eps": 0.025, "x0_factor": 1e-3}, dt=2e-3)
def _reversal(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    t = p["t"]
    r = _reversal_batch(sp, p, n, dt, seed)
    rev = r.rev[np.isfinite(r.rev)]
    x0 = p["x0_factor"] * qs_scale(sp, t)
    ws = conditioned_dual_marginal(sp, t, n, dt, derive_seed(seed, "dual"), x0=x0, eps=p["eps"])
    d, pv = ks_2samp(rev, ws.functional_value, weights_b=ws.weight)
    est = MCEstimate.from_samples(rev, seed)
    w = ws.weight
    wmean = float(np.sum(w * ws.functional_value) / np.sum(w))
    cf = sp.alpha * qs_scale(sp, t)
    e = ws.ess
    return IdentityCheck("reversal_thm1_marginal", p, cf, est, z_score(est.mean, cf, est.stderr),
                         0.0, bool(pv >= 0.01 and e >= 100), ks=(d, pv),
                         runtime_s=time.perf_counter() - t0,
                         diagnostics={"dual_ess": e, "dual_weighted_mean": wmean, "x0": x0})


@_register("cbi_laplace_lemma6", "h-transformed CB Laplace transform vs exp(-x u_t) psi(u_t)/psi(lam)",
           {**_STABLE, "x": 1.0, "t": 0.5, "lam": 1.0, "eps": 0.1}, dt=2e-3, budget_ref=0.01)
def _cbi(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    est = h_transform_estimate("cb", sp, p["x"], p["t"], Laplace(p["lam"]), n, dt, seed,
                               eps=p["eps"])
    cf = cbi_exact_laplace(sp, p["x"], p["t"], p["lam"])
    return _moment_check("cbi_laplace_lemma6", p, cf, est, budget, t0, ess=est.ess)


@_register("lambert_consistency",
           "conditioned CB in its own clock vs time-changed conditioned stable path",
           {**_STABLE, "x": 1.0, "t": 0.5, "lam": 1.0, "eps": 0.1, "levy_dt": 1e-3},
           dt=2e-3, budget_ref=0.01)
def _lambert(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    f = Laplace(p["lam"])
    a = h_transform_estimate("cb", sp, p["x"], p["t"], f, n, dt, seed, eps=p["eps"])
    b = h_transform_estimate("sp_positive", sp, p["x"], p["t"], f, n, p["levy_dt"],
                             derive_seed(seed, "levy"), clock="cb", uniform=True)
    cf = cbi_exact_laplace(sp, p["x"], p["t"], p["lam"])
    comb = math.hypot(a.stderr, b.stderr)
    ok = abs(a.mean - b.mean) <= 4 * comb + budget and not (a.flagged or b.flagged)
    return IdentityCheck("lambert_consistency", p, b.mean, a, z_score(a.mean, b.mean, comb),
                         budget, bool(ok), runtime_s=time.perf_counter() - t0,
                         diagnostics={"levy_construction_stderr": b.stderr, "ess_cb": a.ess,
                                      "ess_levy": b.ess, "exact": cf})


@_register("qs_lemma5", "survival-conditioned rescaled Laplace transform vs its t -> inf limit",
           {"alpha": 2.0, "c_plus": None, "x": 1.0, "t": 50.0, "lam": 1.0, "eps": 0.1},
           dt=5e-3, budget_ref=0.02)
def _qs(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, t, lam = p["x"], p["t"], p["lam"]
    est = survival_conditioned_laplace(sp, x, t, lam, n, dt, seed, eps=p["eps"])
    cf = qs_limit(sp, lam)
    return _moment_check("qs_lemma5", p, cf, est, budget, t0, acceptance=est.acceptance,
                         survival_probability=1.0 - extinction_cdf(sp, x, t),
                         finite_t_exact=survival_conditioned_exact(sp, x, t, lam))


@_register("qs_cbi_lemma6", "rescaled conditioned CB Laplace transform vs its t -> inf limit",
           {"alpha": 2.0, "c_plus": None, "x": 1.0, "t": 20.0, "lam": 1.0, "eps": 0.1},
           dt=5e-3, budget_ref=0.01)
def _qs_cbi(p, n, dt, seed, budget, ks_max):
    t0 = time.perf_counter()
    sp = _params(p)
    x, t, lam = p["x"], p["t"], p["lam"]
    ct = qs_scale(sp, t)
    cf = cbi_qs_limit(sp, lam)
    gap = abs(cbi_exact_laplace(sp, x, t, lam / ct) - cf)
    est = h_transform_estimate("cb", sp, x, t, Laplace(lam / ct), n, dt, seed, eps=p["eps"])
    return _moment_check("qs_cbi_lemma6", p, cf, est, budget + gap, t0, finite_t_gap=gap,
                         ess=est.ess)


@_register("sup_prop4_shape", "CBI sup before last passage below y: 1 - kappa y/z shape",
           {"alpha": 2.0, "c_plus": None, "m_star": 1.0, "y": 1.0, "z_over_y": [2, 3, 4, 6],
            "horizon": 200.0, "eps": 0.1}, dt=5e-3)
def _prop4(p, n, dt, seed, budget, ks_max):
    sp = _params(p)
    zs = [p["y"] * float(k) for k in p["z_over_y"]]
    chk = cbi_sup_before_last_passage(sp, p["m_star"], p["y"], zs, n, dt, seed,
                                      horizon=p["horizon"])
    chk.params = p
    return chk


# --------------------------------------------------------------------------
# running


def _check_params(ident: Identity, params: dict | None) -> dict:
    params = dict(params or {})
    unknown = set(params) - set(ident.defaults) - {"ks_max"}
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {ident.name}: {sorted(unknown)}")
    out = {**ident.defaults, **params}
    out.pop("ks_max", None)
    try:
        sp = StableParams(out["alpha"], out.get("c_plus"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{ident.name}: {exc}") from None
    out["c_plus"] = sp.c_plus
    return out


def run_identity(name: str, params: dict | None = None, n_paths: int = 10_000,
                 dt: float | None = None, seed: int = 1, *,
                 bias_budget: float | None = None) -> IdentityCheck:
    """Run one registered identity; deterministic in ``(name, params, n_paths, dt, seed)``."""
    if name not in REGISTRY:
        raise ConfigError(f"unknown identity {name!r}; available: {', '.join(sorted(REGISTRY))}")
    ident = REGISTRY[name]
    ks_max = (params or {}).get("ks_max", ident.ks_max)
    p = _check_params(ident, params)
    if n_paths < 2:
        raise ConfigError("n_paths must be at least 2")
    dt = ident.dt if dt is None else float(dt)
    if not dt > 0:
        raise ConfigError("dt must be positive")
    budget = ident.budget(dt) if bias_budget is None else float(bias_budget)
    t0 = time.perf_counter()
    chk = ident.runner(p, int(n_paths), dt, int(seed), budget, ks_max)
    chk.runtime_s = time.perf_counter() - t0
    chk.params = {**chk.params, "n_paths": int(n_paths), "dt": dt, "seed": int(seed)}
    return chk


@dataclass
class CheckConfig:
    identity: str
    params: dict = field(default_factory=dict)
    n_paths: int = 10_000
    dt: float | None = None
    bias_budget: float | None = None
    seed: int | None = None


@dataclass
class SuiteConfig:
    master_seed: int = 1
    checks: list[CheckConfig] = field(default_factory=list)
    version: int = CONFIG_VERSION


_TOP_KEYS = {"version", "master_seed", "checks", "description"}
_CHECK_KEYS = {"identity", "params", "n_paths", "dt", "bias_budget", "seed"}


def parse_config(obj: dict) -> SuiteConfig:
    """Validate a decoded config object; unknown keys and identities are errors."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    if obj.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}, got {obj.get('version')!r}")
    checks = []
    for i, c in enumerate(obj.get("checks", [])):
        if not isinstance(c, dict):
            raise ConfigError(f"checks[{i}] must be an object")
        bad = set(c) - _CHECK_KEYS
        if bad:
            raise ConfigError(f"checks[{i}]: unknown key(s) {sorted(bad)}")
        if c.get("identity") not in REGISTRY:
            raise ConfigError(f"checks[{i}]: unknown identity {c.get('identity')!r}")
        cc = CheckConfig(c["identity"], dict(c.get("params", {})), int(c.get("n_paths", 10_000)),
                         c.get("dt"), c.get("bias_budget"), c.get("seed"))
        _check_params(REGISTRY[cc.identity], cc.params)
        if cc.n_paths < 2:
            raise ConfigError(f"checks[{i}]: n_paths must be at least 2")
        if cc.dt is not None and not float(cc.dt) > 0:
            raise ConfigError(f"checks[{i}]: dt must be positive")
        if cc.bias_budget is not None and float(cc.bias_budget) < 0:
            raise ConfigError(f"checks[{i}]: bias_budget must be nonnegative")
        checks.append(cc)
    return SuiteConfig(int(obj.get("master_seed", 1)), checks, CONFIG_VERSION)


def load_config(path) -> SuiteConfig:
    text = FsPath(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(obj)


def bundled_config(name: str = "acceptance.json") -> FsPath:
    return FsPath(__file__).with_name("data") / name


@dataclass
class Report:
    master_seed: int
    checks: list[IdentityCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "master_seed": self.master_seed,
                "passed": self.passed, "n_checks": len(self.checks),
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "closed_form", "estimate", "stderr", "z", "ks", "p", "pass",
                    "runtime_s"])
        for c in self.checks:
            ks, pv = c.ks if c.ks is not None else ("", "")
            w.writerow([c.name, repr(c.closed_form), repr(c.estimate.mean),
                        repr(c.estimate.stderr), "" if c.z is None else repr(c.z),
                        ks if ks == "" else repr(ks), pv if pv == "" else repr(pv),
                        int(c.passed), f"{c.runtime_s:.3f}"])
        return buf.getvalue()

    def write(self, path, fmt: str | None = None) -> None:
        path = FsPath(path)
        fmt = fmt or ("csv" if path.suffix == ".csv" else "json")
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())


def run_suite(config, progress: Callable[[IdentityCheck], None] | None = None) -> Report:
    """Run every configured check; configuration errors abort before any simulation."""
    if isinstance(config, (str, FsPath)):
        config = load_config(config)
    elif isinstance(config, dict):
        config = parse_config(config)
    checks = []
    with _engine.batch_cache():
        for cc in config.checks:
            seed = cc.seed if cc.seed is not None else derive_seed(config.master_seed, cc.identity)
            chk = run_identity(cc.identity, cc.params, cc.n_paths, cc.dt, seed,
                               bias_budget=cc.bias_budget)
            checks.append(chk)
            if progress is not None:
                progress(chk)
    return Report(config.master_seed, checks)
