"""Command-line front end: ``simulate``, ``eval`` and ``verify``.

Data goes to stdout or ``--out``; progress and errors go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import closed_forms as cf
from . import _kernels as K
from ._engine import WalkSpec, derive_seed, record_paths
from .lamperti import simulate_cb_paths
from .special_functions import mittag_leffler, scale_W, scale_Z
from .stable_levy import StableParams, path_rng, psi, simulate_path
from .verify import REGISTRY, ConfigError, load_config, parse_config, run_suite

PROCESSES = ("stable", "cb", "cbi", "dual-conditioned")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flags shared by ``simulate`` and inline ``verify``."""

    alpha: float = 1.5
    c_plus: float | None = None
    x0: float = 1.0
    dt: float = 1e-3
    horizon: float = 1.0
    n_paths: int = 10_000
    seed: int = 1
    identities: list = field(default_factory=list)
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if not 1.0 < self.alpha <= 2.0:
            raise UsageError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.c_plus is not None and not self.c_plus > 0:
            raise UsageError(f"c_plus must be positive, got {self.c_plus}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise UsageError(f"dt must be positive and finite, got {self.dt}")
        if not self.horizon > 0:
            raise UsageError(f"horizon must be positive, got {self.horizon}")
        if self.x0 < 0 or not math.isfinite(self.x0):
            raise UsageError(f"x0 must be nonnegative, got {self.x0}")
        if self.n_paths < 1:
            raise UsageError(f"n_paths must be positive, got {self.n_paths}")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.fmt!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise UsageError(f"unknown key(s): {sorted(bad)}")
        return cls(**d)

    @property
    def params(self) -> StableParams:
        return StableParams(self.alpha, self.c_plus)


# --------------------------------------------------------------------------
# simulate


def _grid_rows(pid, times, values, dt, horizon, absorbed_at=None):
    """Left values on ``k dt <= min(horizon, end)`` plus the absorption row."""
    end = times[-1] if absorbed_at is None else absorbed_at
    stop = min(horizon, end)
    n = int(math.floor(stop / dt + 1e-9))
    grid = np.arange(n + 1) * dt
    if absorbed_at is not None and grid[-1] >= absorbed_at:
        grid = grid[:-1]
    idx = np.searchsorted(times, grid, side="right") - 1
    for t, v in zip(grid, values[idx]):
        yield pid, float(t), float(v), 0
    if absorbed_at is not None and absorbed_at <= horizon:
        yield pid, float(absorbed_at), 0.0, 1


def _simulate_rows(cfg: RunConfig, process: str):
    sp = cfg.params
    if process != "cb" and not math.isfinite(cfg.horizon):
        raise UsageError(f"{process} needs a finite --horizon")
    if process == "stable":
        for i in range(cfg.n_paths):
            p = simulate_path(sp, cfg.x0, cfg.horizon, cfg.dt, path_rng(cfg.seed, i))
            for t, v in zip(p.times, p.values):
                yield i, float(t), float(v), 0
        return
    if process == "cb":
        if not cfg.x0 > 0:
            raise UsageError("cb needs x0 > 0")
        paths = simulate_cb_paths(sp, cfg.x0, cfg.n_paths, cfg.dt, cfg.seed, horizon=cfg.horizon)
        for i, tc in enumerate(paths):
            k = tc.knots
            ab = tc.absorption_time if tc.absorbed else None
            yield from _grid_rows(i, k.times, k.values, cfg.dt, cfg.horizon, ab)
        return
    if process == "cbi":
        spec = WalkSpec(sp, cfg.x0, mode=K.MODE_EULER, h=cfg.dt, eps=0.1, x_ref=1.0,
                        t_stop=cfg.horizon, lower=-math.inf, immigration=sp.c_plus * sp.alpha)
        rec = record_paths(spec, cfg.n_paths, cfg.seed)
        for i in range(cfg.n_paths):
            _, A, X = rec.knots(i)
            yield from _grid_rows(i, A, X, cfg.dt, cfg.horizon)
        return
    if process == "dual-conditioned":
        # sampling-importance-resampling of dual paths weighted by W(X_H) / W(x0)
        if not cfg.x0 > 0:
            raise UsageError("dual-conditioned needs x0 > 0")
        m = 4 * cfg.n_paths
        spec = WalkSpec(sp, cfg.x0, sign=-1, mode=K.MODE_RELATIVE, h=cfg.dt, eps=0.1,
                        x_ref=cfg.x0, s_stop=cfg.horizon)
        rec = record_paths(spec, m, cfg.seed)
        last = rec.X[rec.offsets[1:] - 1]
        w = np.where(rec.status == K.ST_HORIZON, np.maximum(last, 0.0) ** (sp.alpha - 1.0), 0.0)
        if not w.sum() > 0:
            raise UsageError("no candidate path survived to the horizon")
        rng = np.random.default_rng(derive_seed(cfg.seed, "resample"))
        pick = rng.choice(m, size=cfg.n_paths, p=w / w.sum())
        for i, j in enumerate(pick):
            S, _, X = rec.knots(int(j))
            yield from _grid_rows(i, S, X, cfg.dt, cfg.horizon)
        return
    raise UsageError(f"unknown process {process!r}")


def cmd_simulate(args) -> int:
    horizon = args.horizon
    if horizon is None:
        horizon = math.inf if args.process == "cb" else 1.0
    cfg = RunConfig(alpha=args.alpha, c_plus=args.c_plus, x0=args.x0, dt=args.dt,
                    horizon=horizon, n_paths=args.paths, seed=args.seed, out=args.out)
    rows = _simulate_rows(cfg, args.process)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["path_id", "t", "value", "absorbed"])
        for pid, t, v, a in rows:
            w.writerow([pid, repr(t), repr(v), a])
    finally:
        if args.out:
            out.close()
    return 0


# --------------------------------------------------------------------------
# eval

def _sp(a):
    return StableParams(a["alpha"], a["c_plus"])


FORMULAS = {
    "psi": (("lambda",), lambda a: psi(_sp(a), a["lambda"])),
    "u_t": (("t", "lambda"), lambda a: cf.u_t(_sp(a), a["t"], a["lambda"])),
    "cb_laplace": (("x", "t", "lambda"), lambda a: cf.cb_laplace(_sp(a), a["x"], a["t"], a["lambda"])),
    "extinction_cdf": (("x", "t"), lambda a: cf.extinction_cdf(_sp(a), a["x"], a["t"])),
    "extinction_rate": (("t",), lambda a: cf.extinction_rate(_sp(a), a["t"])),
    "frechet_density": (("s",), lambda a: cf.frechet_density(_sp(a), a["s"])),
    "tail_I_asymptotic": (("t",), lambda a: cf.tail_I_asymptotic(_sp(a), a["t"])),
    "qs_scale": (("t",), lambda a: cf.qs_scale(_sp(a), a["t"])),
    "qs_limit": (("lambda",), lambda a: cf.qs_limit(_sp(a), a["lambda"])),
    "qs_ratio": (("t", "lambda"), lambda a: cf.qs_ratio(_sp(a), a["t"], a["lambda"])),
    "survival_conditioned_exact": (("x", "t", "lambda"), lambda a: cf.survival_conditioned_exact(
        _sp(a), a["x"], a["t"], a["lambda"])),
    "cbi_exact_laplace": (("x", "t", "lambda"), lambda a: cf.cbi_exact_laplace(
        _sp(a), a["x"], a["t"], a["lambda"])),
    "cbi_entrance_laplace": (("t", "lambda"), lambda a: cf.cbi_entrance_laplace(
        _sp(a), a["t"], a["lambda"])),
    "cbi_qs_limit": (("lambda",), lambda a: cf.cbi_qs_limit(_sp(a), a["lambda"])),
    "cor1_infimum_law": (("y", "z"), lambda a: cf.cor1_infimum_law(_sp(a), a["y"], a["z"])),
    "prop3_infimum_law": (("u", "v"), lambda a: cf.prop3_infimum_law(a["alpha"], a["u"], a["v"])),
    "thm2_exit": (("x", "a", "q", "branch"), lambda a: cf.thm2_exit(
        _sp(a), a["x"], a["a"], a["q"], a["branch"])),
    "thm7_exp_functional": (("a", "q", "branch"), lambda a: cf.thm7_exp_functional(
        _sp(a), a["a"], a["q"], a["branch"])),
    "cor4_expn": (("m_star", "lambda"), lambda a: cf.cor4_expn(_sp(a), a["m_star"], a["lambda"])),
    "prop4_sup_law": (("m_star", "y", "z"), lambda a: cf.prop4_sup_law(a["m_star"], a["y"], a["z"])),
    "xi_exponent": (("m", "lambda"), lambda a: cf.xi_exponent(a["alpha"], a["m"], a["lambda"])),
    "xi_star_exponent": (("m_star", "lambda"), lambda a: cf.xi_star_exponent(
        a["alpha"], a["m_star"], a["lambda"])),
    "scale_W": (("q", "x"), lambda a: scale_W(_sp(a), a["q"], a["x"])),
    "scale_Z": (("q", "x"), lambda a: scale_Z(_sp(a), a["q"], a["x"])),
    "mittag_leffler": (("x",), lambda a: mittag_leffler(a["alpha"], a["x"]).value),
    "mittag_leffler_deriv": (("x",), lambda a: mittag_leffler(a["alpha"], a["x"],
                                                             derivative=True).value),
}

_EVAL_ARGS = ("x", "t", "lambda", "q", "a", "y", "z", "u", "v", "s", "m", "m_star")


def _grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"not a number list: {text!r}") from None


def cmd_eval(args) -> int:
    name = args.formula
    if name not in FORMULAS:
        raise UsageError(f"unknown formula {name!r}; available: {', '.join(sorted(FORMULAS))}")
    needed, fn = FORMULAS[name]
    axes = {"alpha": _grid(args.alpha)}
    axes["c_plus"] = [None] if args.c_plus is None else _grid(args.c_plus)
    for k in needed:
        if k == "branch":
            axes[k] = [args.branch] if args.branch else []
            if not axes[k]:
                raise UsageError(f"{name} needs --branch")
            continue
        raw = getattr(args, k)
        if raw is None:
            raise UsageError(f"{name} needs --{k.replace('_', '-')}")
        axes[k] = _grid(raw)
    extra = [k for k in _EVAL_ARGS if getattr(args, k) is not None and k not in needed]
    if extra:
        raise UsageError(f"{name} does not take {', '.join('--' + k.replace('_', '-') for k in extra)}")
    keys = list(axes)
    rows = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        a = dict(zip(keys, combo))
        try:
            a["c_plus"] = StableParams(a["alpha"], a["c_plus"]).c_plus
            val = float(fn(a))
        except (ValueError, ArithmeticError) as exc:
            raise UsageError(f"{name}{a}: {exc}") from None
        rows.append({**a, "value": val})
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.format == "json":
            out.write(json.dumps({"formula": name, "rows": rows}, indent=2) + "\n")
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(keys + ["value"])
            for r in rows:
                w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys]
                           + [repr(r["value"])])
    finally:
        if args.out:
            out.close()
    return 0


# --------------------------------------------------------------------------
# verify


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_verify(args) -> int:
    if args.list:
        for name in sorted(REGISTRY):
            ident = REGISTRY[name]
            defaults = ", ".join(f"{k}={v}" for k, v in ident.defaults.items())
            print(f"{name}\t{ident.description}\t[{defaults}; dt={ident.dt}]")
        return 0
    if args.config and args.identity:
        raise UsageError("use either --config or --identity, not both")
    if args.config:
        config = load_config(args.config)
    elif args.identity:
        params = {}
        for kv in args.param or []:
            if "=" not in kv:
                raise UsageError(f"--param expects key=value, got {kv!r}")
            k, v = kv.split("=", 1)
            params[k.strip()] = _parse_value(v)
        checks = []
        for name in args.identity:
            c = {"identity": name, "params": params, "n_paths": args.paths}
            if args.dt is not None:
                c["dt"] = args.dt
            if args.bias_budget is not None:
                c["bias_budget"] = args.bias_budget
            checks.append(c)
        config = parse_config({"version": 1, "master_seed": args.seed, "checks": checks})
    else:
        raise UsageError("verify needs --config, --identity or --list")

    def progress(chk):
        state = "PASS" if chk.passed else "FAIL"
        print(f"{state} {chk.name} closed_form={chk.closed_form:.6g} "
              f"estimate={chk.estimate.mean:.6g}+-{chk.estimate.stderr:.2g} "
              f"({chk.runtime_s:.1f}s)", file=sys.stderr, flush=True)

    report = run_suite(config, progress=None if args.quiet else progress)
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed",
          file=sys.stderr)
    return 0 if report.passed else 1


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csbp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write sampled paths as CSV (path_id,t,value,absorbed)")
    s.add_argument("--process", choices=PROCESSES, default="cb")
    s.add_argument("--alpha", type=float, default=1.5)
    s.add_argument("--c-plus", type=float, default=None,
                   help="jump intensity (default 1, or 1/2 at alpha=2)")
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--horizon", type=float, default=None,
                   help="time horizon (default: until extinction for cb, 1 otherwise)")
    s.add_argument("--paths", type=int, default=10)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("eval", help="evaluate a closed form over comma-separated grids")
    e.add_argument("--formula", required=True)
    e.add_argument("--alpha", default="1.5")
    e.add_argument("--c-plus", default=None)
    for k in _EVAL_ARGS:
        e.add_argument("--" + k.replace("_", "-"), dest=k, default=None)
    e.add_argument("--branch", default=None)
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run identity checks and write a report")
    v.add_argument("--config", default=None, help="JSON suite configuration")
    v.add_argument("--identity", action="append", help="identity to run (repeatable)")
    v.add_argument("--param", action="append", help="identity parameter key=value")
    v.add_argument("--paths", type=int, default=10_000)
    v.add_argument("--dt", type=float, default=None)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--bias-budget", type=float, default=None)
    v.add_argument("--list", action="store_true", help="print the identity registry")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--out", default=None)
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"csbp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
