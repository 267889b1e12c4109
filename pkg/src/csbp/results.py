"""Result records shared by the estimators and the verification harness."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error.

    ``ess`` is the effective sample size of weighted estimators and
    ``acceptance`` the accepted fraction of rejection estimators.
    """

    mean: float
    stderr: float
    n: int
    seed: int
    ess: float | None = None
    acceptance: float | None = None
    flagged: bool = False

    @classmethod
    def from_samples(cls, values, seed: int, **kw) -> "MCEstimate":
        v = np.asarray(values, dtype=float)
        if v.size < 2:
            raise ValueError("need at least two samples")
        mean = float(_pairwise_mean(v))
        sd = float(np.sqrt(_pairwise_mean((v - mean) ** 2) * v.size / (v.size - 1)))
        return cls(mean, sd / math.sqrt(v.size), int(v.size), int(seed), **kw)

    def to_dict(self) -> dict:
        return asdict(self)


def _pairwise_mean(v: np.ndarray) -> float:
    # numpy's sum is pairwise for contiguous float arrays: fixed order, reproducible
    return float(np.sum(v)) / v.size


@dataclass
class IdentityCheck:
    """One verification record."""

    name: str
    params: dict
    closed_form: float
    estimate: MCEstimate
    z: float | None
    bias_budget: float
    passed: bool
    ks: tuple[float, float] | None = None
    runtime_s: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": dict(sorted(self.params.items())),
            "closed_form": _clean(self.closed_form),
            "estimate": {k: _clean(v) for k, v in self.estimate.to_dict().items()},
            "z": _clean(self.z),
            "ks": None if self.ks is None else {"statistic": _clean(self.ks[0]),
                                                "p_value": _clean(self.ks[1])},
            "bias_budget": _clean(self.bias_budget),
            "pass": bool(self.passed),
            "diagnostics": {k: _clean(v) for k, v in sorted(self.diagnostics.items())},
        }


def _clean(v):
    """JSON-safe scalar: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


def z_score(mean: float, closed_form: float, stderr: float) -> float | None:
    diff = mean - closed_form
    if stderr > 0:
        return diff / stderr
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def moment_pass(mean: float, closed_form: float, stderr: float, budget: float) -> bool:
    return abs(mean - closed_form) <= 4.0 * stderr + budget
