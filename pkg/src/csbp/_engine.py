"""Batch drivers around the compiled walker."""
from __future__ import annotations

import math
import os
import zlib
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .stable_levy import Path, StableParams

CHUNK = 4096
_CACHE_SIZE = 4
_cache: OrderedDict | None = None


@contextmanager
def batch_cache():
    """Reuse identical ``run_batch`` calls inside the block (results are deterministic)."""
    global _cache
    outer = _cache
    if outer is None:
        _cache = OrderedDict()
    try:
        yield
    finally:
        _cache = outer


def n_workers() -> int:
    env = os.environ.get("CSBP_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise ValueError(f"CSBP_THREADS must be an integer, got {env!r}") from None
    return cpus


@dataclass
class WalkSpec:
    """Configuration of one family of walks.

    ``mode`` selects the step rule (see ``_kernels``); ``h`` is the Levy-time
    step in uniform mode and the CB-clock step otherwise. Near each of
    ``levels`` the step shrinks with the distance to the level, down to
    ``level_floor`` times the level (0 refines without limit, which only pays
    off for levels that stop the walk).
    """

    params: StableParams
    x0: float
    sign: int = 1
    mode: int = K.MODE_RELATIVE
    h: float = 2e-3
    eps: float = 0.05
    x_ref: float | None = None
    floor: float | None = None
    refine: float = 0.1
    levels: tuple = ()
    t_stop: float = math.inf
    s_stop: float = math.inf
    upper: float = math.inf
    lower: float = 0.0
    max_steps: int = 20_000_000
    immigration: float = 0.0
    level_floor: float = 0.0
    extra: dict = field(default_factory=dict)

    def vector(self) -> np.ndarray:
        a, c = self.params.alpha, self.params.c_plus
        xref = self.x_ref if self.x_ref is not None else (self.x0 if self.x0 > 0 else 1.0)
        floor = self.floor
        if floor is None:
            if self.mode == K.MODE_UNIFORM:
                floor = self.h / 2.0**20
            elif self.mode == K.MODE_RELATIVE:
                floor = (self.eps * 1e-10 * xref) ** a / c
            else:
                floor = self.eps**a * (1e-10 * xref) ** (a - 1.0) / c
        p = np.zeros(K.N_PARAMS)
        p[K.P_ALPHA] = a
        p[K.P_C] = c
        p[K.P_SIGN] = float(self.sign)
        p[K.P_X0] = self.x0
        p[K.P_MODE] = self.mode
        p[K.P_H] = self.h
        p[K.P_EPS] = self.eps
        p[K.P_XREF] = xref
        p[K.P_FLOOR] = floor
        p[K.P_RF] = self.refine
        p[K.P_TSTOP] = self.t_stop
        p[K.P_SSTOP] = self.s_stop
        p[K.P_UPPER] = self.upper
        p[K.P_LOWER] = self.lower
        p[K.P_MAXSTEPS] = self.max_steps
        p[K.P_IMM] = self.immigration
        p[K.P_LDELTA] = self.level_floor
        return p

    def level_array(self) -> np.ndarray:
        return np.asarray([float(v) for v in self.levels if v != 0.0], dtype=float)


@dataclass
class BatchResult:
    status: np.ndarray
    steps: np.ndarray
    S: np.ndarray
    A: np.ndarray
    X: np.ndarray
    left: np.ndarray
    obs: np.ndarray
    xmin: np.ndarray
    xmax: np.ndarray
    sup_last: np.ndarray
    t_last: np.ndarray
    rev: np.ndarray

    @property
    def killed(self) -> np.ndarray:
        return self.status == K.ST_KILLED

    @property
    def censored(self) -> np.ndarray:
        return self.status == K.ST_CENSORED


def _chunks(n: int):
    return [(s, min(CHUNK, n - s)) for s in range(0, n, CHUNK)]


def run_batch(spec: WalkSpec, n: int, seed: int, *, t_obs=(), y_last: float = -math.inf,
              t_rev: float = 0.0) -> BatchResult:
    """Simulate ``n`` paths with streams ``(seed, 0..n-1)`` and return summaries."""
    p = spec.vector()
    lv = spec.level_array()
    tobs = np.asarray(t_obs, dtype=float).reshape(-1)
    key = None
    if _cache is not None:
        key = (p.tobytes(), lv.tobytes(), int(n), int(seed), tobs.tobytes(), float(y_last),
               float(t_rev))
        if key in _cache:
            _cache.move_to_end(key)
            return _cache[key]
    m = tobs.size
    out = BatchResult(
        status=np.empty(n, np.int64), steps=np.empty(n, np.int64), S=np.empty(n),
        A=np.empty(n), X=np.empty(n), left=np.empty(n), obs=np.empty((n, m)),
        xmin=np.empty(n), xmax=np.empty(n), sup_last=np.empty(n), t_last=np.empty(n),
        rev=np.empty(n),
    )

    def work(chunk):
        s, c = chunk
        sl = slice(s, s + c)
        K.batch(p, lv, np.uint64(seed), s, c, tobs, float(y_last), float(t_rev),
                out.status[sl], out.steps[sl], out.S[sl], out.A[sl], out.X[sl],
                out.left[sl], out.obs[sl], out.xmin[sl], out.xmax[sl],
                out.sup_last[sl], out.t_last[sl], out.rev[sl])

    chunks = _chunks(n)
    workers = min(n_workers(), len(chunks)) if chunks else 1
    if workers <= 1:
        for ch in chunks:
            work(ch)
    else:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(work, chunks))
    if key is not None and _cache is not None:
        _cache[key] = out
        while len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)
    return out


@dataclass
class RecordedPaths:
    """Knots of many walks: Levy time ``S``, CB clock ``A`` and value ``X``."""

    S: np.ndarray
    A: np.ndarray
    X: np.ndarray
    offsets: np.ndarray
    status: np.ndarray

    def __len__(self) -> int:
        return self.status.size

    def knots(self, i: int):
        sl = slice(self.offsets[i], self.offsets[i + 1])
        return self.S[sl], self.A[sl], self.X[sl]

    def levy_path(self, i: int) -> Path:
        S, _, X = self.knots(i)
        kill = S.size - 1 if self.status[i] == K.ST_KILLED else None
        return Path(S, X, float(X[0]), kill)

    def cb_path(self, i: int) -> Path:
        _, A, X = self.knots(i)
        kill = A.size - 1 if self.status[i] == K.ST_KILLED else None
        return Path(A, X, float(X[0]), kill)


def record_paths(spec: WalkSpec, n: int, seed: int, start: int = 0) -> RecordedPaths:
    S, A, X, off, st = K.record(spec.vector(), spec.level_array(), np.uint64(seed), start, n)
    return RecordedPaths(S, A, X, off, st)


def derive_seed(seed: int, *keys) -> int:
    """Child seed from a parent seed and integer or string keys."""
    ints = [int(seed)]
    for k in keys:
        ints.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0] >> np.uint64(1))
