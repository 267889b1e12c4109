"""Compiled path kernels.

Every path draws from its own SplitMix64 stream keyed by ``(seed, path index)``,
so a batch gives the same numbers whatever the chunking or thread count.

A single walker advances a spectrally one-sided stable path and records knots
``(S_k, A_k, X_k)``: Levy time, CB clock ``A = int ds / X`` and value.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# step modes
MODE_UNIFORM = 0   # fixed Levy-time step, factor-2 refinement below 0.05 * x_ref
MODE_RELATIVE = 1  # self-similar Levy-time step
MODE_EULER = 2     # fixed CB-time step (Euler in the CB clock), optional immigration

ULP_UP = 1.0 + 4.5e-16  # multiplier giving the next float or two up

# parameter vector layout
P_ALPHA, P_C, P_SIGN, P_X0, P_MODE, P_H, P_EPS, P_XREF, P_FLOOR, P_RF = range(10)
P_TSTOP, P_SSTOP, P_UPPER, P_LOWER, P_MAXSTEPS, P_IMM, P_LDELTA = range(10, 17)
N_PARAMS = 17

ST_HORIZON, ST_KILLED, ST_UPPER, ST_CENSORED = 0, 1, 2, 3


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def _uniform(s):
    s = s + _GOLDEN
    return (float(_mix(s) >> _S11) + 0.5) * _INV53, s


@njit(inline="always")
def stream_key(seed, index):
    k = _mix(np.uint64(seed) ^ _mix(np.uint64(index) + _GOLDEN))
    return _mix(k + np.uint64(0x632BE59BD9B4E019))


@njit(inline="always")
def _cms_consts(alpha):
    ta = math.tan(math.pi * alpha / 2)
    B = math.atan(ta) / alpha
    S = (1.0 + ta * ta) ** (0.5 / alpha)
    su = abs(math.cos(math.pi * alpha / 2)) ** (1.0 / alpha)
    return B, S * su


@njit(inline="always")
def _unit_draw(alpha, B, SS, s):
    # alpha in (1,2): E exp(-lam Z) = exp(lam**alpha); alpha in (0,1): = exp(-lam**alpha)
    u1, s = _uniform(s)
    u2, s = _uniform(s)
    if alpha == 2.0:
        return math.sqrt(-4.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2), s
    V = math.pi * (u1 - 0.5)
    W = -math.log(u2)
    aVB = alpha * (V + B)
    z = SS * math.sin(aVB) / math.cos(V) ** (1.0 / alpha)
    z *= (math.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha)
    return z, s


@njit(cache=True)
def unit_draws(alpha, seed, index, n):
    """``n`` unit stable draws from the stream ``(seed, index)`` (testing aid)."""
    s = stream_key(seed, index)
    B, SS = _cms_consts(alpha)
    out = np.empty(n)
    for i in range(n):
        out[i], s = _unit_draw(alpha, B, SS, s)
    return out


@njit(inline="always")
def _grow(buf, k):
    if k < buf.size:
        return buf
    nb = np.empty(2 * buf.size)
    nb[: buf.size] = buf
    return nb


@njit(cache=True, nogil=True)
def walk(p, levels, s, bS, bA, bX):
    """Advance one path until a stopping rule fires.

    Returns ``(k, status, s, bS, bA, bX)`` with knots ``0..k`` filled in.
    """
    alpha = p[P_ALPHA]
    c = p[P_C]
    sign = p[P_SIGN]
    x = p[P_X0]
    mode = int(p[P_MODE])
    h = p[P_H]
    eps = p[P_EPS]
    xref = p[P_XREF]
    floor = p[P_FLOOR]
    rf = p[P_RF]
    tstop = p[P_TSTOP]
    sstop = p[P_SSTOP]
    upper = p[P_UPPER]
    lower = p[P_LOWER]
    maxsteps = int(p[P_MAXSTEPS])
    imm = p[P_IMM]
    ldelta = p[P_LDELTA]
    ia = 1.0 / alpha
    beta = alpha - 1.0
    B, SS = _cms_consts(alpha)
    Bb, SSb = 0.0, 1.0
    if imm > 0.0 and beta < 1.0:
        Bb, SSb = _cms_consts(beta)
    thr0 = 0.05 * xref
    sv = 0.0
    a = 0.0
    k = 0
    bS[0] = 0.0
    bA[0] = 0.0
    bX[0] = x
    status = ST_CENSORED
    while k < maxsteps:
        if mode == MODE_EULER:
            y = x if x > 0.0 else 0.0
            d = h
            if y > xref:
                d = h * (y / xref) ** beta
            if y > 0.0:
                rel = eps ** alpha * y ** beta / c
                if rel < d:
                    d = rel
                for L in levels:
                    cap = (rf * max(abs(y - L), ldelta * abs(L))) ** alpha / (c * y)
                    if cap < d:
                        d = cap
            if d < floor:
                d = floor
            if a + d > tstop:
                d = tstop - a
            dtx = y * d
            inc = 0.0
            if dtx > 0.0:
                z, s = _unit_draw(alpha, B, SS, s)
                inc = sign * (c * dtx) ** ia * z
            if imm > 0.0:
                if beta < 1.0:
                    v, s = _unit_draw(beta, Bb, SSb, s)
                    inc += (imm * d) ** (1.0 / beta) * v
                else:
                    inc += imm * d
            xn = x + inc
            sn = sv + dtx
            an = a + d
            if xn <= lower:
                if lower == 0.0 and imm == 0.0 and x > 0.0:
                    f = x / (x - xn)
                    an = a + f * d
                    sn = sv + f * dtx
                    xn = 0.0
                    status = ST_KILLED
                elif imm > 0.0:
                    xn = 0.0
                else:
                    status = ST_KILLED
        else:
            if mode == MODE_UNIFORM:
                dtx = h
                if x < thr0:
                    L2 = math.ceil(alpha * math.log2(thr0 / x))
                    if L2 > 20:
                        L2 = 20
                    dtx = h / 2.0 ** L2
            else:
                dtx = h * x
                if x > xref:
                    dtx *= (x / xref) ** beta
                rel = (eps * x) ** alpha / c
                if rel < dtx:
                    dtx = rel
            for L in levels:
                cap = (rf * max(abs(x - L), ldelta * abs(L))) ** alpha / c
                if cap < dtx:
                    dtx = cap
            if dtx < floor:
                dtx = floor
            if sv + dtx > sstop:
                dtx = sstop - sv
            z, s = _unit_draw(alpha, B, SS, s)
            xn = x + sign * (c * dtx) ** ia * z
            sn = sv + dtx
            if xn <= lower:
                if lower == 0.0:
                    f = x / (x - xn)
                    an = a + f * dtx / x
                    sn = sv + f * dtx
                    xn = 0.0
                else:
                    an = a + dtx / x
                status = ST_KILLED
            else:
                an = a + 0.5 * dtx * (1.0 / x + 1.0 / xn)
        # near extinction the increments can fall below the spacing of the clocks
        if sn <= sv:
            sn = sv * ULP_UP
        if an <= a:
            an = a * ULP_UP
        k += 1
        bS = _grow(bS, k)
        bA = _grow(bA, k)
        bX = _grow(bX, k)
        bS[k] = sn
        bA[k] = an
        bX[k] = xn
        x = xn
        sv = sn
        a = an
        if status == ST_KILLED:
            break
        if xn >= upper:
            status = ST_UPPER
            break
        if an >= tstop or sn >= sstop:
            status = ST_HORIZON
            break
    return k, status, s, bS, bA, bX


@njit(inline="always")
def _left_index(A, k, t):
    # largest j <= k with A[j] <= t
    lo = 0
    hi = k
    if A[k] <= t:
        return k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if A[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


@njit(inline="always")
def _strict_left_index(A, k, t):
    # largest j <= k with A[j] < t, or -1
    if A[0] >= t:
        return -1
    lo = 0
    hi = k
    if A[k] < t:
        return k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if A[mid] < t:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def batch(p, levels, seed, start, n, t_obs, y_last, t_rev,
          o_status, o_steps, o_S, o_A, o_X, o_left, o_obs, o_min, o_max,
          o_suplast, o_tlast, o_rev):
    """Simulate paths ``start .. start+n-1`` and write per-path summaries."""
    cap = 4096
    bS = np.empty(cap)
    bA = np.empty(cap)
    bX = np.empty(cap)
    m = t_obs.size
    for i in range(n):
        s = stream_key(seed, start + i)
        k, st, s, bS, bA, bX = walk(p, levels, s, bS, bA, bX)
        o_status[i] = st
        o_steps[i] = k
        o_S[i] = bS[k]
        o_A[i] = bA[k]
        o_X[i] = bX[k]
        o_left[i] = bX[k - 1] if k > 0 else bX[0]
        for j in range(m):
            t = t_obs[j]
            if st == ST_CENSORED and t > bA[k]:
                o_obs[i, j] = np.nan
            else:
                o_obs[i, j] = bX[_left_index(bA, k, t)]
        mn = bX[0]
        mx = bX[0]
        sup_last = np.nan
        t_last = np.nan
        for j in range(k + 1):
            v = bX[j]
            if v < mn:
                mn = v
            if v > mx:
                mx = v
            if v <= y_last:
                sup_last = mx
                t_last = bA[j]
        o_min[i] = mn
        o_max[i] = mx
        o_suplast[i] = sup_last
        o_tlast[i] = t_last
        r = np.nan
        if st == ST_KILLED:
            target = bA[k] - t_rev
            if target > 0.0:
                r = bX[_strict_left_index(bA, k, target)]
        o_rev[i] = r


@njit(cache=True, nogil=True)
def record(p, levels, seed, start, n):
    """Simulate paths and return their concatenated knots with offsets."""
    cap = 4096
    bS = np.empty(cap)
    bA = np.empty(cap)
    bX = np.empty(cap)
    tot = 1 << 16
    S = np.empty(tot)
    A = np.empty(tot)
    X = np.empty(tot)
    off = np.zeros(n + 1, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    pos = 0
    for i in range(n):
        s = stream_key(seed, start + i)
        k, st, s, bS, bA, bX = walk(p, levels, s, bS, bA, bX)
        need = pos + k + 1
        if need > S.size:
            newsize = S.size
            while newsize < need:
                newsize *= 2
            S2 = np.empty(newsize)
            A2 = np.empty(newsize)
            X2 = np.empty(newsize)
            S2[:pos] = S[:pos]
            A2[:pos] = A[:pos]
            X2[:pos] = X[:pos]
            S, A, X = S2, A2, X2
        S[pos:need] = bS[: k + 1]
        A[pos:need] = bA[: k + 1]
        X[pos:need] = bX[: k + 1]
        pos = need
        off[i + 1] = pos
        status[i] = st
    return S[:pos].copy(), A[:pos].copy(), X[:pos].copy(), off, status
