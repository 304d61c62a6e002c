"""Compiled kernels (numba backend).

Mirrors `_kernels_numpy` function-for-function; `backend.py` picks one of
the two at import time.  Randomness is counter-based (see `rng.py`): each
draw is a pure function of a 64-bit key and a draw index, so a scalar
loop here and the vectorized numpy path produce the same streams.

Public entry points take plain-int keys and coerce array dtypes; the
@njit implementations call each other directly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
MASK64 = (1 << 64) - 1
GOLDEN = U64(0x9E3779B97F4A7C15)
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
S30 = U64(30)
S27 = U64(27)
S31 = U64(31)
S11 = U64(11)
TWO_M53 = 2.0**-53

# index word layout: tag(8) | item(48) | attempt(8)
TAG_THETA = U64(1 << 56)
TAG_EDGE = U64(2 << 56)
TAG_LABEL = U64(3 << 56)
ITEM_SHIFT = U64(8)

POISSON_SWITCH = 30.0  # inversion below, transformed rejection at and above


@njit(cache=True)
def _mix(z):
    z ^= z >> S30
    z *= MIX1
    z ^= z >> S27
    z *= MIX2
    z ^= z >> S31
    return z


@njit(cache=True)
def _derive(key, ix):
    return _mix((key + GOLDEN) ^ ix)


@njit(cache=True)
def _u01(key, index):
    h = _mix((key + GOLDEN) ^ index)
    return (np.float64(h >> S11) + 0.5) * TWO_M53


@njit(cache=True)
def _poisson_draw(key, base_index, lam):
    """One Poisson(lam) variate; attempts use the low byte of the index."""
    if lam <= 0.0:
        return np.int64(0)
    if lam < POISSON_SWITCH:
        # inversion from the bottom of the pmf, one uniform
        u = _u01(key, base_index)
        p = math.exp(-lam)
        f = p
        x = np.int64(0)
        while u > f and x < 400:
            x += 1
            p *= lam / x
            f += p
        return x
    # Hormann's PTRS transformed rejection, two uniforms per attempt
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = math.log(lam)
    for att in range(1, 128):
        u = _u01(key, base_index + U64(2 * att - 1)) - 0.5
        v = _u01(key, base_index + U64(2 * att))
        us = 0.5 - abs(u)
        kf = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return np.int64(kf)
        if kf < 0.0:
            continue
        if us < 0.013 and v > us:
            continue
        if (math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
                <= kf * log_lam - lam - math.lgamma(kf + 1.0)):
            return np.int64(kf)
    return np.int64(lam)  # not reachable: acceptance rate is ~0.9 per attempt


@njit(cache=True)
def _draw_theta(key_t, labels0, sizes, delta):
    n = labels0.shape[0]
    k = sizes.shape[0]
    theta = np.empty(n, np.float64)
    sums = np.zeros(k, np.float64)
    for u in range(n):
        r = labels0[u]
        d = delta[r]
        x = 1.0 - d + 2.0 * d * _u01(key_t, TAG_THETA | (U64(u) << ITEM_SHIFT))
        theta[u] = x
        sums[r] += x
    for u in range(n):
        r = labels0[u]
        theta[u] = theta[u] * sizes[r] / sums[r]
    return theta


@njit(cache=True)
def _sample_dense(key_t, theta, labels0, P):
    n = labels0.shape[0]
    W = np.zeros((n, n), np.int64)
    pair = U64(0)
    one = U64(1)
    for u in range(n - 1):
        tu = theta[u]
        cu = labels0[u]
        for v in range(u + 1, n):
            lam = tu * theta[v] * P[cu, labels0[v]]
            w = _poisson_draw(key_t, TAG_EDGE | (pair << ITEM_SHIFT), lam)
            pair += one
            if w > 0:
                W[u, v] = w
                W[v, u] = w
    return W


@njit(cache=True)
def _step_stats(key_t, gen_labels0, gen_sizes, gen_delta, gen_P,
                mon_labels0, mon_sizes, theta_in, use_theta_in):
    """Draw one network and return its monitored statistics without
    materializing the weight matrix.

    Output layout: upper-triangular block-density estimates row-major
    (q <= r), then the pooled propensity spread.  Draw indices match
    `_sample_dense` / `_draw_theta`, so a dense graph drawn with the
    same key yields identical statistics.
    """
    n = gen_labels0.shape[0]
    k = mon_sizes.shape[0]
    if use_theta_in:
        theta = theta_in
    else:
        theta = _draw_theta(key_t, gen_labels0, gen_sizes, gen_delta)
    deg = np.zeros(n, np.int64)
    M = np.zeros((k, k), np.int64)
    pair = U64(0)
    one = U64(1)
    for u in range(n - 1):
        tu = theta[u]
        cu = gen_labels0[u]
        au = mon_labels0[u]
        for v in range(u + 1, n):
            lam = tu * theta[v] * gen_P[cu, gen_labels0[v]]
            w = _poisson_draw(key_t, TAG_EDGE | (pair << ITEM_SHIFT), lam)
            pair += one
            if w > 0:
                deg[u] += w
                deg[v] += w
                b = mon_labels0[v]
                if au <= b:
                    M[au, b] += w
                else:
                    M[b, au] += w
    nstats = k * (k + 1) // 2 + 1
    out = np.empty(nstats, np.float64)
    i = 0
    for r in range(k):
        for s in range(r, k):
            m_ord = 2.0 * M[r, s] if r == s else np.float64(M[r, s])
            out[i] = m_ord / (mon_sizes[r] * mon_sizes[s])
            i += 1
    # pooled spread of theta-hat about 1 (a community with zero total
    # degree gets theta-hat := 1, hence zero deviations)
    D = np.zeros(k, np.float64)
    for u in range(n):
        D[mon_labels0[u]] += deg[u]
    ssq = 0.0
    wdof = 0.0
    for u in range(n):
        r = mon_labels0[u]
        if D[r] > 0.0 and mon_sizes[r] >= 2:
            th = deg[u] * mon_sizes[r] / D[r]
            dev = th - 1.0
            ssq += dev * dev
    for r in range(k):
        if mon_sizes[r] >= 2:
            wdof += mon_sizes[r] - 1.0
    out[nstats - 1] = math.sqrt(ssq / wdof) if wdof > 0.0 else 0.0
    return out


@njit(cache=True)
def _run_replicate(rep_key, m, t_star, cap,
                   pre_labels0, pre_sizes, pre_delta, pre_P,
                   post_labels0, post_sizes, post_delta, post_P,
                   mon_labels0, mon_sizes, redraw_theta):
    """One ARL replicate: Phase I estimation, then Phase II until every
    chart has a post-change signal or the censoring cap is reached.

    The change applies from Phase II index `t_star` (1-based) onward.
    Run lengths count from the change point; pre-change signals are
    tallied separately as false alarms.
    """
    k = mon_sizes.shape[0]
    nstats = k * (k + 1) // 2 + 1
    theta_pre = np.empty(0, np.float64)
    theta_post = np.empty(0, np.float64)
    if not redraw_theta:
        theta_pre = _draw_theta(_derive(rep_key, U64(1)), pre_labels0, pre_sizes, pre_delta)
        theta_post = _draw_theta(_derive(rep_key, U64(m + t_star)), post_labels0, post_sizes, post_delta)

    phase1 = np.empty((m, nstats), np.float64)
    for t in range(1, m + 1):
        kt = _derive(rep_key, U64(t))
        phase1[t - 1] = _step_stats(kt, pre_labels0, pre_sizes, pre_delta, pre_P,
                                    mon_labels0, mon_sizes, theta_pre, not redraw_theta)
    mu = np.zeros(nstats, np.float64)
    sig = np.zeros(nstats, np.float64)
    for i in range(nstats):
        tot = 0.0
        for t in range(m):
            tot += phase1[t, i]
        mu[i] = tot / m
        mr = 0.0
        for t in range(1, m):
            mr += abs(phase1[t, i] - phase1[t - 1, i])
        sig[i] = math.sqrt(math.pi) / (2.0 * (m - 1)) * mr
    lcl = mu - 3.0 * sig
    ucl = mu + 3.0 * sig

    rl = np.zeros(nstats, np.int64)
    censored = np.zeros(nstats, np.bool_)
    fa = np.zeros(nstats, np.int64)
    pending = np.ones(nstats, np.bool_)
    j = 0
    while True:
        j += 1
        kt = _derive(rep_key, U64(m + j))
        if j >= t_star:
            stats = _step_stats(kt, post_labels0, post_sizes, post_delta, post_P,
                                mon_labels0, mon_sizes, theta_post, not redraw_theta)
        else:
            stats = _step_stats(kt, pre_labels0, pre_sizes, pre_delta, pre_P,
                                mon_labels0, mon_sizes, theta_pre, not redraw_theta)
        for i in range(nstats):
            if pending[i] and (stats[i] > ucl[i] or stats[i] < lcl[i]):
                if j < t_star:
                    # pre-change signal: chart is spent, no valid run length
                    fa[i] = 1
                    pending[i] = False
                else:
                    rl[i] = j - t_star + 1
                    pending[i] = False
        if j - t_star + 1 >= cap:
            for i in range(nstats):
                if pending[i]:
                    rl[i] = cap
                    censored[i] = True
                    pending[i] = False
        done = True
        for i in range(nstats):
            if pending[i]:
                done = False
                break
        if done:
            break
    return rl, censored, fa, mu, sig


@njit(cache=True)
def _jacobi_eigh(A, tol, max_sweeps):
    n = A.shape[0]
    M = A.copy()
    V = np.eye(n)
    off = 0.0
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += M[p, q] * M[p, q]
        off = math.sqrt(2.0 * off)
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                tau = (M[q, q] - M[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    aip = M[i, p]
                    aiq = M[i, q]
                    M[i, p] = c * aip - s * aiq
                    M[i, q] = s * aip + c * aiq
                for i in range(n):
                    api = M[p, i]
                    aqi = M[q, i]
                    M[p, i] = c * api - s * aqi
                    M[q, i] = s * api + c * aqi
                for i in range(n):
                    vip = V[i, p]
                    viq = V[i, q]
                    V[i, p] = c * vip - s * viq
                    V[i, q] = s * vip + c * viq
    w = np.empty(n, np.float64)
    for i in range(n):
        w[i] = M[i, i]
    return w, V, off


# thin typed wrappers: plain-int keys in, coerced dtypes


def _key(key):
    return U64(int(key) & MASK64)


def _i64(a):
    return np.ascontiguousarray(a, np.int64)


def _f64(a):
    return np.ascontiguousarray(a, np.float64)


def derive(key, ix):
    return int(_derive(_key(key), _key(ix)))


def poisson_draw(key, base_index, lam):
    return int(_poisson_draw(_key(key), _key(base_index), float(lam)))


def draw_theta(key_t, labels0, sizes, delta):
    return _draw_theta(_key(key_t), _i64(labels0), _i64(sizes), _f64(delta))


def sample_dense(key_t, theta, labels0, P):
    return _sample_dense(_key(key_t), _f64(theta), _i64(labels0), _f64(P))


def step_stats(key_t, gen_labels0, gen_sizes, gen_delta, gen_P,
               mon_labels0, mon_sizes, theta_in, use_theta_in):
    return _step_stats(_key(key_t), _i64(gen_labels0), _i64(gen_sizes),
                       _f64(gen_delta), _f64(gen_P), _i64(mon_labels0),
                       _i64(mon_sizes), _f64(theta_in), bool(use_theta_in))


def run_replicate(rep_key, m, t_star, cap,
                  pre_labels0, pre_sizes, pre_delta, pre_P,
                  post_labels0, post_sizes, post_delta, post_P,
                  mon_labels0, mon_sizes, redraw_theta):
    return _run_replicate(_key(rep_key), int(m), int(t_star), int(cap),
                          _i64(pre_labels0), _i64(pre_sizes), _f64(pre_delta), _f64(pre_P),
                          _i64(post_labels0), _i64(post_sizes), _f64(post_delta), _f64(post_P),
                          _i64(mon_labels0), _i64(mon_sizes), bool(redraw_theta))


def jacobi_eigh(A, tol=1e-10, max_sweeps=60):
    return _jacobi_eigh(_f64(A), float(tol), int(max_sweeps))


def warmup():
    """Force-compile the kernels on tiny inputs (cached across runs)."""
    labels = np.zeros(3, np.int64)
    sizes = np.array([3], np.int64)
    delta = np.array([0.5], np.float64)
    P = np.array([[0.5]], np.float64)
    th = draw_theta(1, labels, sizes, delta)
    sample_dense(1, th, labels, P)
    step_stats(1, labels, sizes, delta, P, labels, sizes, th, False)
    run_replicate(1, 3, 1, 2, labels, sizes, delta, P,
                  labels, sizes, delta, P, labels, sizes, True)
    jacobi_eigh(np.eye(3), 1e-10, 5)
    poisson_draw(1, 0, 40.0)
