"""Pure-numpy kernels (fallback backend).

Same contracts as `_kernels_numba`, selected via the
DCSBM_MONITOR_BACKEND environment variable (see `backend.py`).  Integer
draws match the compiled backend exactly for a given key; float
statistics can differ in the last ulp because numpy's exp/log and
pairwise summation are not bit-identical to scalar libm loops.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from . import rng as _rng

U64 = np.uint64
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
TWO_M53 = 2.0**-53

TAG_THETA = U64(1 << 56)
TAG_EDGE = U64(2 << 56)
TAG_LABEL = U64(3 << 56)
ITEM_SHIFT = U64(8)

POISSON_SWITCH = 30.0


def _u01_vec(key, indices):
    h = U64((int(key) + GOLDEN) & ((1 << 64) - 1)) ^ indices
    h ^= h >> U64(30)
    h *= MIX1
    h ^= h >> U64(27)
    h *= MIX2
    h ^= h >> U64(31)
    return ((h >> U64(11)).astype(np.float64) + 0.5) * TWO_M53


def derive(key, ix):
    return _rng.derive(int(key), int(ix))


def _poisson_inversion(key, base_idx, lam):
    u = _u01_vec(key, base_idx)
    p = np.exp(-lam)
    f = p.copy()
    x = np.zeros(lam.shape, np.int64)
    active = u > f
    it = 0
    while active.any() and it < 400:
        it += 1
        x[active] += 1
        p[active] *= lam[active] / x[active]
        f[active] += p[active]
        active &= u > f
    return x


def _poisson_ptrs(key, base_idx, lam):
    b = 0.931 + 2.53 * np.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = np.log(lam)
    out = np.zeros(lam.shape, np.int64)
    todo = np.arange(lam.size)
    for att in range(1, 128):
        if todo.size == 0:
            break
        idx = base_idx[todo]
        u = _u01_vec(key, idx + U64(2 * att - 1)) - 0.5
        v = _u01_vec(key, idx + U64(2 * att))
        us = 0.5 - np.abs(u)
        kf = np.floor((2.0 * a[todo] / us + b[todo]) * u + lam[todo] + 0.43)
        accept = (us >= 0.07) & (v <= vr[todo])
        maybe = ~accept & (kf >= 0.0) & ~((us < 0.013) & (v > us))
        if maybe.any():
            lhs = (np.log(v[maybe]) + np.log(inv_alpha[todo][maybe])
                   - np.log(a[todo][maybe] / (us[maybe] * us[maybe]) + b[todo][maybe]))
            rhs = (kf[maybe] * log_lam[todo][maybe] - lam[todo][maybe]
                   - gammaln(kf[maybe] + 1.0))
            acc2 = np.zeros(todo.size, bool)
            acc2[np.flatnonzero(maybe)] = lhs <= rhs
            accept |= acc2
        out[todo[accept]] = kf[accept].astype(np.int64)
        todo = todo[~accept]
    if todo.size:
        out[todo] = lam[todo].astype(np.int64)
    return out


def poisson_vec(key, base_idx, lam):
    """Poisson draws for an array of rates; counter semantics match the
    scalar `poisson_draw` in the compiled backend."""
    out = np.zeros(lam.shape, np.int64)
    small = (lam > 0.0) & (lam < POISSON_SWITCH)
    if small.any():
        out[small] = _poisson_inversion(key, base_idx[small], lam[small])
    big = lam >= POISSON_SWITCH
    if big.any():
        out[big] = _poisson_ptrs(key, base_idx[big], lam[big])
    return out


def poisson_draw(key, base_index, lam):
    return int(poisson_vec(key, np.array([base_index], np.uint64),
                           np.array([lam], np.float64))[0])


def draw_theta(key_t, labels0, sizes, delta):
    n = labels0.shape[0]
    k = sizes.shape[0]
    idx = TAG_THETA | (np.arange(n, dtype=np.uint64) << ITEM_SHIFT)
    u = _u01_vec(key_t, idx)
    d = delta[labels0]
    th0 = 1.0 - d + 2.0 * d * u
    sums = np.bincount(labels0, weights=th0, minlength=k)
    return th0 * sizes[labels0] / sums[labels0]


def _pair_arrays(n):
    pu, pv = np.triu_indices(n, 1)
    base = TAG_EDGE | (np.arange(pu.size, dtype=np.uint64) << ITEM_SHIFT)
    return pu, pv, base


def sample_dense(key_t, theta, labels0, P):
    n = labels0.shape[0]
    pu, pv, base = _pair_arrays(n)
    lam = theta[pu] * theta[pv] * P[labels0[pu], labels0[pv]]
    w = poisson_vec(key_t, base, lam)
    W = np.zeros((n, n), np.int64)
    W[pu, pv] = w
    W[pv, pu] = w
    return W


def step_stats(key_t, gen_labels0, gen_sizes, gen_delta, gen_P,
               mon_labels0, mon_sizes, theta_in, use_theta_in):
    n = gen_labels0.shape[0]
    k = mon_sizes.shape[0]
    theta = theta_in if use_theta_in else draw_theta(key_t, gen_labels0, gen_sizes, gen_delta)
    pu, pv, base = _pair_arrays(n)
    lam = theta[pu] * theta[pv] * gen_P[gen_labels0[pu], gen_labels0[pv]]
    w = poisson_vec(key_t, base, lam).astype(np.float64)
    deg = np.bincount(pu, weights=w, minlength=n) + np.bincount(pv, weights=w, minlength=n)
    a = mon_labels0[pu]
    b = mon_labels0[pv]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    M = np.bincount(lo * k + hi, weights=w, minlength=k * k).reshape(k, k)
    nstats = k * (k + 1) // 2 + 1
    out = np.empty(nstats, np.float64)
    i = 0
    for r in range(k):
        for s in range(r, k):
            m_ord = 2.0 * M[r, s] if r == s else M[r, s]
            out[i] = m_ord / (mon_sizes[r] * mon_sizes[s])
            i += 1
    D = np.bincount(mon_labels0, weights=deg, minlength=k)
    ok = (D[mon_labels0] > 0.0) & (mon_sizes[mon_labels0] >= 2)
    th_hat = np.where(ok, deg * mon_sizes[mon_labels0] / np.where(D[mon_labels0] > 0, D[mon_labels0], 1.0), 1.0)
    dev = np.where(ok, th_hat - 1.0, 0.0)
    wdof = float(np.sum(mon_sizes[mon_sizes >= 2] - 1))
    out[nstats - 1] = math.sqrt(float(np.sum(dev * dev)) / wdof) if wdof > 0 else 0.0
    return out


def run_replicate(rep_key, m, t_star, cap,
                  pre_labels0, pre_sizes, pre_delta, pre_P,
                  post_labels0, post_sizes, post_delta, post_P,
                  mon_labels0, mon_sizes, redraw_theta):
    k = mon_sizes.shape[0]
    nstats = k * (k + 1) // 2 + 1
    theta_pre = np.empty(0)
    theta_post = np.empty(0)
    if not redraw_theta:
        theta_pre = draw_theta(derive(rep_key, 1), pre_labels0, pre_sizes, pre_delta)
        theta_post = draw_theta(derive(rep_key, m + t_star), post_labels0, post_sizes, post_delta)

    phase1 = np.empty((m, nstats))
    for t in range(1, m + 1):
        kt = derive(rep_key, t)
        phase1[t - 1] = step_stats(kt, pre_labels0, pre_sizes, pre_delta, pre_P,
                                   mon_labels0, mon_sizes, theta_pre, not redraw_theta)
    mu = phase1.mean(axis=0)
    sig = math.sqrt(math.pi) / (2.0 * (m - 1)) * np.abs(np.diff(phase1, axis=0)).sum(axis=0)
    lcl = mu - 3.0 * sig
    ucl = mu + 3.0 * sig

    rl = np.zeros(nstats, np.int64)
    censored = np.zeros(nstats, bool)
    fa = np.zeros(nstats, np.int64)
    pending = np.ones(nstats, bool)
    j = 0
    while True:
        j += 1
        kt = derive(rep_key, m + j)
        if j >= t_star:
            stats = step_stats(kt, post_labels0, post_sizes, post_delta, post_P,
                               mon_labels0, mon_sizes, theta_post, not redraw_theta)
        else:
            stats = step_stats(kt, pre_labels0, pre_sizes, pre_delta, pre_P,
                               mon_labels0, mon_sizes, theta_pre, not redraw_theta)
        sig_now = (stats > ucl) | (stats < lcl)
        hit = sig_now & pending
        if j < t_star:
            # pre-change signal: chart is spent, no valid run length
            fa[hit] = 1
            pending[hit] = False
        else:
            rl[hit] = j - t_star + 1
            pending[hit] = False
        if j - t_star + 1 >= cap:
            rl[pending] = cap
            censored[pending] = True
            pending[:] = False
        if not pending.any():
            break
    return rl, censored, fa, mu, sig


def jacobi_eigh(A, tol=1e-10, max_sweeps=60):
    n = A.shape[0]
    M = A.astype(np.float64).copy()
    V = np.eye(n)
    off = 0.0
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(M, 1) ** 2)))
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
                colp = M[:, p].copy()
                colq = M[:, q].copy()
                M[:, p] = c * colp - s * colq
                M[:, q] = s * colp + c * colq
                rowp = M[p, :].copy()
                rowq = M[q, :].copy()
                M[p, :] = c * rowp - s * rowq
                M[q, :] = s * rowp + c * rowq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(M).copy(), V, off


def warmup():
    """No compilation needed; present for backend symmetry."""
