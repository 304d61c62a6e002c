"""Degree-corrected block model: parameters, simulator, likelihood, MLE.

Random ops take an integer ``key`` (see rng.key_from_seed / rng.derive)
instead of a stateful generator, so every draw is a pure function of
(key, position) and replicates parallelize without coordination.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import rng
from .backend import kernels
from .graphs import CommunityAssignment, DynamicNetwork, WeightedGraph, \
    block_weight_matrix, degrees

IDENT_RTOL = 1e-10


def _check_P(P: np.ndarray, k: int, name: str = "P") -> np.ndarray:
    P = np.asarray(P, np.float64)
    if P.shape != (k, k):
        raise ValueError(f"{name} must be {k}x{k}")
    if not np.allclose(P, P.T, rtol=0, atol=0):
        raise ValueError(f"{name} must be symmetric")
    if (P <= 0).any():
        raise ValueError(f"{name} entries must be positive")
    return P


def _check_delta(delta, k: int, name: str = "delta") -> np.ndarray:
    d = np.asarray(delta, np.float64)
    if d.shape != (k,):
        raise ValueError(f"{name} must have length {k}")
    if (d < 0).any() or (d > 1).any():
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return d


@dataclass(frozen=True)
class DcsbmParams:
    """Model parameters tied to a fixed community assignment.

    theta may be None for a template whose propensities are drawn
    later (the dynamic simulator redraws them anyway); ops that need
    actual propensities raise if it is missing.
    """

    c: CommunityAssignment
    theta: Optional[np.ndarray]
    P: np.ndarray
    delta: np.ndarray
    pi: Optional[np.ndarray] = None

    def __post_init__(self):
        k = self.c.k
        object.__setattr__(self, "P", _check_P(self.P, k))
        object.__setattr__(self, "delta", _check_delta(self.delta, k))
        if self.pi is not None:
            pi = np.asarray(self.pi, np.float64)
            if pi.shape != (k,) or (pi <= 0).any() or abs(pi.sum() - 1.0) > 1e-9:
                raise ValueError("pi must be a length-k vector of positive weights summing to 1")
            object.__setattr__(self, "pi", pi)
        if self.theta is not None:
            th = np.asarray(self.theta, np.float64)
            if th.shape != (self.c.n,):
                raise ValueError("theta must have one entry per node")
            if (th < 0).any():
                raise ValueError("theta entries must be nonnegative")
            sums = np.bincount(self.c.zero_based(), weights=th, minlength=k)
            sizes = self.c.sizes()
            if not np.allclose(sums, sizes, rtol=IDENT_RTOL, atol=0):
                raise ValueError("theta must sum to the community size within each community")
            object.__setattr__(self, "theta", th)

    @property
    def n(self) -> int:
        return self.c.n

    @property
    def k(self) -> int:
        return self.c.k

    def with_theta(self, theta: np.ndarray) -> "DcsbmParams":
        return DcsbmParams(self.c, theta, self.P, self.delta, self.pi)


@dataclass(frozen=True)
class ChangeSpec:
    """Post-change regime: new assignment, block matrix, spreads."""

    t_star: int
    c_star: CommunityAssignment
    P_star: np.ndarray
    delta_star: np.ndarray

    def __post_init__(self):
        if self.t_star < 2:
            raise ValueError("t_star must be at least 2 (one pre-change graph)")
        k = self.c_star.k
        object.__setattr__(self, "P_star", _check_P(self.P_star, k, "P_star"))
        object.__setattr__(self, "delta_star", _check_delta(self.delta_star, k, "delta_star"))


def draw_labels(pi, n: int, key: int) -> CommunityAssignment:
    """n i.i.d. labels from the category distribution pi."""
    pi = np.asarray(pi, np.float64)
    if pi.ndim != 1 or (pi <= 0).any() or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError("pi must be positive and sum to 1")
    idx = np.array([rng.draw_index(rng.TAG_LABEL, u, 0) for u in range(n)], np.uint64)
    u = rng.uniform_array(key, idx)
    lab = np.searchsorted(np.cumsum(pi), u, side="right")
    return CommunityAssignment(np.minimum(lab, pi.size - 1) + 1, k=pi.size)


def draw_theta(c: CommunityAssignment, delta, key: int) -> np.ndarray:
    """Uniform propensities scaled so each community sums to its size."""
    sizes = c.sizes()
    if (sizes == 0).any():
        r = int(np.nonzero(sizes == 0)[0][0]) + 1
        raise ValueError(f"empty community {r}")
    d = _check_delta(delta, c.k)
    return kernels.draw_theta(key, c.zero_based(), sizes.astype(np.int64), d)


def simulate_graph(params: DcsbmParams, key: int) -> WeightedGraph:
    """One graph: w_uv ~ Poisson(theta_u theta_v P[c_u, c_v]) for u < v."""
    if params.theta is None:
        raise ValueError("params.theta is required to simulate a graph")
    w = kernels.sample_dense(key, params.theta, params.c.zero_based(), params.P)
    return WeightedGraph(w)


def simulate_dynamic(pre: DcsbmParams, change: Optional[ChangeSpec], T: int,
                     key: int, redraw_theta: bool = True) -> DynamicNetwork:
    """T graphs; regime switches to the ChangeSpec at t >= t_star.

    With redraw_theta (default) propensities are drawn fresh each step;
    otherwise one draw per regime is held fixed. A change with
    t_star > T (or change=None) yields an unchanged sequence.
    """
    if T < 1:
        raise ValueError("T must be positive")
    t_star = change.t_star if change is not None else T + 1
    regimes = {
        False: (pre.c, pre.P, np.asarray(pre.delta, np.float64)),
    }
    if change is not None:
        if change.c_star.n != pre.c.n:
            raise ValueError("c_star must cover the same nodes")
        regimes[True] = (change.c_star, change.P_star,
                         np.asarray(change.delta_star, np.float64))
    held: dict = {}
    graphs = []
    for t in range(1, T + 1):
        post = t >= t_star
        c, P, delta = regimes[post]
        kt = rng.derive(key, t)
        if redraw_theta:
            theta = kernels.draw_theta(kt, c.zero_based(), c.sizes().astype(np.int64), delta)
        else:
            if post not in held:
                k0 = rng.derive(key, t_star if post else 1)
                held[post] = kernels.draw_theta(k0, c.zero_based(),
                                                c.sizes().astype(np.int64), delta)
            theta = held[post]
        graphs.append(WeightedGraph(kernels.sample_dense(kt, theta, c.zero_based(), P)))
    return DynamicNetwork(tuple(graphs))


def log_likelihood(g: WeightedGraph, params: DcsbmParams) -> float:
    """Log likelihood up to the additive log(w!) constant.

    The label-frequency term sum_r n_r log pi_r enters only when pi is
    present; without it this is the likelihood conditional on labels.
    """
    if params.theta is None:
        raise ValueError("params.theta is required")
    if g.n != params.n:
        raise ValueError("graph and params disagree on n")
    d = degrees(g).astype(np.float64)
    th = params.theta
    if ((th == 0) & (d > 0)).any():
        return -math.inf
    total = 0.0
    if params.pi is not None:
        total += float(params.c.sizes() @ np.log(params.pi))
    pos = th > 0
    total += float(d[pos] @ np.log(th[pos]))
    M = block_weight_matrix(g, params.c).astype(np.float64)
    sizes = params.c.sizes().astype(np.float64)
    total += 0.5 * float(np.sum(M * np.log(params.P) - np.outer(sizes, sizes) * params.P))
    return total


class MleResult(NamedTuple):
    theta: np.ndarray
    pi: np.ndarray
    P: np.ndarray
    degenerate: Tuple[int, ...]  # communities with zero total degree


def mle(g: WeightedGraph, c: CommunityAssignment) -> MleResult:
    """Closed-form estimates given labels.

    theta_hat_u = d_u / (mean degree of u's community); pi_hat_r = n_r/n;
    P_hat_rs = m_rs / (n_r n_s) with the diagonal of m double-counted.
    Zero-degree communities get theta_hat = 1 and are flagged.
    """
    if c.n != g.n:
        raise ValueError("assignment length must match the node count")
    sizes = c.sizes()
    if (sizes == 0).any():
        r = int(np.nonzero(sizes == 0)[0][0]) + 1
        raise ValueError(f"empty community {r}")
    d = degrees(g).astype(np.float64)
    lab0 = c.zero_based()
    D = np.bincount(lab0, weights=d, minlength=c.k)
    degenerate = tuple(int(r) + 1 for r in np.nonzero(D == 0)[0])
    mean_deg = np.where(D > 0, D / sizes, 1.0)
    theta = np.where(D[lab0] > 0, d / mean_deg[lab0], 1.0)
    pi = sizes / c.n
    M = block_weight_matrix(g, c).astype(np.float64)
    P = M / np.outer(sizes, sizes)
    return MleResult(theta, pi, P, degenerate)


def expected_weights(theta, labels, P) -> np.ndarray:
    """E[w_uv] = theta_u theta_v P[c_u, c_v], zero diagonal.

    Pure algebra on raw arrays; no identifiability requirement, so it
    also serves the classical special cases below.
    """
    theta = np.asarray(theta, np.float64)
    lab0 = np.asarray(labels, np.int64) - 1
    P = np.asarray(P, np.float64)
    E = np.outer(theta, theta) * P[np.ix_(lab0, lab0)]
    np.fill_diagonal(E, 0.0)
    return E


def reduction_checks(params: DcsbmParams, atol: float = 1e-12) -> dict:
    """Which classical models these parameters collapse to.

    Reports max absolute deviation of the expected-weight matrix from
    each applicable closed form: plain block model (theta all 1),
    constant-rate graph (additionally P constant), and the k=1 case
    where expected weights factor as d(u)d(v)/sum(d) for the implied
    expected degrees d.
    """
    if params.theta is None:
        raise ValueError("params.theta is required")
    E = expected_weights(params.theta, params.c.labels, params.P)
    report: dict = {"expected_weights": E}
    th, P, lab0 = params.theta, params.P, params.c.zero_based()
    off = ~np.eye(params.n, dtype=bool)
    if np.max(np.abs(th - 1.0)) <= atol:
        dev = np.max(np.abs(E - P[np.ix_(lab0, lab0)])[off])
        report["sbm"] = {"holds": dev <= atol, "max_deviation": float(dev)}
        p0 = float(P.flat[0])
        if np.max(np.abs(P - p0)) <= atol:
            dev = np.max(np.abs(E[off] - p0))
            report["erdos_renyi"] = {"holds": dev <= atol, "p": p0,
                                     "max_deviation": float(dev)}
    if params.k == 1:
        p = float(P[0, 0])
        S = float(th.sum())
        d = th * p * S  # expected degree, self-pair included
        dev = np.max(np.abs(E - np.outer(d, d) / d.sum())[off])
        report["chung_lu"] = {"holds": dev <= atol, "max_deviation": float(dev)}
    return report


# --- parameter file -------------------------------------------------
#
# Flat key-value text, one "key = value" per line, '#' comments.
# Required: n, k, P (row-major k*k), delta; labels or pi.
# Optional change block: t_star, P_star, delta_star, and labels_star
# (its own k_star is inferred from the labels; defaults to the
# pre-change labels when omitted).


def parse_param_file(path) -> Tuple[DcsbmParams, Optional[ChangeSpec]]:
    own = isinstance(path, (str, os.PathLike))
    fh = open(path) if own else path
    raw: dict = {}
    try:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key in raw:
                raise ValueError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = val
    finally:
        if own:
            fh.close()

    def ints(key):
        return np.array([int(tok) for tok in raw[key].split()], np.int64)

    def reals(key):
        return np.array([float(tok) for tok in raw[key].split()], np.float64)

    for key in ("n", "k", "P", "delta"):
        if key not in raw:
            raise ValueError(f"missing required key {key!r}")
    n, k = int(raw["n"]), int(raw["k"])
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    if ("labels" in raw) == ("pi" in raw):
        raise ValueError("exactly one of 'labels' or 'pi' is required")
    if "labels" in raw:
        lab = ints("labels")
        if lab.size != n:
            raise ValueError(f"labels must list {n} entries")
        c = CommunityAssignment(lab, k=k)
        pi = None
    else:
        pi = reals("pi")
        if pi.size != k:
            raise ValueError(f"pi must list {k} entries")
        c = None
    P = reals("P")
    if P.size != k * k:
        raise ValueError(f"P must list {k * k} entries row-major")
    P = P.reshape(k, k)
    delta = reals("delta")
    if delta.size == 1 and k > 1:
        delta = np.full(k, delta[0])
    if c is None:
        # labels drawn at simulate time; carry pi through a stand-in
        # assignment so validation of P/delta still runs
        c = CommunityAssignment(np.resize(np.arange(1, k + 1), n), k=k)
    params = DcsbmParams(c, None, P, delta, pi)

    change = None
    if "t_star" in raw:
        t_star = int(raw["t_star"])
        if "labels_star" in raw:
            lab2 = ints("labels_star")
            if lab2.size != n:
                raise ValueError(f"labels_star must list {n} entries")
            c2 = CommunityAssignment(lab2, k=int(raw["k_star"]) if "k_star" in raw else int(lab2.max()))
        else:
            c2 = params.c
        k2 = c2.k
        P2 = reals("P_star") if "P_star" in raw else P
        if P2.size != k2 * k2:
            raise ValueError(f"P_star must list {k2 * k2} entries row-major")
        d2 = reals("delta_star") if "delta_star" in raw else delta
        if d2.size == 1 and k2 > 1:
            d2 = np.full(k2, d2[0])
        change = ChangeSpec(t_star, c2, P2.reshape(k2, k2), d2)
    elif any(key in raw for key in ("labels_star", "P_star", "delta_star")):
        raise ValueError("post-change keys require t_star")
    return params, change


def write_param_file(path, params: DcsbmParams, change: Optional[ChangeSpec] = None) -> None:
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, "w") if own else path

    def row(vec):
        return " ".join(repr(float(x)) for x in np.asarray(vec).ravel())

    try:
        fh.write(f"n = {params.n}\nk = {params.k}\n")
        if params.pi is not None:
            fh.write(f"pi = {row(params.pi)}\n")
        else:
            fh.write("labels = " + " ".join(str(int(x)) for x in params.c.labels) + "\n")
        fh.write(f"P = {row(params.P)}\n")
        fh.write(f"delta = {row(params.delta)}\n")
        if change is not None:
            fh.write(f"t_star = {change.t_star}\n")
            fh.write("labels_star = " + " ".join(str(int(x)) for x in change.c_star.labels) + "\n")
            fh.write(f"k_star = {change.c_star.k}\n")
            fh.write(f"P_star = {row(change.P_star)}\n")
            fh.write(f"delta_star = {row(change.delta_star)}\n")
    finally:
        if own:
            fh.close()


def merge_communities(c: CommunityAssignment, P, delta, r: int, s: int):
    """Union communities r and s (1-based); block rates average.

    The merged block's rate is the mean of the four rates among
    {r, s}; rates to any other community average the two old rows.
    Returns (assignment, P_star, delta_star).
    """
    if not (1 <= r <= c.k and 1 <= s <= c.k) or r == s:
        raise ValueError("r and s must be distinct communities")
    r, s = min(r, s), max(r, s)
    P = np.asarray(P, np.float64)
    delta = np.asarray(delta, np.float64)
    keep = [q for q in range(c.k) if q != s - 1]
    old = np.array(keep)
    newP = P[np.ix_(old, old)].copy()
    pos = keep.index(r - 1)
    pair = [r - 1, s - 1]
    for j, q in enumerate(keep):
        if q == r - 1:
            continue
        v = 0.5 * (P[r - 1, q] + P[s - 1, q])
        newP[pos, j] = newP[j, pos] = v
    newP[pos, pos] = float(P[np.ix_(pair, pair)].mean())
    newd = delta[old].copy()
    newd[pos] = 0.5 * (delta[r - 1] + delta[s - 1])
    relabel = np.zeros(c.k + 1, np.int64)
    for j, q in enumerate(keep):
        relabel[q + 1] = j + 1
    relabel[s] = pos + 1
    return CommunityAssignment(relabel[c.labels], k=c.k - 1), newP, newd


def split_community(c: CommunityAssignment, r: int) -> CommunityAssignment:
    """Split community r into contiguous halves of ceil/floor(n_r/2).

    The first half (node order) keeps label r; the rest become the new
    community k+1.
    """
    if not 1 <= r <= c.k:
        raise ValueError(f"community {r} out of range")
    members = np.nonzero(c.labels == r)[0]
    if members.size < 2:
        raise ValueError(f"community {r} too small to split")
    first = (members.size + 1) // 2
    lab = np.array(c.labels)
    lab[members[first:]] = c.k + 1
    return CommunityAssignment(lab, k=c.k + 1)
