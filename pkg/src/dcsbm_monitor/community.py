"""Community detection on an averaged graph: regularized spectral clustering."""

from __future__ import annotations

import itertools
import warnings
from typing import Optional, Tuple

import numpy as np

from . import rng
from .backend import kernels
from .graphs import CommunityAssignment

KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 100


def _top_k_eigvecs(L: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with the k largest |eigenvalue|, by cyclic Jacobi."""
    vals, vecs, _ = kernels.jacobi_eigh(L)
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    return vals[order], vecs[:, order]


def _kmeans_once(X: np.ndarray, k: int, key: int, restart: int) -> Tuple[np.ndarray, float]:
    n = X.shape[0]
    # k-means++ seeding, all uniforms from the counter stream
    centers = np.empty((k, X.shape[1]))
    u0 = rng.uniform(key, rng.draw_index(rng.TAG_KMEANS, restart * 2048, 0))
    centers[0] = X[int(u0 * n) % n]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        u = rng.uniform(key, rng.draw_index(rng.TAG_KMEANS, restart * 2048 + j, 0))
        if total <= 0:
            centers[j] = X[int(u * n) % n]
        else:
            centers[j] = X[np.searchsorted(np.cumsum(d2), u * total, side="right").clip(0, n - 1)]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    lab = np.zeros(n, np.int64)
    for _ in range(KMEANS_MAX_ITER):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = dist.argmin(axis=1)
        if np.array_equal(new, lab) and _ > 0:
            break
        lab = new
        for j in range(k):
            mask = lab == j
            if mask.any():
                centers[j] = X[mask].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = dist.min(axis=1).argmax()
                centers[j] = X[far]
    dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    lab = dist.argmin(axis=1)
    return lab, float(dist.min(axis=1).sum())


def _kmeans(X: np.ndarray, k: int, key: int) -> np.ndarray:
    best_lab, best_cost, best_r = None, np.inf, -1
    for r in range(KMEANS_RESTARTS):
        lab, cost = _kmeans_once(X, k, key, r)
        if cost < best_cost - 1e-12 or (best_lab is None):
            best_lab, best_cost, best_r = lab, cost, r
    return best_lab


def regularized_spectral_clustering(A: np.ndarray, k: int,
                                    tau: Optional[float] = None,
                                    key: int = 0) -> CommunityAssignment:
    """Cluster nodes of a nonnegative symmetric matrix into k groups.

    Builds L = D_tau^{-1/2} A D_tau^{-1/2} with D_tau = D + tau*I
    (tau defaults to the mean degree), embeds each node by the k
    eigenvectors of largest-magnitude eigenvalue with rows scaled to
    unit length, and k-means clusters the rows. Zero-degree nodes keep
    a zero embedding row and land in the largest cluster.
    """
    A = np.asarray(A, np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.allclose(A, A.T, rtol=1e-12, atol=1e-12):
        raise ValueError("A must be symmetric")
    if (A < 0).any():
        raise ValueError("A must be entrywise nonnegative")
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    if k == 1:
        return CommunityAssignment(np.ones(n, np.int64), k=1)
    deg = A.sum(axis=1)
    if tau is None:
        tau = float(deg.mean())
    dt = deg + tau
    if (dt <= 0).any():
        raise ValueError("zero graph with tau=0 has no spectral embedding")
    inv_sqrt = 1.0 / np.sqrt(dt)
    L = A * np.outer(inv_sqrt, inv_sqrt)
    _, vecs = _top_k_eigvecs(L, k)
    norms = np.linalg.norm(vecs, axis=1)
    zero_rows = norms <= 1e-300
    X = np.where(zero_rows[:, None], 0.0, vecs / np.where(zero_rows, 1.0, norms)[:, None])
    lab0 = _kmeans(X, k, key)
    if zero_rows.any():
        counts = np.bincount(lab0[~zero_rows], minlength=k) if (~zero_rows).any() \
            else np.bincount(lab0, minlength=k)
        lab0[zero_rows] = int(counts.argmax())
        warnings.warn(f"{int(zero_rows.sum())} zero-degree node(s) assigned "
                      "to the largest cluster", stacklevel=2)
    return CommunityAssignment(lab0 + 1, k=k)


def align_labels(estimate: CommunityAssignment,
                 reference: CommunityAssignment) -> Tuple[CommunityAssignment, float]:
    """Relabel `estimate` to best agree with `reference`.

    Exhaustive over permutations for k <= 6, greedy by overlap counts
    above that. Returns the permuted assignment and agreement in [0,1].
    """
    if estimate.k != reference.k:
        raise ValueError("assignments must share k")
    if estimate.n != reference.n:
        raise ValueError("assignments must share n")
    k, n = estimate.k, estimate.n
    overlap = np.zeros((k, k), np.int64)
    np.add.at(overlap, (estimate.zero_based(), reference.zero_based()), 1)
    if k <= 6:
        best_perm, best = None, -1
        for perm in itertools.permutations(range(k)):
            score = sum(overlap[i, perm[i]] for i in range(k))
            if score > best:
                best, best_perm = score, perm
    else:
        best_perm = [-1] * k
        taken = set()
        order = np.argsort(-overlap.max(axis=1), kind="stable")
        for i in order:
            choices = np.argsort(-overlap[i], kind="stable")
            for j in choices:
                if int(j) not in taken:
                    best_perm[i] = int(j)
                    taken.add(int(j))
                    break
        best = sum(overlap[i, best_perm[i]] for i in range(k))
    mapping = np.empty(k, np.int64)
    for i in range(k):
        mapping[i] = best_perm[i] + 1
    return CommunityAssignment(mapping[estimate.zero_based()], k=k), best / n
