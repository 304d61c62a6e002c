"""Weighted graphs, dynamic sequences, community assignments.

Dense storage throughout: the target scale is a few hundred nodes.
Arrays are frozen after validation so instances can be shared across
worker processes without copying.
"""

from __future__ import annotations

import os

from dataclasses import dataclass, field
from typing import IO, Iterator, Optional, Sequence, Union

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected integer-weighted graph on n nodes, no self-loops."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError("weights must be a square matrix")
        if not np.issubdtype(w.dtype, np.integer):
            if not np.all(w == np.round(w)):
                raise ValueError("edge weights must be integer-valued")
            w = w.astype(np.int64)
        else:
            w = w.astype(np.int64, copy=True)
        if (w < 0).any():
            raise ValueError("edge weights must be nonnegative")
        if np.diagonal(w).any():
            raise ValueError("self-loops are not allowed (nonzero diagonal)")
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class DynamicNetwork:
    """Ordered sequence of graphs on a common node set."""

    graphs: tuple
    times: Optional[tuple] = None

    def __post_init__(self):
        gs = tuple(self.graphs)
        if not gs:
            raise ValueError("a dynamic network needs at least one graph")
        n = gs[0].n
        if any(g.n != n for g in gs):
            raise ValueError("all graphs must share the same node count")
        if self.times is not None:
            ts = tuple(self.times)
            if len(ts) != len(gs):
                raise ValueError("times must match the number of graphs")
            object.__setattr__(self, "times", ts)
        object.__setattr__(self, "graphs", gs)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, i) -> WeightedGraph:
        return self.graphs[i]

    def __iter__(self) -> Iterator[WeightedGraph]:
        return iter(self.graphs)


@dataclass(frozen=True)
class CommunityAssignment:
    """Node labels in 1..k."""

    labels: np.ndarray
    k: int = 0

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.size < 1:
            raise ValueError("labels must be a nonempty vector")
        if not np.issubdtype(lab.dtype, np.integer):
            if not np.all(lab == np.round(lab)):
                raise ValueError("labels must be integers")
        lab = lab.astype(np.int64)
        k = int(self.k) if self.k else int(lab.max())
        if lab.min() < 1 or lab.max() > k:
            raise ValueError(f"labels must lie in 1..{k}")
        object.__setattr__(self, "labels", _frozen(lab))
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        """Community sizes n_r, index r-1 for community r."""
        return np.bincount(self.labels - 1, minlength=self.k)

    def zero_based(self) -> np.ndarray:
        return self.labels - 1


def degrees(g: WeightedGraph) -> np.ndarray:
    """Node degrees d_u = sum of incident edge weights."""
    return g.weights.sum(axis=1)


def block_weight_matrix(g: WeightedGraph, c: CommunityAssignment) -> np.ndarray:
    """Total weight between each pair of communities.

    M[r][s] sums w[u][v] over ordered pairs with c_u=r+1, c_v=s+1, so
    diagonal entries count each within-community edge twice and
    M.sum() equals degrees(g).sum().
    """
    if c.n != g.n:
        raise ValueError("assignment length must match the node count")
    lab0 = c.zero_based()
    k = c.k
    flat = (lab0[:, None] * k + lab0[None, :]).ravel()
    return np.bincount(flat, weights=g.weights.ravel(), minlength=k * k) \
        .reshape(k, k).astype(np.int64)


def average_graph(seq: DynamicNetwork, first: int, last: int) -> np.ndarray:
    """Entrywise mean weight matrix over the 1-based window [first, last]."""
    if not (1 <= first <= last <= len(seq)):
        raise ValueError(f"window [{first}, {last}] out of range for length {len(seq)}")
    acc = np.zeros((seq.n, seq.n), np.float64)
    for j in range(first - 1, last):
        acc += seq[j].weights
    acc /= last - first + 1
    return acc


# edge-list text format: header "# n=<nodes> T=<steps>", then "t u v w"
# per line (1-based node ids, u < v on output; pairs absent are zero).


def write_edge_list(path: Union[str, os.PathLike, IO[str]], seq: DynamicNetwork) -> None:
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, "w") if own else path
    try:
        fh.write(f"# n={seq.n} T={len(seq)}\n")
        for t, g in enumerate(seq, start=1):
            uu, vv = np.nonzero(np.triu(g.weights, 1))
            for u, v in zip(uu, vv):
                fh.write(f"{t} {u + 1} {v + 1} {g.weights[u, v]}\n")
    finally:
        if own:
            fh.close()


def read_edge_list(path: Union[str, os.PathLike, IO[str]]) -> DynamicNetwork:
    own = isinstance(path, (str, os.PathLike))
    fh = open(path) if own else path
    try:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing '# n=<nodes> T=<steps>' header line")
        fields = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        try:
            n = int(fields["n"])
            T = int(fields["T"])
        except (KeyError, ValueError):
            raise ValueError("header must carry integer n= and T= fields") from None
        if n < 1 or T < 1:
            raise ValueError("header n and T must be positive")
        mats = [np.zeros((n, n), np.int64) for _ in range(T)]
        seen = set()
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 't u v w', got {line!r}")
            try:
                t, u, v, w = (int(p) for p in parts)
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer field in {line!r}") from None
            if not 1 <= t <= T:
                raise ValueError(f"line {lineno}: time {t} outside 1..{T}")
            if not (1 <= u <= n and 1 <= v <= n):
                raise ValueError(f"line {lineno}: node outside 1..{n}")
            if u == v:
                raise ValueError(f"line {lineno}: self-loop on node {u}")
            if w < 0:
                raise ValueError(f"line {lineno}: negative weight {w}")
            a, b = min(u, v), max(u, v)
            if (t, a, b) in seen:
                raise ValueError(f"line {lineno}: duplicate record for pair ({a},{b}) at t={t}")
            seen.add((t, a, b))
            mats[t - 1][a - 1, b - 1] = w
            mats[t - 1][b - 1, a - 1] = w
        return DynamicNetwork(tuple(WeightedGraph(m) for m in mats))
    finally:
        if own:
            fh.close()
