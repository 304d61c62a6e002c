"""Per-graph statistic vectors and the chart bank over a sequence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import charts as _charts
from . import community as _community
from . import model as _model
from .graphs import CommunityAssignment, DynamicNetwork, WeightedGraph, average_graph


@dataclass(frozen=True)
class StatVector:
    """Connectivity estimates and within-community spread for one graph."""

    p_hat: np.ndarray        # k x k, symmetric
    s: np.ndarray            # length k, sd of theta-hat about 1
    pooled_s: float

    @property
    def k(self) -> int:
        return self.p_hat.shape[0]


def stat_vector(g: WeightedGraph, c: CommunityAssignment) -> StatVector:
    """MLE connectivity plus the sample spread of theta-hat per community.

    s_r centers at the constrained mean 1 with denominator n_r - 1;
    pooled_s combines communities weighted by their degrees of freedom.
    """
    sizes = c.sizes()
    small = np.nonzero(sizes < 2)[0]
    if small.size:
        raise ValueError(f"community {int(small[0]) + 1} has fewer than 2 nodes")
    fit = _model.mle(g, c)
    lab0 = c.zero_based()
    dev2 = np.bincount(lab0, weights=(fit.theta - 1.0) ** 2, minlength=c.k)
    dof = sizes - 1
    s = np.sqrt(dev2 / dof)
    pooled = math.sqrt(float((dof * s ** 2).sum() / dof.sum()))
    return StatVector(fit.P, s, pooled)


def stat_labels(k: int, pooled: bool = True, per_community_s: bool = True) -> List[str]:
    """Names of the monitored statistics, in chart-bank order."""
    out = [f"P{q + 1}{r + 1}" for q in range(k) for r in range(q, k)]
    if per_community_s:
        out += [f"s{r + 1}" for r in range(k)]
    if pooled:
        out.append("s")
    return out


def stat_series(seq: Sequence[WeightedGraph],
                assignments, pooled: bool = True,
                per_community_s: bool = True) -> Tuple[np.ndarray, List[str]]:
    """Statistic matrix over time: row t-1 holds the vector at time t.

    `assignments` is a single CommunityAssignment applied to every
    graph, or one per graph (used for rosters that change over time).
    """
    graphs = list(seq)
    if isinstance(assignments, CommunityAssignment):
        assignments = [assignments] * len(graphs)
    else:
        assignments = list(assignments)
        if len(assignments) != len(graphs):
            raise ValueError("need one assignment per graph")
    if not graphs:
        raise ValueError("empty sequence")
    k = assignments[0].k
    if any(a.k != k for a in assignments):
        raise ValueError("all assignments must share k")
    names = stat_labels(k, pooled, per_community_s)
    rows = np.empty((len(graphs), len(names)))
    for i, (g, c) in enumerate(zip(graphs, assignments)):
        v = stat_vector(g, c)
        row = [v.p_hat[q, r] for q in range(k) for r in range(q, k)]
        if per_community_s:
            row += list(v.s)
        if pooled:
            row.append(v.pooled_s)
        rows[i] = row
    return rows, names


@dataclass(frozen=True)
class ChartBank:
    """One chart per monitored statistic plus the combined signal view."""

    charts: Dict[str, _charts.ControlChart]
    m: int
    labels: Optional[CommunityAssignment] = None

    def signal_table(self) -> List[Tuple[int, Tuple[str, ...]]]:
        """(time, statistics that signal there), times ascending."""
        by_t: Dict[int, List[str]] = {}
        for name, ch in self.charts.items():
            for t in ch.signals:
                by_t.setdefault(t, []).append(name)
        return [(t, tuple(sorted(by_t[t]))) for t in sorted(by_t)]

    def first_signal(self) -> Optional[Tuple[int, Tuple[str, ...]]]:
        table = self.signal_table()
        return table[0] if table else None


def monitor(seq, c: CommunityAssignment, m: int,
            kinds: Sequence[str] = ("shewhart",), lam: float = 0.2,
            limit_style: str = "steady-state", pooled: bool = True,
            per_community_s: bool = True) -> ChartBank:
    """Chart every monitored statistic of a fixed-label sequence.

    kinds selects chart types; requesting both builds a chart named
    "<stat>/<kind>" for each combination.
    """
    graphs = list(seq)
    if not 2 <= m < len(graphs):
        raise ValueError("need 2 <= m < len(seq)")
    series, names = stat_series(graphs, c, pooled, per_community_s)
    bank: Dict[str, _charts.ControlChart] = {}
    multi = len(kinds) > 1
    for j, name in enumerate(names):
        for kind in kinds:
            label = f"{name}/{kind}" if multi else name
            if kind == "shewhart":
                bank[label] = _charts.shewhart(series[:, j], m, name=label)
            elif kind == "ewma":
                bank[label] = _charts.ewma(series[:, j], m, lam, limit_style, name=label)
            else:
                raise ValueError(f"unknown chart kind {kind!r}")
    return ChartBank(bank, m, labels=c)


def monitor_with_detection(seq, k: int, m: int, key: int = 0,
                           tau: Optional[float] = None,
                           **monitor_kwargs) -> ChartBank:
    """Estimate labels from the Phase I average, then monitor."""
    graphs = list(seq)
    if not 2 <= m < len(graphs):
        raise ValueError("need 2 <= m < len(seq)")
    dyn = seq if isinstance(seq, DynamicNetwork) else DynamicNetwork(tuple(graphs))
    avg = average_graph(dyn, 1, m)
    c = _community.regularized_spectral_clustering(avg, k, tau=tau, key=key)
    return monitor(graphs, c, m, **monitor_kwargs)
