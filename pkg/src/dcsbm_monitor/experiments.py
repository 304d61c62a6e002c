"""Monte Carlo average-run-length studies over the scenario family.

Seven scenarios share a two-community base model (equal halves,
within-rate 0.2, between-rate 0.1, spread 0.5) and differ in the
change applied partway through Phase II:

  0  no change
  1  within-rate of community 1 raised by eps
  2  every block rate raised by eps
  3  spread of community 1 raised by tau
  4  every spread raised by tau
  5  the two communities merge (block rates average to 0.15)
  6  community 1 splits into contiguous halves, rates 0.2 / 0.1

Monitoring always uses the original two-community labels and the four
Shewhart charts over (P11, P12, P22, pooled s); scenarios 5 and 6
change the generator only.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng
from .backend import kernels
from .graphs import CommunityAssignment
from .model import merge_communities, split_community

BASE_P = np.array([[0.2, 0.1], [0.1, 0.2]])
BASE_DELTA = np.array([0.5, 0.5])
STAT_NAMES = ("P11", "P12", "P22", "s")   # kernel order
TABLE_ORDER = ("s", "P11", "P12", "P22")  # presentation order


@dataclass(frozen=True)
class ScenarioSpec:
    """One row of the study: scenario id, its parameter, and sizes."""

    id: int
    n: int = 100
    m: int = 1000
    epsilon: Optional[float] = None
    tau: Optional[float] = None
    t_star: int = 25
    reps: int = 500
    cap: int = 5000
    redraw_theta: bool = True

    def __post_init__(self):
        if self.id not in range(7):
            raise ValueError("scenario id must be 0..6")
        if self.id in (1, 2) and self.epsilon is None:
            raise ValueError(f"scenario {self.id} needs epsilon")
        if self.id in (3, 4) and self.tau is None:
            raise ValueError(f"scenario {self.id} needs tau")
        if self.n < 4:
            raise ValueError("n too small for two communities")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.t_star < 1:
            raise ValueError("t_star must be >= 1 (1 = first Phase II network)")
        if self.cap < 1 or self.reps < 1:
            raise ValueError("cap and reps must be positive")

    @property
    def param_label(self) -> str:
        if self.id in (1, 2):
            return f"eps={self.epsilon:g}"
        if self.id in (3, 4):
            return f"tau={self.tau:g}"
        if self.id in (5, 6):
            return f"n={self.n}"
        return "none"


def base_assignment(n: int) -> CommunityAssignment:
    half = (n + 1) // 2
    return CommunityAssignment(np.repeat([1, 2], [half, n - half]), k=2)


def scenario_models(spec: ScenarioSpec):
    """(pre, post) model pieces for the kernel: labels0, sizes, delta, P."""
    c = base_assignment(spec.n)
    pre = (c.zero_based(), c.sizes().astype(np.int64), BASE_DELTA.copy(), BASE_P.copy())
    sid = spec.id
    if sid == 0:
        post = pre
    elif sid == 1:
        P2 = BASE_P.copy()
        P2[0, 0] += spec.epsilon
        post = (pre[0], pre[1], pre[2], P2)
    elif sid == 2:
        post = (pre[0], pre[1], pre[2], BASE_P + spec.epsilon)
    elif sid == 3:
        d2 = BASE_DELTA.copy()
        d2[0] += spec.tau
        post = (pre[0], pre[1], d2, pre[3])
    elif sid == 4:
        post = (pre[0], pre[1], BASE_DELTA + spec.tau, pre[3])
    elif sid == 5:
        c2, P2, d2 = merge_communities(c, BASE_P, BASE_DELTA, 1, 2)
        post = (c2.zero_based(), c2.sizes().astype(np.int64), d2, P2)
    else:
        c2 = split_community(c, 1)
        k2 = c2.k
        P2 = np.full((k2, k2), 0.1)
        np.fill_diagonal(P2, 0.2)
        post = (c2.zero_based(), c2.sizes().astype(np.int64), np.full(k2, 0.5), P2)
    return pre, post, c


@dataclass(frozen=True)
class ArlStat:
    """Aggregate for one chart: censored values enter the mean at the cap."""

    mean: float
    se: float
    censored: int
    false_alarms: int
    valid_reps: int
    reps: int


@dataclass(frozen=True)
class ArlSummary:
    spec: ScenarioSpec
    stats: Dict[str, ArlStat]
    seed: int

    def __post_init__(self):
        for st in self.stats.values():
            if st.valid_reps and not (st.mean >= 1.0):
                raise ValueError("mean run length below 1")
            if st.censored > st.reps:
                raise ValueError("more censored entries than replicates")


def _rep_args(spec: ScenarioSpec, master: int, r: int):
    pre, post, c = scenario_models(spec)
    t_star = 1 if spec.id == 0 else spec.t_star
    return (rng.derive(master, r), spec.m, t_star, spec.cap,
            pre[0], pre[1], pre[2], pre[3],
            post[0], post[1], post[2], post[3],
            c.zero_based(), c.sizes().astype(np.int64), spec.redraw_theta)


def _one_rep(args):
    r, rep = args
    rl, censored, fa, _, _ = kernels.run_replicate(*rep)
    return r, rl, censored, fa


def run_scenario(spec: ScenarioSpec, seed: int = 0,
                 workers: int = 1) -> ArlSummary:
    """Replicated run-length study; deterministic for a fixed seed.

    Each replicate r uses the stream derive(key_from_seed(seed), r), so
    results do not depend on worker count or completion order.
    """
    master = rng.key_from_seed(seed)
    nstats = len(STAT_NAMES)
    rl = np.zeros((spec.reps, nstats), np.int64)
    cens = np.zeros((spec.reps, nstats), bool)
    fa = np.zeros((spec.reps, nstats), np.int64)
    tasks = ((r, _rep_args(spec, master, r)) for r in range(1, spec.reps + 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_one_rep, tasks,
                               chunksize=max(1, spec.reps // (workers * 8)))
            for r, rl_r, c_r, f_r in results:
                rl[r - 1], cens[r - 1], fa[r - 1] = rl_r, c_r, f_r
    else:
        for task in tasks:
            r, rl_r, c_r, f_r = _one_rep(task)
            rl[r - 1], cens[r - 1], fa[r - 1] = rl_r, c_r, f_r

    stats: Dict[str, ArlStat] = {}
    for i, name in enumerate(STAT_NAMES):
        valid = fa[:, i] == 0
        nv = int(valid.sum())
        vals = rl[valid, i].astype(np.float64)
        if nv > 0:
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(nv)) if nv > 1 else math.nan
        else:
            mean, se = math.nan, math.nan
        stats[name] = ArlStat(mean, se, int(cens[valid, i].sum()),
                              int((~valid).sum()), nv, spec.reps)
    return ArlSummary(spec, stats, seed)


def table_report(summaries: Sequence[ArlSummary]) -> Tuple[str, str]:
    """(aligned text, csv) over scenario rows and the four chart columns."""
    head = ["sim", "param", "n", "m", "reps"]
    for name in TABLE_ORDER:
        head += [name, f"se({name})", f"cens({name})", f"fa({name})"]
    rows: List[List[str]] = []
    for s in summaries:
        row = [str(s.spec.id), s.spec.param_label, str(s.spec.n),
               str(s.spec.m), str(s.spec.reps)]
        for name in TABLE_ORDER:
            st = s.stats[name]
            row += [f"{st.mean:.2f}" if not math.isnan(st.mean) else "nan",
                    f"{st.se:.3f}" if not math.isnan(st.se) else "nan",
                    str(st.censored), str(st.false_alarms)]
        rows.append(row)
    csv_buf = io.StringIO()
    csv_buf.write(",".join(head) + "\n")
    for row in rows:
        csv_buf.write(",".join(row) + "\n")
    widths = [max(len(head[j]), *(len(r[j]) for r in rows)) if rows else len(head[j])
              for j in range(len(head))]
    text_lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    for row in rows:
        text_lines.append("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return "\n".join(text_lines) + "\n", csv_buf.getvalue()
