"""Senate co-voting networks from roll-call CSV records.

Input format, one row per senator-bill vote:

    congress,senator_id,name,party,bill,vote

`vote` codes (case-insensitive): yay/yea/y/aye/paired-yay/announced-yay
count as Yay; nay/no/n/paired-nay/announced-nay as Nay; everything in
the absence family (abstain/absent/present/nv/na or empty) as Abstain.
`party` strings starting with D or R map to the two major parties;
anything else is Other. A senator appearing on several rows must keep
one (name, party) pairing throughout a file.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import os

import numpy as np

from .graphs import CommunityAssignment, WeightedGraph

YAY, NAY, ABSTAIN = 1, -1, 0

_VOTE_CODES = {
    "yay": YAY, "yea": YAY, "y": YAY, "aye": YAY, "yes": YAY,
    "paired-yay": YAY, "paired-yea": YAY, "announced-yay": YAY, "announced-yea": YAY,
    "nay": NAY, "no": NAY, "n": NAY,
    "paired-nay": NAY, "announced-nay": NAY,
    "abstain": ABSTAIN, "absent": ABSTAIN, "present": ABSTAIN,
    "nv": ABSTAIN, "na": ABSTAIN, "none": ABSTAIN, "": ABSTAIN,
}


def _party_name(raw: str) -> str:
    s = raw.strip().lower()
    if s.startswith("d"):
        return "Democrat"
    if s.startswith("r"):
        return "Republican"
    return "Other"


@dataclass(frozen=True)
class RollCall:
    """One Congress's votes: senators x bills matrix of {-1, 0, 1}."""

    congress: str
    senator_ids: Tuple[str, ...]
    names: Tuple[str, ...]
    parties: Tuple[str, ...]
    bills: Tuple[str, ...]
    votes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.votes)
        if v.shape != (len(self.senator_ids), len(self.bills)):
            raise ValueError("vote matrix shape must be senators x bills")
        if not np.isin(v, (YAY, NAY, ABSTAIN)).all():
            raise ValueError("votes must be Yay, Nay, or Abstain")

    @property
    def n_senators(self) -> int:
        return len(self.senator_ids)

    @property
    def n_bills(self) -> int:
        return len(self.bills)


def parse_rollcall(path) -> RollCall:
    """Read one Congress from CSV; errors carry the offending line."""
    own = isinstance(path, (str, os.PathLike))
    fh = open(path, newline="") if own else path
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("empty roll-call file")
        cols = [h.strip().lower() for h in header]
        want = ["congress", "senator_id", "name", "party", "bill", "vote"]
        if cols != want:
            raise ValueError(f"header must be {','.join(want)}")
        congress: Optional[str] = None
        ident: Dict[str, Tuple[str, str]] = {}
        order: List[str] = []
        bills: List[str] = []
        bill_pos: Dict[str, int] = {}
        cells: Dict[Tuple[str, str], int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise ValueError(f"line {lineno}: expected 6 fields, got {len(row)}")
            cg, sid, name, party, bill, vote = (f.strip() for f in row)
            if congress is None:
                congress = cg
            elif cg != congress:
                raise ValueError(f"line {lineno}: mixed congress ids {cg!r} vs {congress!r}")
            party = _party_name(party)
            if sid in ident:
                if ident[sid] != (name, party):
                    raise ValueError(f"line {lineno}: senator {sid} reappears as "
                                     f"({name!r}, {party!r}), was {ident[sid]}")
            else:
                ident[sid] = (name, party)
                order.append(sid)
            if bill not in bill_pos:
                bill_pos[bill] = len(bills)
                bills.append(bill)
            code = _VOTE_CODES.get(vote.lower())
            if code is None:
                raise ValueError(f"line {lineno}: unknown vote code {vote!r}")
            if (sid, bill) in cells:
                raise ValueError(f"line {lineno}: duplicate vote of {sid} on {bill}")
            cells[(sid, bill)] = code
        if congress is None:
            raise ValueError("roll-call file has no vote rows")
        votes = np.zeros((len(order), len(bills)), np.int8)
        for (sid, bill), code in cells.items():
            votes[order.index(sid), bill_pos[bill]] = code
        return RollCall(congress, tuple(order),
                        tuple(ident[s][0] for s in order),
                        tuple(ident[s][1] for s in order),
                        tuple(bills), votes)
    finally:
        if own:
            fh.close()


def covoting_graph(rc: RollCall, threshold: float = 0.75,
                   caucus: Optional[Dict[str, str]] = None,
                   ) -> Tuple[WeightedGraph, CommunityAssignment, Tuple[str, ...]]:
    """Binary concurrence graph plus party labels (1=Democrat, 2=Republican).

    A pair is joined when, among bills either of them voted on, the
    fraction of matching Yay/Nay votes reaches the threshold. Senators
    outside the two parties follow the caucus map (id or name ->
    party); the rest are dropped with a warning. Returns the kept
    senator ids alongside the graph and labels.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    caucus = caucus or {}
    party = []
    keep = []
    for i, sid in enumerate(rc.senator_ids):
        p = rc.parties[i]
        if p == "Other":
            mapped = caucus.get(sid) or caucus.get(rc.names[i])
            p = _party_name(mapped) if mapped else "Other"
        if p == "Other":
            continue
        keep.append(i)
        party.append(p)
    dropped = rc.n_senators - len(keep)
    if dropped:
        warnings.warn(f"dropped {dropped} senator(s) outside the two parties "
                      "(no caucus mapping)", stacklevel=2)
    if not keep:
        raise ValueError("no senators left after party filtering")
    V = rc.votes[keep]
    cast = V != ABSTAIN
    yay = V == YAY
    nay = V == NAY
    # |A|: bills where both cast the same side; |U|: either cast
    agree = (yay.astype(np.int64) @ yay.T) + (nay.astype(np.int64) @ nay.T)
    either = cast[:, None, :] | cast[None, :, :]
    union = either.sum(axis=2, dtype=np.int64)
    with np.errstate(invalid="ignore"):
        ratio = np.where(union > 0, agree / np.maximum(union, 1), 0.0)
    W = (ratio >= threshold) & (union > 0)
    np.fill_diagonal(W, False)
    labels = np.array([1 if p == "Democrat" else 2 for p in party], np.int64)
    return (WeightedGraph(W.astype(np.int64)),
            CommunityAssignment(labels, k=2),
            tuple(rc.senator_ids[i] for i in keep))


@dataclass(frozen=True)
class SenateSequence:
    """Per-Congress graphs; node sets are not registered across time."""

    congresses: Tuple[str, ...]
    graphs: Tuple[WeightedGraph, ...]
    assignments: Tuple[CommunityAssignment, ...]
    senator_ids: Tuple[Tuple[str, ...], ...]
    summary: Tuple[Tuple[str, int, int, int], ...]  # (congress, senators, bills, edges)

    def __len__(self) -> int:
        return len(self.graphs)

    def summary_csv(self) -> str:
        lines = ["congress,senators,bills,edges"]
        lines += [f"{c},{n},{b},{e}" for c, n, b, e in self.summary]
        return "\n".join(lines) + "\n"


def senate_sequence(files: Sequence, threshold: float = 0.75,
                    caucus: Optional[Dict[str, str]] = None) -> SenateSequence:
    """Build the ordered co-voting sequence from per-Congress files."""
    if not files:
        raise ValueError("need at least one roll-call file")
    congresses, graphs, assigns, ids, rows = [], [], [], [], []
    for f in files:
        rc = parse_rollcall(f)
        if rc.n_bills == 0 or not (rc.votes != ABSTAIN).any():
            warnings.warn(f"congress {rc.congress}: no recorded votes, zero-edge graph",
                          stacklevel=2)
        g, c, kept = covoting_graph(rc, threshold, caucus)
        congresses.append(rc.congress)
        graphs.append(g)
        assigns.append(c)
        ids.append(kept)
        rows.append((rc.congress, g.n, rc.n_bills, int(g.weights.sum()) // 2))
    return SenateSequence(tuple(congresses), tuple(graphs), tuple(assigns),
                          tuple(ids), tuple(rows))


def write_synthetic_rollcalls(out_dir: str, T: int = 40, seed: int = 0,
                              cohesion: Tuple[int, int] = (26, 32),
                              polarization: Tuple[int, int] = (33, 40),
                              n_dem: int = 16, n_rep: int = 14,
                              bills: int = 120) -> List[str]:
    """Generate per-Congress roll-call CSV fixtures with planted phases.

    Votes follow a party-line model: each bill gets a Democrat position
    (fair coin); the Republican position opposes it with probability r;
    each senator flips their party's position with probability d and
    abstains with a small probability. The baseline (r=0.14, d=0.13)
    gives within-party concurrence near the 0.75 threshold and sparse
    cross-party edges. Congresses in the cohesion window set r=0 (the
    parties align, cross-party edges bloom); in the polarization window
    r=0.5, d=0.04 (near-perfect party discipline). Rosters are
    resampled every Congress, so node identities are not registered
    across time. Returns the written file paths in order.
    """
    import os

    gen = np.random.default_rng(seed)
    paths = []
    for t in range(1, T + 1):
        if cohesion[0] <= t <= cohesion[1]:
            r_opp, d_dev = 0.0, 0.13
        elif polarization[0] <= t <= polarization[1]:
            r_opp, d_dev = 0.5, 0.04
        else:
            r_opp, d_dev = 0.14, 0.13
        dem_pos = gen.random(bills) < 0.5
        rep_pos = np.where(gen.random(bills) < r_opp, ~dem_pos, dem_pos)
        path = os.path.join(out_dir, f"congress_{t:03d}.csv")
        with open(path, "w") as fh:
            fh.write("congress,senator_id,name,party,bill,vote\n")
            for party, pos, count, tag in (("Democrat", dem_pos, n_dem, "D"),
                                           ("Republican", rep_pos, n_rep, "R")):
                for i in range(count):
                    sid = f"{tag}{t:03d}_{i:02d}"
                    flip = gen.random(bills) < d_dev
                    absent = gen.random(bills) < 0.03
                    for b in range(bills):
                        if absent[b]:
                            vote = "Abstain"
                        else:
                            vote = "Yay" if pos[b] != flip[b] else "Nay"
                        fh.write(f"{t},{sid},{sid},{party},bill{b + 1},{vote}\n")
        paths.append(path)
    return paths
