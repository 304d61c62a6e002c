"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from typing import List, Optional

import numpy as np

from . import __version__, charts, community, experiments, model, rng, senate, surveillance
from .graphs import CommunityAssignment, DynamicNetwork, read_edge_list, write_edge_list

DEFAULT_LAMBDA = 0.2
DEFAULT_THRESHOLD = 0.75
DEFAULT_CAP = 5000


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageExit()


def _read_labels(path: str, n: int) -> CommunityAssignment:
    pairs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node label'")
            node, lab = int(parts[0]), int(parts[1])
            if node in pairs:
                raise ValueError(f"{path}:{lineno}: duplicate node {node}")
            pairs[node] = lab
    if sorted(pairs) != list(range(1, n + 1)):
        raise ValueError(f"{path}: need labels for nodes 1..{n} exactly")
    return CommunityAssignment(np.array([pairs[u] for u in range(1, n + 1)], np.int64))


def _write_labels(path: str, c: CommunityAssignment) -> None:
    with open(path, "w") as fh:
        for u, lab in enumerate(c.labels, start=1):
            fh.write(f"{u} {int(lab)}\n")


def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _safe_name(stat: str) -> str:
    return stat.replace("/", "_")


def _cmd_simulate(args) -> int:
    params, change = model.parse_param_file(args.params)
    key = rng.key_from_seed(args.seed)
    if params.pi is not None:
        c = model.draw_labels(params.pi, params.n, rng.derive(key, 0))
        params = model.DcsbmParams(c, None, params.P, params.delta, params.pi)
        if change is not None and change.c_star.k == params.k:
            change = model.ChangeSpec(change.t_star, c, change.P_star, change.delta_star)
    seq = model.simulate_dynamic(params, change, args.T, key,
                                 redraw_theta=not args.fixed_theta)
    write_edge_list(args.out, seq)
    if args.labels_out:
        _write_labels(args.labels_out, params.c)
    return 0


def _cmd_detect(args) -> int:
    seq = read_edge_list(args.graph)
    first, last = args.window
    from .graphs import average_graph
    avg = average_graph(seq, first, last)
    c = community.regularized_spectral_clustering(
        avg, args.k, tau=args.tau, key=rng.key_from_seed(args.seed))
    _write_labels(args.out, c)
    return 0


def _cmd_fit(args) -> int:
    seq = read_edge_list(args.graph)
    if not 1 <= args.t <= len(seq):
        raise ValueError(f"--t must lie in 1..{len(seq)}")
    g = seq[args.t - 1]
    c = _read_labels(args.labels, g.n)
    fit = model.mle(g, c)
    out = sys.stdout if args.out is None else open(args.out, "w")
    try:
        out.write("section,index,value\n")
        th = fit.theta
        out.write(f"theta,min,{th.min():.10g}\n")
        out.write(f"theta,mean,{th.mean():.10g}\n")
        out.write(f"theta,max,{th.max():.10g}\n")
        for r in range(c.k):
            out.write(f"pi,{r + 1},{fit.pi[r]:.10g}\n")
        for r in range(c.k):
            for s in range(c.k):
                out.write(f"P,{r + 1}{s + 1},{fit.P[r, s]:.10g}\n")
        if fit.degenerate:
            out.write(f"degenerate,communities,{';'.join(map(str, fit.degenerate))}\n")
    finally:
        if args.out is not None:
            out.close()
    return 0


def _export_bank(bank, out: str) -> None:
    for name, chart in sorted(bank.charts.items()):
        base = os.path.join(out, _safe_name(name))
        charts.chart_to_csv(chart, base + ".csv")
        charts.chart_to_svg(chart, base + ".svg", title=name)
    with open(os.path.join(out, "signals.csv"), "w") as fh:
        fh.write("t,chart\n")
        for t, names in bank.signal_table():
            for nm in names:
                fh.write(f"{t},{nm}\n")


def _cmd_monitor(args) -> int:
    seq = read_edge_list(args.graph)
    kinds = tuple(k.strip() for k in args.charts.split(",") if k.strip())
    if not kinds:
        raise ValueError("--charts must name at least one chart kind")
    out = _out_dir(args.out)
    common = dict(kinds=kinds, lam=args.lam, limit_style=args.limit_style)
    if args.detect is not None:
        bank = surveillance.monitor_with_detection(
            seq, args.detect, args.phase1, key=rng.key_from_seed(args.seed), **common)
        _write_labels(os.path.join(out, "labels.txt"), bank.labels)
    else:
        if args.labels is None:
            raise ValueError("provide --labels FILE or --detect K")
        c = _read_labels(args.labels, seq.n)
        bank = surveillance.monitor(seq, c, args.phase1, **common)
    _export_bank(bank, out)
    return 0


def _cmd_arl(args) -> int:
    kw = {}
    if args.eps is not None:
        kw["epsilon"] = args.eps
    if args.tau is not None:
        kw["tau"] = args.tau
    spec = experiments.ScenarioSpec(args.sim, n=args.n, m=args.m,
                                    t_star=args.t_star, reps=args.reps,
                                    cap=args.cap, **kw)
    summary = experiments.run_scenario(spec, seed=args.seed, workers=args.workers)
    text, csv_text = experiments.table_report([summary])
    out = _out_dir(args.out)
    with open(os.path.join(out, "aarl.csv"), "w") as fh:
        fh.write(csv_text)
    with open(os.path.join(out, "aarl.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _read_caucus(path: str) -> dict:
    mapping = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'id,party'")
            mapping[parts[0]] = parts[1]
    return mapping


def _cmd_senate(args) -> int:
    files = sorted(glob.glob(os.path.join(args.input, "*.csv")))
    if not files:
        raise ValueError(f"no .csv roll-call files under {args.input!r}")
    caucus = _read_caucus(args.caucus) if args.caucus else None
    seq = senate.senate_sequence(files, threshold=args.threshold, caucus=caucus)
    out = _out_dir(args.out)
    with open(os.path.join(out, "summary.csv"), "w") as fh:
        fh.write(seq.summary_csv())
    if len(seq) <= args.m:
        raise ValueError(f"need more than --m={args.m} Congresses, got {len(seq)}")
    series, names = surveillance.stat_series(seq.graphs, seq.assignments)
    bank_charts = {}
    for j, name in enumerate(names):
        bank_charts[f"{name}/shewhart"] = charts.shewhart(series[:, j], args.m,
                                                          name=f"{name}/shewhart")
        bank_charts[f"{name}/ewma"] = charts.ewma(series[:, j], args.m, args.lam,
                                                  "steady-state", name=f"{name}/ewma")
    bank = surveillance.ChartBank(bank_charts, args.m)
    _export_bank(bank, out)
    with open(os.path.join(out, "statistics.csv"), "w") as fh:
        fh.write("t,congress," + ",".join(names) + "\n")
        for i in range(series.shape[0]):
            vals = ",".join(f"{v:.10g}" for v in series[i])
            fh.write(f"{i + 1},{seq.congresses[i]},{vals}\n")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="dcsbm-monitor",
                description="Monitoring of dynamic weighted networks "
                            "with a degree-corrected block model.")
    p.add_argument("--version", action="store_true",
                   help="print version and default parameters, then exit")
    sub = p.add_subparsers(dest="command")

    ps = sub.add_parser("simulate", help="simulate a dynamic network from a parameter file")
    ps.add_argument("--params", required=True, help="parameter file (key = value lines)")
    ps.add_argument("--T", type=int, required=True, help="number of time steps")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--fixed-theta", action="store_true",
                    help="draw propensities once per regime instead of every step")
    ps.add_argument("--out", required=True, help="output edge-list file")
    ps.add_argument("--labels-out", help="also write the generator labels")
    ps.set_defaults(func=_cmd_simulate)

    pd = sub.add_parser("detect", help="estimate communities from an averaged window")
    pd.add_argument("--graph", required=True, help="edge-list file")
    pd.add_argument("--window", type=int, nargs=2, metavar=("FIRST", "LAST"),
                    required=True, help="1-based inclusive averaging window")
    pd.add_argument("--k", type=int, required=True)
    pd.add_argument("--tau", type=float, default=None,
                    help="regularizer (default: mean degree)")
    pd.add_argument("--seed", type=int, default=0)
    pd.add_argument("--out", required=True, help="output labels file")
    pd.set_defaults(func=_cmd_detect)

    pf = sub.add_parser("fit", help="closed-form parameter estimates for one graph")
    pf.add_argument("--graph", required=True)
    pf.add_argument("--labels", required=True)
    pf.add_argument("--t", type=int, default=1, help="time index within the file")
    pf.add_argument("--out", help="CSV output path (default: stdout)")
    pf.set_defaults(func=_cmd_fit)

    pm = sub.add_parser("monitor", help="chart the monitored statistics of a sequence")
    pm.add_argument("--graph", required=True)
    pm.add_argument("--labels", help="fixed labels file")
    pm.add_argument("--detect", type=int, metavar="K",
                    help="estimate labels from the Phase I average instead")
    pm.add_argument("--phase1", type=int, required=True, metavar="M")
    pm.add_argument("--charts", default="shewhart", help="comma list: shewhart,ewma")
    pm.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    pm.add_argument("--limit-style", choices=("steady-state", "time-varying"),
                    default="steady-state")
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--out", required=True, help="output directory")
    pm.set_defaults(func=_cmd_monitor)

    pa = sub.add_parser("arl", help="Monte Carlo average run length study")
    pa.add_argument("--sim", type=int, required=True, choices=range(7))
    pa.add_argument("--eps", type=float)
    pa.add_argument("--tau", type=float)
    pa.add_argument("--n", type=int, default=100)
    pa.add_argument("--m", type=int, default=1000)
    pa.add_argument("--t-star", type=int, default=25)
    pa.add_argument("--reps", type=int, default=500)
    pa.add_argument("--cap", type=int, default=DEFAULT_CAP)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--workers", type=int, default=1)
    pa.add_argument("--out", required=True, help="output directory")
    pa.set_defaults(func=_cmd_arl)

    pn = sub.add_parser("senate", help="roll-call pipeline: build, label, monitor")
    pn.add_argument("--input", required=True, help="directory of per-Congress CSV files")
    pn.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    pn.add_argument("--m", type=int, default=25, help="Phase I size")
    pn.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    pn.add_argument("--caucus", help="CSV mapping id,party for independents")
    pn.add_argument("--out", required=True, help="output directory")
    pn.set_defaults(func=_cmd_senate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit:
        return 1
    if args.version:
        print(f"dcsbm-monitor {__version__} "
              f"(lambda={DEFAULT_LAMBDA}, threshold={DEFAULT_THRESHOLD}, "
              f"cap={DEFAULT_CAP})")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
