"""Command-line entry point: ``qgnn <command> [flags]``.

Exit codes: 0 success, 1 usage/configuration, 2 data/IO, 3 numeric.
"""

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .autodiff import finite_diff_oracle
from .errors import (CheckpointError, ConfigurationError, DomainError, NumericError,
                     ParseError)
from .graph import (SelectionCuts, BuildStats, build_event_graphs, load_subgraph,
                    load_subgraphs, random_subgraph, save_subgraph, subgraph_filename)
from .hitdata import generate_events, load_events, write_events
from .model import init_params, qgnn_gradient, qgnn_loss
from .trainer import evaluate, read_metrics_csv, train

log = logging.getLogger("qgnn")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_out(rows, stream=None):
    w = csv.writer(stream or sys.stdout, lineterminator="\n")
    for row in rows:
        w.writerow(row)


def _merged(args, schema):
    """Config file values overridden by explicitly given flags."""
    values = cfgmod.load_config(args.config, schema) if getattr(args, "config", None) else {}
    for key in schema:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def cmd_gen(args):
    values = _merged(args, cfgmod.GENERATOR_KEYS)
    noise = values.get("noise", 0.0)
    if not 0.0 <= noise < 1.0:
        raise ConfigurationError("--noise must lie in [0, 1)")
    events = generate_events(values.get("n_events", 1), values.get("n_tracks", 10),
                             (values.get("pt_lo", 1.0), values.get("pt_hi", 5.0)),
                             noise, seed=args.seed)
    paths = write_events(events, args.out)
    print(f"wrote {len(events)} events ({len(paths)} files) to {args.out}")
    return 0


def cmd_build(args):
    if args.cuts:
        cuts = cfgmod.cuts_from(cfgmod.load_config(args.cuts, cfgmod.CUT_KEYS))
        print(f"cuts from {args.cuts}: {cuts}")
    else:
        cuts = SelectionCuts()
        print(f"no cuts file given; using defaults {cuts}")
    events = load_events(args.inp)
    if not events:
        raise DomainError(f"no event files found in {args.inp}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = BuildStats()
    n_graphs = 0
    for event in events:
        graphs, stats = build_event_graphs(event, cuts)
        total += stats
        for g in graphs:
            save_subgraph(g, out / subgraph_filename(g))
        n_graphs += len(graphs)
    _csv_out([("events", "subgraphs", "edges", "true_edges", "truth_segments",
               "cross_sector_segments", "efficiency", "purity"),
              (len(events), n_graphs, total.n_edges, total.n_true_edges,
               total.n_truth_segments, total.n_cross_sector_segments,
               f"{total.efficiency:.6f}", f"{total.purity:.6f}")])
    return 0


def _train_config(args):
    values = _merged(args, cfgmod.TRAIN_KEYS)
    values.setdefault("threads", args.threads or os.cpu_count() or 1)
    return cfgmod.train_config_from(values)


def cmd_train(args):
    config = _train_config(args)
    result = train(args.data, config, args.out)
    final = result.val_records[-1]
    _csv_out([("steps", "final_val_loss", "final_val_auc", "checkpoint", "metrics"),
              (result.records[-1].step, repr(final.val_loss), repr(final.val_auc),
               result.checkpoint_path, result.metrics_path)])
    return 0


def cmd_eval(args):
    config = _train_config(args)
    summary = evaluate(args.checkpoint, args.data, config, split=args.split)
    rows = [("split", "subgraphs", "edges", "mean_loss", "auc", "excluded_single_class"),
            (args.split, summary.n_subgraphs, summary.n_edges, repr(summary.mean_loss),
             repr(summary.auc), summary.n_excluded)]
    _csv_out(rows)
    if args.out:
        from .plotting import plot_score_histogram

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "eval_summary.csv", "w", newline="", encoding="utf-8") as fh:
            _csv_out(rows, fh)
        with open(out / "score_histogram.csv", "w", newline="", encoding="utf-8") as fh:
            _csv_out([("bin_low", "bin_high", "count")]
                     + [(repr(float(lo)), repr(float(hi)), int(c)) for lo, hi, c in
                        zip(summary.hist_edges[:-1], summary.hist_edges[1:],
                            summary.hist_counts)], fh)
        plot_score_histogram(summary.hist_counts, summary.hist_edges,
                             out / "score_histogram.svg", summary.probs, summary.labels)
    return 0


def cmd_gradcheck(args):
    g = random_subgraph(args.nodes, args.edges, seed=args.seed)
    params = init_params(args.nit, seed=args.seed)
    _, grad, _ = qgnn_gradient(g, params)
    fd = finite_diff_oracle(lambda v: qgnn_loss(g, params.with_vector(v)),
                            params.to_vector(), args.h)
    dev = float(np.max(np.abs(grad.to_vector() - fd)))
    print(f"max |shift - finite difference| = {dev:.3e} over {fd.size} parameters "
          f"(tolerance {args.tol:.1e})")
    return 0 if dev < args.tol else EXIT_NUMERIC


def cmd_plot(args):
    from .plotting import plot_curves, plot_hit_histograms, plot_subgraph

    out = Path(args.out)
    written = []
    if args.metrics:
        runs = {Path(p).stem if len(args.metrics) == 1 else str(p): read_metrics_csv(p)
                for p in args.metrics}
        written += plot_curves(runs, out)
    if args.subgraphs:
        written.append(plot_hit_histograms(load_subgraphs(args.subgraphs), out / "hits.svg"))
    if args.graph:
        g = load_subgraph(args.graph)
        written.append(plot_subgraph(g, out / f"{g.name}.svg"))
    if not written:
        raise UsageError("plot: give at least one of --metrics, --subgraphs, --graph")
    for path in written:
        print(path)
    return 0


def cmd_inspect(args):
    graphs = load_subgraphs(args.data)
    if not graphs:
        raise DomainError(f"no subgraph files in {args.data}")
    nodes = np.array([g.n_nodes for g in graphs])
    edges = np.array([g.n_edges for g in graphs])
    true = np.array([int(g.labels.sum()) if g.labels is not None else 0 for g in graphs])
    _csv_out([("subgraphs", "nodes_mean", "nodes_max", "edges_mean", "edges_max",
               "empty", "true_fraction"),
              (len(graphs), f"{nodes.mean():.2f}", nodes.max(), f"{edges.mean():.2f}",
               edges.max(), int((edges == 0).sum()),
               f"{true.sum() / max(edges.sum(), 1):.4f}")])
    return 0


def _add_train_flags(p):
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--nit", dest="n_iterations", type=int, help="edge/node iterations N_it")
    p.add_argument("--lr", dest="learning_rate", type=float, help="ADAM learning rate")
    p.add_argument("--epochs", type=int, help="passes over the training split")
    p.add_argument("--n-train", dest="n_train", type=int, help="training subgraphs")
    p.add_argument("--n-val", dest="n_val", type=int, help="validation subgraphs")
    p.add_argument("--val-every", dest="val_every", type=int, help="validation cadence (steps)")
    p.add_argument("--seed", type=int, help="seed for init, split and shuffling")
    p.add_argument("--backend", choices=("tree", "statevector"), help="circuit simulator")
    p.add_argument("--shots", type=int, help="sample scores with this many shots (0 = exact)")
    p.add_argument("--threads", type=int, help="cap on worker threads")


def build_parser():
    parser = Parser(prog="qgnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("gen", help="generate synthetic events")
    p.add_argument("--config", help="key = value file with generator keys")
    p.add_argument("--events", dest="n_events", type=int, help="number of events (default 1)")
    p.add_argument("--tracks", dest="n_tracks", type=int, help="tracks per event (default 10)")
    p.add_argument("--noise", type=float, help="noise hits as a fraction of track hits, < 1")
    p.add_argument("--pt-lo", dest="pt_lo", type=float, help="minimum pt in GeV (default 1)")
    p.add_argument("--pt-hi", dest="pt_hi", type=float, help="maximum pt in GeV (default 5)")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="apply cuts, sectorize and build subgraphs")
    p.add_argument("--in", dest="inp", required=True, help="directory of event CSV files")
    p.add_argument("--out", required=True, help="directory for .sg subgraph files")
    p.add_argument("--cuts", help="key = value file with selection cuts")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="train the QGNN")
    p.add_argument("--data", required=True, help="directory of .sg subgraph files")
    p.add_argument("--out", required=True, help="run directory for metrics.csv, model.ckpt")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True, help="model.ckpt from train")
    p.add_argument("--data", required=True, help="directory of .sg subgraph files")
    p.add_argument("--split", choices=("val", "train", "all"), default="val",
                   help="which part of the dataset to score (default val)")
    p.add_argument("--out", help="write eval_summary.csv and score histogram here")
    _add_train_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="parameter-shift vs finite-difference check")
    p.add_argument("--seed", type=int, default=0, help="seed for graph and parameters")
    p.add_argument("--nit", type=int, default=1, help="edge/node iterations")
    p.add_argument("--nodes", type=int, default=10, help="toy graph nodes")
    p.add_argument("--edges", type=int, default=12, help="toy graph edges")
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference step")
    p.add_argument("--tol", type=float, default=1e-4, help="maximum allowed deviation")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("plot", help="render SVG figures")
    p.add_argument("--metrics", nargs="+", help="metrics.csv file(s); curves are overlaid")
    p.add_argument("--subgraphs", help="directory of .sg files for r/phi/z histograms")
    p.add_argument("--graph", help="one .sg file to draw")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("inspect", help="summarize a subgraph directory")
    p.add_argument("--data", required=True, help="directory of .sg files")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DomainError, CheckpointError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
