"""Command line: generate graphs, run diffusions and experiments.

Every subcommand writes its CSVs plus ``manifest.json`` (config echo, tool
version, seed, timestamp) into ``--out``. Options can also come from a JSON
or YAML file given with ``--config``; explicit flags win over the file.

Exit codes: 2 bad configuration, 3 input/output failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import bound_eval, log_slope, sbm_bound_inputs, variance_experiment
from .detect import (DetectionConfig, default_steps, detection_sweep, multi_community_sweep,
                     sample_seeds, sbm_detection_sweep, select_communities_m34)
from .diffusion import lambda_sub_estimate, landing_probabilities, seed_distribution
from .graph import (CommunitySet, GraphFormatError, VertexMap, ZeroDegreeError, bfs_subgraph,
                    largest_connected_component, load_communities, load_edge_list, write_communities,
                    write_edge_list)
from .parallel import THREADS_ENV, default_threads
from .plot import line_plot_svg
from .randgraph import RngConfig, SbmSpec, mean_field, sample_sbm, sample_sbm_nonisolated
from .weights import parse_scheme

logger = logging.getLogger("gprlab")

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- helpers

def _int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).replace(",", " ").split()]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[h] for h in header] if isinstance(r, dict) else r)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(args):
    """``(graph, vertex map, communities or None)`` from exactly one source."""
    if bool(args.graph) == bool(args.sbm):
        raise ConfigError("give exactly one graph source: --graph PATH or --sbm SPEC")
    if args.sbm:
        spec = SbmSpec.parse(args.sbm)
        g, cs = sample_sbm(spec, RngConfig(args.seed), args.graph_trial)
        return g, VertexMap.identity(g.n), cs
    g, vmap = load_edge_list(args.graph)
    cs = load_communities(args.communities, vmap) if getattr(args, "communities", None) else None
    return g, vmap, cs


def _pick_communities(args, cs: CommunitySet | None) -> CommunitySet:
    if cs is None or len(cs) == 0:
        raise ConfigError("detection needs --communities with at least one community")
    if args.all_communities:
        return cs
    if not 0 <= args.community < len(cs):
        raise ConfigError(f"--community {args.community} outside [0, {len(cs)})")
    return CommunitySet([cs[args.community]])


def _sweep(args, schemes, K_list, Q_list):
    cfg = DetectionConfig(seed_count=args.seed_count, trials=args.trials, rng=RngConfig(args.seed),
                          include_seeds=not args.exclude_seeds, hops=args.hops, threads=args.threads,
                          normalized=_normalized(args))
    if args.sbm and not args.graph and args.fresh_graphs:
        spec = SbmSpec.parse(args.sbm)
        K_list = [50 if k == "auto" else k for k in K_list]
        return sbm_detection_sweep(spec, schemes, K_list, Q_list, cfg)
    g, _, cs = _load_graph(args)
    targets = _pick_communities(args, cs)
    if "auto" in K_list:
        auto = default_steps(g, targets[0], cfg)
        logger.info("default step count K=%d", auto)
        K_list = [auto if k == "auto" else k for k in K_list]
    if len(targets) == 1:
        return detection_sweep(g, targets[0], schemes, K_list, Q_list, cfg)
    return multi_community_sweep(g, targets, schemes, K_list, Q_list, cfg)


def _normalized(args):
    return {"auto": None, "yes": True, "no": False}[args.normalized]


def _K_values(text) -> list:
    vals = []
    for t in str(text).replace(",", " ").split():
        vals.append("auto" if t == "auto" else int(t))
    return vals


def _Q_values(text) -> list:
    if text is None:
        return [None]
    return [None if t in ("auto", "size") else int(t) for t in str(text).replace(",", " ").split()]


def _write_sweep(out: Path, sw, per_trial: bool, plot: bool, name: str) -> list[str]:
    files = [f"{name}.csv"]
    _write_csv(out / files[0], ["scheme", "K", "Q", "trials", "mean_recall", "std_recall"], sw.rows())
    if per_trial:
        files.append(f"{name}_trials.csv")
        header = ["scheme", "trial", "recall"]
        if len(sw.K_list) > 1 or len(sw.Q_labels) > 1:
            header = ["scheme", "K", "Q", "trial", "recall"]
        _write_csv(out / files[-1], header, sw.trial_rows())
    if plot and len(sw.K_list) > 1:
        series = {}
        for s, label in enumerate(sw.schemes):
            series[label] = (sw.K_list, [sw.result(s, j).mean for j in range(len(sw.K_list))])
        files.append(f"{name}.svg")
        line_plot_svg(series, out / files[-1], xlabel="K", ylabel="mean recall", logy=False)
    return files


# ---------------------------------------------------------------- commands

def cmd_gen_sbm(args) -> list[str]:
    spec = SbmSpec.parse(args.sbm)
    rng = RngConfig(args.seed)
    if args.nonisolated:
        g, _ = sample_sbm_nonisolated(spec, rng, args.graph_trial)
    else:
        g, _ = sample_sbm(spec, rng, args.graph_trial)
    out = _out_dir(args)
    write_edge_list(g, out / "graph.txt")
    write_communities(CommunitySet([np.arange(spec.n1), np.arange(spec.n1, spec.n)]), out / "communities.txt")
    print(f"{g.n} vertices, {g.num_edges} edges")
    return ["graph.txt", "communities.txt"]


def cmd_lp(args) -> list[str]:
    g, vmap, cs = _load_graph(args)
    if args.seeds:
        dense = vmap.to_dense(_int_list(args.seeds))
        if np.any(dense < 0):
            raise ConfigError("some --seeds are not vertices of the graph")
    else:
        if cs is None or len(cs) == 0:
            raise ConfigError("give --seeds, or communities to draw them from")
        dense = sample_seeds(cs[args.community], args.seed_count, RngConfig(args.seed), 0)
    lps = landing_probabilities(g, seed_distribution(g.n, dense), args.K)
    z = lps.normalized_steps
    out = _out_dir(args)
    orig = vmap.original.tolist()
    rows = ([k, orig[v], repr(float(lps.steps[k, v])), repr(float(z[k, v]))]
            for k in range(lps.K + 1) for v in range(g.n))
    _write_csv(out / "lp.csv", ["k", "vertex", "x", "z"], rows)
    return ["lp.csv"]


def cmd_detect(args) -> list[str]:
    scheme = parse_scheme(args.scheme)
    sw = _sweep(args, [scheme], _K_values(args.K), _Q_values(args.Q))
    for r in sw.rows():
        print(f"{r['scheme']} K={r['K']} Q={r['Q']}: recall {r['mean_recall']:.4f} +- {r['std_recall']:.4f}")
    return _write_sweep(_out_dir(args), sw, True, False, "detect")


def cmd_sweep(args) -> list[str]:
    schemes = [parse_scheme(s) for s in args.scheme]
    sw = _sweep(args, schemes, _K_values(args.K), _Q_values(args.Q))
    if sw.resamples:
        logger.info("%d graph draws resampled for isolated vertices", sw.resamples)
    return _write_sweep(_out_dir(args), sw, args.per_trial, args.plot, "sweep")


def cmd_variance(args) -> list[str]:
    spec = SbmSpec.parse(args.sbm)
    tab = variance_experiment(spec, args.K, args.trials, RngConfig(args.seed), with_lambda=True,
                              threads=args.threads)
    out = _out_dir(args)
    files = ["variance.csv"]
    _write_csv(out / files[0], ["k", "trials", "mean_sq_l2_x", "mean_sq_l2_z", "mean_l1_x"], tab.rows())
    lo, hi = _int_list(args.window)
    if not 0 <= lo < hi <= args.K:
        raise ConfigError(f"slope window [{lo}, {hi}] must lie in [0, K]")
    ks = np.arange(lo, hi + 1)
    slope = log_slope(tab.mean_sq_l2_z[ks], ks)
    lam = float(np.mean(tab.lambda_sub))
    print(f"slope of ln mean ||z - zbar||^2 over k in [{lo}, {hi}]: {slope:.4f}; "
          f"2 ln lambda_sub = {2 * math.log(lam):.4f} (mean lambda_sub {lam:.4f}, "
          f"mean-field {mean_field(spec).lambda2_bar:.4f})")
    if tab.resamples:
        logger.info("%d graph draws resampled for isolated vertices", tab.resamples)
    if args.plot:
        files.append("variance.svg")
        k = np.arange(tab.K + 1)
        line_plot_svg({"||x - xbar||^2": (k, tab.mean_sq_l2_x), "||z - zbar||^2": (k, tab.mean_sq_l2_z)},
                      out / files[-1], title=f"SBM {spec}", ylabel="trial mean")
    return files


def cmd_lambda2(args) -> list[str]:
    g, _, _ = _load_graph(args)
    est = lambda_sub_estimate(g, tol=args.tol, max_iter=args.max_iter)
    if not est.converged:
        logger.warning("power iteration stopped after %d iterations without converging", est.iterations)
    if est.near_bipartite:
        logger.warning("lambda_sub is within 1e-6 of 1: the graph is disconnected or nearly bipartite")
    print(f"lambda_sub {est.lambda_sub!r} residual {est.residual!r} iterations {est.iterations}")
    _write_csv(_out_dir(args) / "lambda2.csv", ["key", "value"],
               [["lambda_sub", repr(est.lambda_sub)], ["residual", repr(est.residual)],
                ["iterations", est.iterations], ["converged", est.converged]])
    return ["lambda2.csv"]


def cmd_prep(args) -> list[str]:
    g, vmap = load_edge_list(args.graph)
    cs = load_communities(args.communities, vmap)
    lcc, lmap = largest_connected_component(g)
    full = lmap.compose(vmap)
    cs = cs.remap(lmap)
    window = tuple(_int_list(args.window)) if args.window else None
    if window is not None and len(window) != 2:
        raise ConfigError("--window takes LO,HI")
    chosen = select_communities_m34(cs, window, args.count)
    out = _out_dir(args)
    write_edge_list(lcc, out / "lcc.txt", full)
    full.write_csv(out / "vertex_map.csv")
    write_communities(chosen, out / "communities.txt", full)
    files = ["lcc.txt", "vertex_map.csv", "communities.txt"]
    print(f"LCC {lcc.n} of {g.n} vertices; kept {len(chosen)} of {len(cs)} communities "
          f"(sizes {chosen.sizes().tolist()})")
    if args.hops is not None:
        rng = RngConfig(args.seed)
        rows = []
        for i, c in enumerate(chosen):
            for t in range(args.trials):
                seeds = sample_seeds(c, args.seed_count, rng, t)
                sub, smap = bfs_subgraph(lcc, seeds, args.hops)
                inside = np.count_nonzero(smap.to_dense(c) >= 0)
                rows.append([i, t, sub.n, sub.num_edges, int(inside), c.size])
        files.append("subgraphs.csv")
        _write_csv(out / files[-1], ["community", "trial", "vertices", "edges", "members_inside", "size"], rows)
    return files


def cmd_bound(args) -> list[str]:
    if args.sbm:
        inputs = sbm_bound_inputs(SbmSpec.parse(args.sbm))
    else:
        if None in (args.n, args.dmin, args.dmax, args.lambda_bar):
            raise ConfigError("give --sbm, or all of --n --dmin --dmax --lambda-bar")
        inputs = dict(n=args.n, dbar_min=args.dmin, dbar_max=args.dmax, lambda_bar=args.lambda_bar)
    weights = parse_scheme(args.scheme).build(args.weight_steps) if args.scheme else None
    rep = bound_eval(**inputs, x0_norm=args.x0_norm, k=args.k, weights=weights,
                     constants=(args.C1, args.C2, args.C3))
    if rep.g_divergent:
        logger.warning("the weight series diverges at rho=%g", rep.rho)
    rows = [[k, "" if v is None else (list(v) if isinstance(v, tuple) else v)] for k, v in rep.rows()]
    for k, v in rows:
        print(f"{k}: {v}")
    _write_csv(_out_dir(args) / "bound.csv", ["key", "value"], rows)
    return ["bound.csv"]


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or YAML file of option defaults")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _graph_source(p: argparse.ArgumentParser, communities: bool = True) -> None:
    p.add_argument("--graph", help="edge list file")
    if communities:
        p.add_argument("--communities", help="community file, one community per line")
    p.add_argument("--sbm", help="generate a two-block SBM: n1,p1,n0,p0,q")
    p.add_argument("--graph-trial", type=int, default=0, help="trial index of the generated graph")


def _detection_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", default="50", help="step count(s); 'auto' uses 4x the mean seed eccentricity")
    p.add_argument("--Q", default=None, help="budget(s); default the community size")
    p.add_argument("--seed-count", type=int, default=1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--community", type=int, default=0, help="index of the target community")
    p.add_argument("--all-communities", action="store_true", help="average over every community")
    p.add_argument("--hops", type=int, default=None, help="restrict each trial to the BFS ball around its seeds")
    p.add_argument("--exclude-seeds", action="store_true", help="do not force seeds into the prediction")
    p.add_argument("--normalized", choices=("auto", "yes", "no"), default="auto",
                   help="degree-normalize the landing probabilities (auto: per scheme)")
    p.add_argument("--fresh-graphs", action="store_true",
                   help="with --sbm, sample a new graph for every trial (target C1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gprlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gprlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sbm", help="sample a two-block SBM to an edge list and community file")
    _common(p)
    p.add_argument("--sbm", required=True, help="n1,p1,n0,p0,q")
    p.add_argument("--graph-trial", type=int, default=0)
    p.add_argument("--nonisolated", action="store_true", help="resample until no vertex is isolated")
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("lp", help="landing probabilities x_k and z_k from a seed set")
    _common(p)
    _graph_source(p)
    p.add_argument("--seeds", help="seed vertex ids (comma separated)")
    p.add_argument("--seed-count", type=int, default=1, help="seeds drawn from --community if --seeds is absent")
    p.add_argument("--community", type=int, default=0)
    p.add_argument("--K", type=int, default=10)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("detect", help="seed-expansion recall of one weight scheme")
    _common(p)
    _graph_source(p)
    p.add_argument("--scheme", required=True, help="ppr:A | hpr:H | ipr-d:T | ipr-u:T[:PHI|auto] | custom:PATH")
    _detection_opts(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="paired recall over schemes x step counts x budgets")
    _common(p)
    _graph_source(p)
    p.add_argument("--scheme", action="append", required=True, help="repeat for several schemes")
    _detection_opts(p)
    p.add_argument("--per-trial", action="store_true", help="also write per-trial recalls")
    p.add_argument("--plot", action="store_true", help="SVG of mean recall against K")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("variance", help="deviation of LPs and DNLPs from the SBM mean field")
    _common(p)
    p.add_argument("--sbm", required=True, help="n1,p1,n0,p0,q")
    p.add_argument("--K", type=int, default=30)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--window", default="2,10", help="k-window LO,HI of the reported log slope")
    p.add_argument("--plot", action="store_true", help="SVG with a log-scale y axis")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("lambda2", help="max(|lambda_2|, |lambda_n|) of the walk matrix")
    _common(p)
    _graph_source(p, communities=False)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.set_defaults(func=cmd_lambda2)

    p = sub.add_parser("prep", help="largest component, community selection and BFS subgraph sizes")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--communities", required=True)
    p.add_argument("--window", help="keep communities with size in LO,HI (default: closest to m^0.75)")
    p.add_argument("--count", type=int, default=1, help="communities kept without --window")
    p.add_argument("--hops", type=int, default=None, help="report BFS subgraph sizes for this many hops")
    p.add_argument("--seed-count", type=int, default=1)
    p.add_argument("--trials", type=int, default=10, help="seed draws per community for --hops")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("bound", help="evaluate the LP/DNLP/GPR deviation bounds")
    _common(p)
    p.add_argument("--sbm", help="take n, degrees and lambda from this SBM's mean field")
    p.add_argument("--n", type=int)
    p.add_argument("--dmin", type=float)
    p.add_argument("--dmax", type=float)
    p.add_argument("--lambda-bar", type=float)
    p.add_argument("--x0-norm", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--scheme", help="weight scheme for the GPR bound")
    p.add_argument("--weight-steps", type=int, default=1000, help="terms of the weight sequence")
    p.add_argument("--C1", type=float, default=1.0)
    p.add_argument("--C2", type=float, default=1.0)
    p.add_argument("--C3", type=float, default=1.0)
    p.set_defaults(func=cmd_bound)
    return parser


def _read_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of option names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def parse_args(argv=None) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if known.config and command:
        cfg = _read_config(known.config)
        subparser = choices[command]
        known_dests = {a.dest for a in subparser._actions}
        unknown = sorted(set(cfg) - known_dests - {"config"})
        if unknown:
            raise ConfigError(f"unknown options in {known.config}: {', '.join(unknown)}")
        cfg.pop("config", None)
        # file values become defaults, so explicit flags still override them
        for a in subparser._actions:
            if a.dest in cfg:
                a.required = False
        subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _manifest(args, outputs: list[str]) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}
    record = dict(tool="gprlab", version=__version__, command=args.command, seed=args.seed,
                  threads=args.threads, config=config, outputs=outputs,
                  timestamp=time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    with open(Path(args.out) / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:  # argparse usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    except ConfigError as e:
        print(f"gprlab: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"gprlab: {e}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is None:
        args.threads = default_threads()
    try:
        outputs = args.func(args)
        _manifest(args, outputs)
    except (GraphFormatError, OSError) as e:
        print(f"gprlab: {e}", file=sys.stderr)
        return EXIT_IO
    except (ZeroDegreeError, ArithmeticError, RuntimeError) as e:
        print(f"gprlab: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"gprlab: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
