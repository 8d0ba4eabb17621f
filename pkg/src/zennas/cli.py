"""Command-line interface: ``zennas VERB [options]``.

Exit codes: 0 success, 2 bad input (parse, config, arguments), 3 numeric
failure (degenerate or overflowed score), 4 infeasible search space.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys
from dataclasses import replace

from . import arch as A
from . import report as R
from .budget import CostModel, bench_latency, count_flops, count_params, estimate_latency
from .config import EXAMPLE_CONFIG, build_search_config, build_space, load_config
from .corpus import builtin, builtin_names
from .errors import (ArchParseError, CheckpointError, ConfigError, DegenerateScore,
                     MutationExhausted, SpaceInfeasible, StructuralError)
from .proxies import PROXIES, ScoreConfig, fig2_families, score, theorem1_ratio, vanilla_arch
from .search import Searcher, resume
from .tensor import make_rng

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4
GLOBAL_DEFAULTS = {"seed": 0, "config": None, "precision": "f64", "out_dir": None,
                   "format": "csv"}


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# helpers


def load_arch(ref):
    """Architecture from a JSON file path or a built-in name such as ``resnet18``."""
    if os.path.exists(ref):
        return A.load(ref)
    try:
        return builtin(ref)
    except KeyError:
        raise CliError(f"{ref}: no such file or built-in architecture "
                       f"(built-ins: {', '.join(builtin_names())})") from None


def arch_id(ref):
    base = os.path.basename(ref)
    stem, ext = os.path.splitext(base)
    return stem if ext.lower() == ".json" else base


def score_config(args, **extra):
    kw = dict(seed=args.seed, precision=args.precision)
    for name in ("batch_size", "repeats", "resolution", "alpha", "bn_mode"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    kw.update(extra)
    base = {}
    if args.config:
        base = dict(load_config(args.config).get("score") or {})
    base.update(kw)
    try:
        return ScoreConfig(**base)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad score settings: {exc}") from None


def out_path(args, name):
    if not args.out_dir:
        return None
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def emit(args, rows, columns, svg=None):
    """Print ``rows`` in the requested format; write CSV (and SVG) to --out-dir."""
    if args.format == "json":
        sys.stdout.write(R.rows_to_json(rows, columns))
    elif args.format == "svg":
        if svg is None:
            raise CliError(f"{args.verb} has no plot; use --format csv or json")
        sys.stdout.write(svg)
    else:
        sys.stdout.write(R.rows_to_csv(rows, columns))


def parse_sweep(text):
    """``a:b:c`` (range, inclusive stop) or ``a,b,c``."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            lo, hi = parts[0], parts[1]
            st = parts[2] if len(parts) > 2 else 1
            return list(range(lo, hi + 1, st))
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise CliError(f"bad sweep {text!r}") from None


# --------------------------------------------------------------------------
# verbs


def cmd_score(args):
    cfg = score_config(args)
    rows = []
    for ref in args.arch:
        a = load_arch(ref)
        res = score(a, args.proxy, cfg)
        if res.overflowed:
            raise CliError(f"{ref}: {args.proxy} score overflowed "
                           "(use --precision f64 for log-domain scoring)", EXIT_NUMERIC)
        rows.append(res.as_row(arch_id(ref)))
        print(f"{arch_id(ref)}: wall_time {res.wall_time:.3f} s", file=sys.stderr)
    path = out_path(args, "scores.csv")
    if path:
        R.write_text(path, R.rows_to_csv(rows, R.SCORE_COLUMNS))
    cols = tuple(c for c in R.SCORE_COLUMNS if c != "wall_time")
    emit(args, rows, cols)


def cmd_search(args):
    if not args.config:
        raise CliError("search needs --config FILE (see `zennas export --example-config`)")
    data = load_config(args.config)
    overrides = {"seed": args.seed if args.seed_given else None,
                 "parallel_scorers": args.jobs, "iterations": args.iterations}
    if args.precision_given:
        overrides["precision"] = args.precision
    cfg = build_search_config(data, **overrides)
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    ckpt = os.path.join(out_dir, "checkpoint.json")
    cfg = replace(cfg, checkpoint_path=ckpt)
    if args.resume:
        searcher = resume(args.resume if isinstance(args.resume, str) else ckpt, cfg)
    else:
        searcher = Searcher(cfg).initialize()
    searcher.run()
    searcher.checkpoint(ckpt)
    best = searcher.best()
    A.save(best, os.path.join(out_dir, "best.json"))
    searcher.log.write_csv(os.path.join(out_dir, "log.csv"))
    it = [r.iteration for r in searcher.log.rows]
    svg = R.line_plot({"best": (it, [r.best_score_so_far for r in searcher.log.rows]),
                       "population mean": (it, [r.population_mean for r in searcher.log.rows])},
                      title=f"search ({cfg.proxy})", xlabel="iteration", ylabel="score")
    R.write_text(os.path.join(out_dir, "convergence.svg"), svg)
    top = searcher.population.best()
    rows = [{"arch_id": "best", "proxy": cfg.proxy, "value": top.score, "iterations": searcher.iteration,
             "depth": best.depth, "flops": count_flops(best), "params": count_params(best)}]
    emit(args, rows, tuple(rows[0]), svg)
    print(A.to_table(best), file=sys.stderr)


def cmd_mutate(args):
    a = load_arch(args.arch)
    space = space_from_args(args)
    rng = make_rng(args.seed)
    out = a
    for _ in range(args.steps):
        out = A.mutate(out, space, rng, args.max_depth)
    sys.stdout.write(A.serialize(out) + "\n")


def space_from_args(args):
    if args.space:
        return build_space(args.space)
    if args.config:
        data = load_config(args.config)
        if "space" in data:
            return build_space(data["space"])
    raise CliError("pass --space NAME or a --config with a space entry")


def cmd_validate(args):
    a = load_arch(args.arch)
    space = build_space(args.space) if args.space else None
    rep = A.validate(a, space, args.max_depth)
    print(f"{arch_id(args.arch)}: {rep}")
    if not rep.ok:
        raise CliError("validation failed", EXIT_INPUT)


def cmd_count(args):
    rows = []
    cost = None
    if args.cost_model or args.throughput:
        cost = (CostModel.load(args.cost_model, args.throughput, args.overhead)
                if args.cost_model else CostModel.fallback_only(args.throughput, args.overhead))
    for ref in args.arch:
        a = load_arch(ref)
        row = {"arch_id": arch_id(ref), "flops": count_flops(a, args.resolution),
               "flops_no_se": count_flops(a, args.resolution, include_se=False),
               "flops_backbone": count_flops(a, args.resolution, include_classifier=False),
               "params": count_params(a),
               "params_backbone": count_params(a, include_classifier=False),
               "depth": a.depth}
        if cost is not None:
            row["latency_ms"] = estimate_latency(a, cost)
        rows.append(row)
    cols = tuple(rows[0]) if rows else ("arch_id", "flops", "params", "depth")
    path = out_path(args, "counts.csv")
    if path:
        R.write_text(path, R.rows_to_csv(rows, cols))
    emit(args, rows, cols)


def cmd_bench(args):
    rows = []
    for ref in args.arch:
        a = load_arch(ref)
        ms = bench_latency(a, batch_size=args.batch_size or 1, repeats=args.repeats or 10,
                           warmup=args.warmup, resolution=args.resolution,
                           precision=args.precision, seed=args.seed)
        rows.append({"arch_id": arch_id(ref), "median_ms": ms, "batch_size": args.batch_size or 1})
    emit(args, rows, ("arch_id", "median_ms", "batch_size"))


def cmd_fig2(args):
    cfg = score_config(args)
    sweep = parse_sweep(args.sweep) if args.sweep else None
    res = fig2_families(args.kind, with_bn=args.bn, sweep=sweep, score=args.score, cfg=cfg,
                        width=args.width, channels=args.channels,
                        resolution=args.resolution or 16)
    rows = [{"family": args.kind, "parameter": p, "score": args.score, "with_bn": args.bn,
             "value": r.value, "std_error": r.std_error, "overflowed": r.overflowed}
            for p, r in res]
    label = f"{args.score} {'with' if args.bn or args.score == 'zen' else 'without'} BN"
    svg = R.line_plot({label: ([r["parameter"] for r in rows], [r["value"] for r in rows])},
                      title=f"family {args.kind}",
                      xlabel="depth" if args.kind == "P" else "hidden width", ylabel=args.score)
    path = out_path(args, f"fig2_{args.kind}_{args.score}{'_bn' if args.bn else ''}.csv")
    if path:
        R.write_text(path, R.rows_to_csv(rows, R.FIG2_COLUMNS))
        R.write_text(path[:-4] + ".svg", svg)
    emit(args, rows, R.FIG2_COLUMNS, svg)


def cmd_theorem1(args):
    depths = parse_sweep(args.depths)
    resolutions = parse_sweep(args.resolutions)
    rows = []
    for d in depths:
        for res in resolutions:
            cfg = score_config(args, resolution=res, bn_mode="no_mean")
            ratio = theorem1_ratio(vanilla_arch(d, args.width, resolution=res), cfg)
            rows.append({"depth": d, "batch": cfg.batch_size, "resolution": res,
                         "bhw": cfg.batch_size * res * res, "ratio": ratio,
                         "abs_deviation": abs(ratio - 1.0), "repeats": cfg.repeats})
    series = {f"L={d}": ([r["bhw"] for r in rows if r["depth"] == d],
                         [r["abs_deviation"] for r in rows if r["depth"] == d]) for d in depths}
    svg = R.line_plot(series, title="BN-rescaling identity", xlabel="B*H*W",
                      ylabel="|ratio - 1|")
    path = out_path(args, "theorem1.csv")
    if path:
        R.write_text(path, R.rows_to_csv(rows, R.THEOREM1_COLUMNS))
        R.write_text(os.path.join(args.out_dir, "theorem1.svg"), svg)
    emit(args, rows, R.THEOREM1_COLUMNS, svg)


def cmd_corpus(args):
    cfg = score_config(args)
    proxies = [p for p in args.proxies.split(",") if p]
    for p in proxies:
        if p not in PROXIES:
            raise CliError(f"unknown proxy {p!r}")
    if args.builtin:
        refs = [(n, builtin(n)) for n in builtin_names()]
    else:
        if not os.path.isdir(args.dir):
            raise CliError(f"{args.dir}: not a directory")
        refs = [(arch_id(f), A.load(f)) for f in sorted(glob.glob(os.path.join(args.dir, "*.json")))]
    rows, table = [], {}
    for name, a in refs:
        for p in proxies:
            res = score(a, p, cfg)
            rows.append(res.as_row(name))
            table[name, p] = res.value
    taus = R.kendall_matrix(table, proxies)
    path = out_path(args, "corpus.csv")
    if path:
        R.write_text(path, R.rows_to_csv(rows, R.SCORE_COLUMNS))
        R.write_text(out_path(args, "kendall.csv"),
                     R.rows_to_csv(taus, ("proxy_a", "proxy_b", "kendall_tau", "n")))
    cols = tuple(c for c in R.SCORE_COLUMNS if c != "wall_time")
    emit(args, rows, cols)
    if args.format != "json":
        sys.stdout.write(R.rows_to_csv(taus, ("proxy_a", "proxy_b", "kendall_tau", "n")))


def cmd_export(args):
    if args.example_config:
        sys.stdout.write(EXAMPLE_CONFIG)
        return
    if not args.arch:
        raise CliError("export needs an architecture or --example-config")
    a = load_arch(args.arch)
    if args.format == "csv":
        rows = [A.block_to_dict(b) for b in a.blocks]
        sys.stdout.write(R.rows_to_csv(rows, A.BLOCK_FIELDS))
    else:
        text = A.serialize(a) + "\n"
        sys.stdout.write(text)
    path = out_path(args, f"{arch_id(args.arch)}.json")
    if path:
        A.save(a, path)


VERBS = {"score": cmd_score, "search": cmd_search, "mutate": cmd_mutate,
         "validate": cmd_validate, "count": cmd_count, "bench": cmd_bench, "fig2": cmd_fig2,
         "theorem1": cmd_theorem1, "corpus": cmd_corpus, "export": cmd_export}


# --------------------------------------------------------------------------
# parser


def build_parser():
    glob_opts = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand from resetting a value given before the verb
    hide = argparse.SUPPRESS
    glob_opts.add_argument("--seed", type=int, default=hide, help="RNG seed (default 0)")
    glob_opts.add_argument("--config", default=hide,
                           help="YAML/JSON config file (search, space, budget, score)")
    glob_opts.add_argument("--precision", choices=("f32", "f64"), default=hide,
                           help="float precision (default f64; f32 reproduces literal overflow)")
    glob_opts.add_argument("--out-dir", default=hide, help="directory for CSV/SVG/JSON artifacts")
    glob_opts.add_argument("--format", choices=("csv", "json", "svg"), default=hide,
                           help="stdout format, default csv (svg only for verbs that plot)")

    p = argparse.ArgumentParser(prog="zennas", description="Training-free architecture search.",
                                parents=[glob_opts])
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, help_):
        return sub.add_parser(name, help=help_, description=help_, parents=[glob_opts])

    def score_opts(sp):
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--repeats", type=int, help="independent weight draws (default 4)")
        sp.add_argument("--resolution", type=int, help="override the input resolution")
        sp.add_argument("--alpha", type=float, help="perturbation scale (default 0.01)")
        sp.add_argument("--bn-mode", choices=("no_mean", "standard"))

    sp = verb("score", "Score architectures with a proxy.")
    sp.add_argument("arch", nargs="+", help="architecture JSON files or built-in names")
    sp.add_argument("--proxy", choices=PROXIES, default="zen")
    score_opts(sp)

    sp = verb("search", "Run the evolutionary search described by --config.")
    sp.add_argument("--resume", nargs="?", const=True, default=None,
                    help="continue from a checkpoint (default: OUT_DIR/checkpoint.json)")
    sp.add_argument("--jobs", type=int, default=None, help="concurrent scorers")
    sp.add_argument("--iterations", type=int, default=None, help="override search.iterations")

    sp = verb("mutate", "Apply random mutations and print the result.")
    sp.add_argument("arch")
    sp.add_argument("--space", help=f"named space: {', '.join(['micro', 'I-cifar', 'I-imagenet', 'II-cifar', 'II-imagenet'])}")
    sp.add_argument("--steps", type=int, default=1)
    sp.add_argument("--max-depth", type=int)

    sp = verb("validate", "Check structural invariants (and space membership).")
    sp.add_argument("arch")
    sp.add_argument("--space")
    sp.add_argument("--max-depth", type=int)

    sp = verb("count", "FLOPs (MACs), parameters, depth and estimated latency.")
    sp.add_argument("arch", nargs="+")
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--cost-model", help="latency table CSV")
    sp.add_argument("--throughput", type=float, help="fallback GFLOPs per ms")
    sp.add_argument("--overhead", type=float, default=0.0, help="fallback ms per block")

    sp = verb("bench", "Median host wall-clock of full forward passes (runs serially).")
    sp.add_argument("arch", nargs="+")
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--warmup", type=int, default=2)
    sp.add_argument("--resolution", type=int)

    sp = verb("fig2", "Depth (P) or hidden-width (Q) sweeps of plain conv nets.")
    sp.add_argument("--kind", choices=("P", "Q"), default="P")
    sp.add_argument("--score", choices=("phi", "zen"), default="phi")
    sp.add_argument("--bn", action="store_true", help="insert BN (phi score only)")
    sp.add_argument("--sweep", help="a:b[:step] or comma list")
    sp.add_argument("--width", type=int, default=64, help="P family width")
    sp.add_argument("--channels", type=int, default=16, help="Q family in/out channels")
    score_opts(sp)

    sp = verb("theorem1", "BN-rescaling ratio versus B*H*W.")
    sp.add_argument("--depths", default="3,5")
    sp.add_argument("--resolutions", default="8,32,64", help="H = W values")
    sp.add_argument("--width", type=int, default=32)
    score_opts(sp)

    sp = verb("corpus", "Score a directory of architectures and rank-correlate proxies.")
    sp.add_argument("dir", nargs="?", default=".")
    sp.add_argument("--builtin", action="store_true", help="use the built-in ResNet/ZenNet corpus")
    sp.add_argument("--proxies", default="zen,flops")
    score_opts(sp)

    sp = verb("export", "Print an architecture (JSON, or CSV rows) or the example config.")
    sp.add_argument("arch", nargs="?")
    sp.add_argument("--example-config", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own message
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    args.seed_given = hasattr(args, "seed")
    args.precision_given = hasattr(args, "precision")
    for name, default in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        VERBS[args.verb](args)
    except CliError as exc:
        print(f"zennas {args.verb}: {exc}", file=sys.stderr)
        return exc.code
    except (ArchParseError, ConfigError, CheckpointError, StructuralError, FileNotFoundError,
            ValueError) as exc:
        print(f"zennas {args.verb}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateScore as exc:
        print(f"zennas {args.verb}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpaceInfeasible, MutationExhausted) as exc:
        print(f"zennas {args.verb}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
