"""Command line for the mfeat fusion experiment.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

import argparse
import logging
import os
import re
import sys
import time
from pathlib import Path

from . import dataset, experiment
from .classifier import FitError
from .fusion import DegenerateFusionError

log = logging.getLogger("riskfusion")

CACHE_ENV = "RISKFUSION_CACHE_DIR"
EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_values(text):
    """``lo:hi:step`` (inclusive) or a comma separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            return experiment.frange(lo, hi, step)
        return [float(v) + 0.0 for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}: {exc}") from None


# options whose values may start with a minus sign
_VALUE_OPTIONS = {"--alpha", "--beta", "--kappa", "--alpha-beta"}
_NEGATIVE = re.compile(r"^-[\d.]")


def _join_negative_values(argv):
    """Turn ``--alpha -1:2:0.1`` into ``--alpha=-1:2:0.1``.

    argparse only recognises plain negative numbers as values, not lists or
    ranges that start with one.
    """
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _split_spec(text):
    try:
        return dataset.SplitSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_cache():
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "riskfusion")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--cache-dir", type=Path, default=None,
                   help=f"mfeat cache directory (env {CACHE_ENV}; default ~/.cache/riskfusion)")
    g.add_argument("--base-url", default=dataset.DEFAULT_BASE_URL)
    g.add_argument("--split", type=_split_spec, default=dataset.SplitSpec(),
                   help="'first' (default) or 'seeded:<n>'")
    g.add_argument("--ridge", type=float, default=None,
                   help="covariance ridge (default 1e-6 * trace / d)")
    g.add_argument("--floor", type=float, default=experiment.DEFAULT_FLOOR,
                   help="probability floor applied before fusion")
    g.add_argument("--out-dir", type=Path, default=Path("results"))
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("-v", "--verbose", action="store_true")

    # global options attach to each subcommand; on the top-level parser the
    # subparser defaults would silently overwrite them
    parser = _Parser(prog="riskfusion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="fetch and validate the six feature sets")
    p.add_argument("--from-dir", type=Path, help="install from local mfeat files or CSV copies")
    p.add_argument("--from-mvlearn", action="store_true",
                   help="install from the CSV copies bundled with an installed mvlearn")

    sub.add_parser("single-sets", parents=[common], help="test errors of each feature set")

    p = sub.add_parser("alpha-sweep", parents=[common], help="fused errors versus alpha")
    p.add_argument("--alpha", type=parse_values, default=experiment.frange(-1.0, 2.0, 0.1))
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--sources", type=lambda s: s.split(","), default=None,
                   help="comma separated subset of feature sets to fuse")

    p = sub.add_parser("grid", parents=[common], help="alpha-beta grid under each metric")
    p.add_argument("--alpha", type=parse_values, default=experiment.frange(-1.0, 2.0, 0.1))
    p.add_argument("--beta", type=parse_values, default=experiment.frange(0.0, 1.0, 0.1))
    p.add_argument("--metrics", type=lambda s: s.split(","), default=list(experiment.METRICS))

    p = sub.add_parser("risk-profiles", parents=[common],
                       help="effective probability versus kappa for fusion methods")
    p.add_argument("--alpha-beta", type=parse_values, default=None,
                   help="extra 'alpha,beta' method (default: the Shannon-optimal grid cell)")
    p.add_argument("--kappa", type=parse_values, default=experiment.frange(-1.0, 1.0, 0.05))
    p.add_argument("--bins", type=int, default=20)
    return parser


def _config(args):
    cache = args.cache_dir if args.cache_dir is not None else _default_cache()
    try:
        return experiment.RunConfig(
            cache_dir=cache, base_url=args.base_url, split=args.split, ridge=args.ridge,
            floor=args.floor, out_dir=args.out_dir, workers=args.workers,
            kappas=getattr(args, "kappa", None) or experiment.frange(-1.0, 1.0, 0.05),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _table(rows, fields):
    widths = [max(len(f), *(len(experiment.format_value(r[f])) for r in rows)) for f in fields]
    print("  ".join(f.ljust(w) for f, w in zip(fields, widths)))
    for r in rows:
        print("  ".join(experiment.format_value(r[f]).ljust(w) for f, w in zip(fields, widths)))


def _posteriors(cfg, names=None):
    sets = dataset.load_all(cfg.cache_dir, cfg.base_url, names)
    return experiment.source_posteriors(sets, cfg.split, cfg.ridge)


def cmd_ingest(cfg, args):
    if args.from_dir and args.from_mvlearn:
        raise UsageError("choose one of --from-dir and --from-mvlearn")
    source = args.from_dir
    if args.from_mvlearn:
        source = dataset.find_mvlearn_mirror()
        if source is None:
            raise dataset.FetchError("mvlearn is not installed or carries no mfeat copies")
    if source is not None:
        dataset.import_directory(source, cfg.cache_dir)
    rows = []
    for name in dataset.FEATURE_SETS:
        fs = dataset.load(name, cfg.cache_dir, cfg.base_url)
        rows.append({"set_name": name, "dim": fs.dim, "rows": fs.matrix.shape[0]})
    _table(rows, ["set_name", "dim", "rows"])


def cmd_single_sets(cfg, args):
    rows = experiment.single_set_errors(_posteriors(cfg))
    _table(rows, ["set_name", "dim", "misclassified"])
    experiment.write_csv(cfg.out_dir / "single_sets.csv", ["set_name", "dim", "misclassified"], rows)


def cmd_alpha_sweep(cfg, args):
    sp = _posteriors(cfg)
    if args.sources:
        unknown = set(args.sources) - set(sp.names)
        if unknown:
            raise UsageError(f"unknown feature sets: {sorted(unknown)}")
        sp = sp.select(args.sources)
    rows = experiment.alpha_sweep(sp, args.alpha, args.beta, cfg.floor)
    _table(rows, ["alpha", "misclassified"])
    experiment.write_csv(cfg.out_dir / "alpha_sweep.csv", ["alpha", "misclassified"], rows)


def cmd_grid(cfg, args):
    unknown = set(args.metrics) - set(experiment.METRICS)
    if unknown:
        raise UsageError(f"unknown metrics {sorted(unknown)}; choose from {list(experiment.METRICS)}")
    if any(not 0 <= b <= 1 for b in args.beta) or any(not -5 <= a <= 5 for a in args.alpha):
        raise UsageError("alpha must lie in [-5, 5] and beta in [0, 1]")
    sp = _posteriors(cfg)
    start = time.perf_counter()
    result = experiment.grid(sp, args.alpha, args.beta, args.metrics, cfg.floor, cfg.workers)
    log.info("grid of %d cells in %.2fs", len(args.alpha) * len(args.beta), time.perf_counter() - start)
    fields = ["alpha", "beta", "value", "misclassified", "is_optimal"]
    for metric, records in result.items():
        experiment.write_csv(cfg.out_dir / f"grid_{metric}.csv", fields, records)
    for metric, (a, b) in experiment.optimal_cells(result).items():
        print(f"{metric:9s} optimum at alpha={a:g} beta={b:g}")


def cmd_risk_profiles(cfg, args):
    sp = _posteriors(cfg)
    extra = args.alpha_beta
    if extra is None:
        cells = experiment.grid(
            sp, experiment.frange(-1.0, 2.0, 0.1), experiment.frange(0.0, 1.0, 0.1),
            ["shannon"], cfg.floor, cfg.workers,
        )
        extra = experiment.optimal_cells(cells)["shannon"]
    elif len(extra) != 2:
        raise UsageError("--alpha-beta takes exactly two values")
    rows = experiment.risk_profiles(sp, cfg.kappas, tuple(extra), cfg.floor)
    experiment.write_csv(cfg.out_dir / "risk_profile.csv", ["method", "kappa", "p_eff"], rows)
    hist = experiment.histograms(sp, tuple(extra), args.bins, cfg.floor)
    experiment.write_csv(cfg.out_dir / "histogram.csv", ["method", "bin_lo", "bin_hi", "count"], hist)
    named = [r for r in rows if r["kappa"] in (-0.5, 0.0, 0.5)]
    _table(named, ["method", "kappa", "p_eff"])


COMMANDS = {
    "ingest": cmd_ingest,
    "single-sets": cmd_single_sets,
    "alpha-sweep": cmd_alpha_sweep,
    "grid": cmd_grid,
    "risk-profiles": cmd_risk_profiles,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"riskfusion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dataset.DataError as exc:
        print(f"riskfusion: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, DegenerateFusionError, FloatingPointError) as exc:
        print(f"riskfusion: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
