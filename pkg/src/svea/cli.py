"""Command-line interface.

Machine-readable output goes to stdout (or ``--out``); progress and timings
go to stderr. Exit codes: 0 success, 2 bad input, 3 numerical failure,
4 exhaustive-size limit exceeded.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
from importlib import resources

from . import analysis, fixtures, robustness, synth
from .data import Dataset, load_csv, train_test_split, write_csv
from .errors import InputError, NumericalError, SizeLimitError
from .game import (GameCache, enumerate_all, full_mask, hinge_primal_lp,
                   mask_of, members_of, read_game_csv, write_game_csv)
from .lp import LPError, format_lp
from .shapley import DEFAULT_SAMPERM, game_svea, resolve_method, svea, shapley

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_LIMIT = 0, 2, 3, 4


def load_schema() -> dict:
    text = resources.files("svea").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


# -- argument helpers -----------------------------------------------------

def _parse_indices(text: str) -> list[int]:
    """``"1,4"`` -> ``[0, 3]`` (1-based on the command line)."""
    try:
        out = [int(tok) - 1 for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated feature numbers, got {text!r}")
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError("feature numbers start at 1")
    return out


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_source(p: argparse.ArgumentParser, require_m: bool = True) -> None:
    src = p.add_argument_group("data source (choose --input, --preset or --fixture)")
    src.add_argument("--input", help="CSV file with a header row")
    src.add_argument("--label", default="-1",
                     help="label column name or 0-based index (default: last column)")
    src.add_argument("--positive", help="label value mapped to +1 (default: 1, else the larger label)")
    src.add_argument("--standardize", action="store_true",
                     help="z-score every feature column (off by default)")
    src.add_argument("--preset", choices=synth.PRESETS,
                     help="sample a synthetic Gaussian benchmark")
    src.add_argument("--m", type=_positive_int, help="rows to sample with --preset")
    src.add_argument("--fixture", choices=fixtures.FIXTURES, help="bundled dataset")


def _add_common(p: argparse.ArgumentParser, formats=("json",)) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for sampling, splits and Monte Carlo")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $SVEA_THREADS or 1); results do not depend on it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_method(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("auto", "exact", "permutation", "mc"), default="auto",
                   help="Shapley estimator; auto = exact below 10 features, else mc")
    p.add_argument("--samperm", type=_positive_int, default=DEFAULT_SAMPERM,
                   help=f"sampled permutations for mc (default {DEFAULT_SAMPERM})")


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("SVEA_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputError(f"SVEA_THREADS must be a positive integer, got {env!r}") from None
        if value < 1:
            raise InputError(f"SVEA_THREADS must be a positive integer, got {env!r}")
        return value
    return 1


def _dataset(args) -> tuple[Dataset, str]:
    chosen = [x for x in (args.input, args.preset, args.fixture) if x]
    if len(chosen) != 1:
        raise InputError("give exactly one of --input, --preset or --fixture")
    if args.input:
        d, source = load_csv(args.input, _label_arg(args.label), args.positive), args.input
    elif args.preset:
        if args.m is None:
            raise InputError("--preset needs --m (number of rows)")
        d = synth.sample(synth.preset(args.preset), args.m, args.seed)
        source = f"preset:{args.preset}:m={args.m}:seed={args.seed}"
    else:
        d, source = fixtures.titanic_dataset(), f"fixture:{args.fixture}"
    if args.standardize:
        from .data import zscore
        d = zscore(d)
    return d, source


def _label_arg(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _dataset_json(d: Dataset, source: str) -> dict:
    return {"source": source, "m": d.m, "n": d.n, "features": list(d.feature_names)}


def _one_based(indices) -> list[int]:
    return [int(j) + 1 for j in indices]


class _Log:
    def __init__(self, verbose: bool):
        self.verbose = verbose
        self.start = time.perf_counter()

    def __call__(self, msg: str) -> None:
        if self.verbose:
            print(f"[{time.perf_counter() - self.start:7.2f}s] {msg}", file=sys.stderr)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# -- subcommands ----------------------------------------------------------

def _svea_report(args, command: str) -> dict:
    log = _Log(args.verbose)
    d, source = _dataset(args)
    threads = _threads(args)
    log(f"dataset {source}: m={d.m}, n={d.n}")
    cache = GameCache(d)
    method = resolve_method(args.method, d.n)
    alloc = game_svea(cache, method, args.samperm, args.seed, threads)
    log(f"{alloc.shapley.method} Shapley done, {cache.lp_solves} LP solves")
    if abs(alloc.e.sum() - alloc.total_error) > 1e-6:
        raise NumericalError("apportioned errors do not add up to the training error")
    sel = analysis.select_features(alloc)
    if sel.separable:
        print("warning: the data are linearly separable; negative e_j carry no "
              "importance meaning here", file=sys.stderr)
    rank = {j: r + 1 for r, j in enumerate(sel.ranking)}
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "dataset": _dataset_json(d, source),
        "method": alloc.shapley.method,
        "samPerm": alloc.shapley.samperm,
        "seed": args.seed,
        "empty_error": alloc.empty_error,
        "total_error": alloc.total_error,
        "grand_value": alloc.shapley.grand_value,
        "lp_solves": cache.lp_solves,
        "clamped_values": cache.clamped,
        "features": [
            {"index": j + 1, "name": d.feature_names[j], "phi": float(alloc.phi[j]),
             "e": float(alloc.e[j]), "rank": rank[j], "selected": j in sel.svea_neg}
            for j in range(d.n)],
        "selection": {
            "svea_neg": _one_based(sel.svea_neg),
            "boundary": _one_based(sel.boundary),
            "ranking": _one_based(sel.ranking),
            "separable": sel.separable,
            "tie_tolerance": sel.tie_tolerance,
        },
    }
    if getattr(args, "dump_lp", None):
        with open(args.dump_lp, "w", encoding="utf-8") as handle:
            handle.write(format_lp(hinge_primal_lp(d.features, d.labels)))
    log("report ready")
    return report


def cmd_run(args) -> str:
    return _json(_svea_report(args, "run"))


def cmd_select(args) -> str:
    report = _svea_report(args, "select")
    if args.format == "csv":
        lines = ["index,name,e,rank,selected"]
        for f in report["features"]:
            lines.append(f"{f['index']},{f['name']},{f['e']!r},{f['rank']},{int(f['selected'])}")
        return "\n".join(lines) + "\n"
    return _json(report)


def cmd_psv(args) -> str:
    d, source = _dataset(args)
    split = train_test_split(d, args.test_fraction, args.seed)
    members = args.coalition
    if max(members) >= d.n:
        raise InputError(f"coalition names feature {max(members) + 1} but n = {d.n}")
    from .game import train_classifier
    full = train_classifier(split.train, full_mask(d.n)).correct(split.test)
    sub = train_classifier(split.train, mask_of(members)).correct(split.test)
    if full == 0:
        raise NumericalError("the full-feature classifier gets no test point right")
    return _json({
        "schema_version": SCHEMA_VERSION, "command": "psv",
        "dataset": _dataset_json(d, source), "seed": args.seed,
        "coalition": _one_based(sorted(set(members))), "psv": sub / full,
        "correct_subset": sub, "correct_full": full, "m_test": split.test.m,
    })


def _witness(w):
    if w is None:
        return None
    return {"S": _one_based(members_of(w.s)), "T": _one_based(members_of(w.t)),
            "lhs": w.lhs, "rhs": w.rhs}


def cmd_core(args) -> str:
    threads = _threads(args)
    if args.game:
        if args.game in fixtures.FIXTURES:
            game = fixtures.titanic_game()
        else:
            with open(args.game, encoding="utf-8") as handle:
                game = read_game_csv(handle)
        source = args.game
    else:
        d, source = _dataset(args)
        game = enumerate_all(GameCache(d), threads)
    core = analysis.bondareva_core_check(game)
    structure = analysis.structure_checks(game, allow_large=args.allow_large)
    rationality = None
    if game.empty_error is not None:
        alloc = shapley(game, "exact", threads=threads)
        total = game.empty_error - alloc.grand_value
        rep = analysis.rationality_checks(svea(alloc, game.empty_error, total), game)
        rationality = {
            "individually_rational": list(rep.individually_rational),
            "coalitionally_rational": rep.coalitionally_rational,
            "scope": rep.scope,
            "worst_coalition": None if rep.worst_coalition is None
            else _one_based(members_of(rep.worst_coalition)),
            "worst_excess": rep.worst_excess,
            "phi_in_imputation_set": rep.in_imputation_set,
            "phi": [float(x) for x in alloc.phi],
        }
    return _json({
        "schema_version": SCHEMA_VERSION, "command": "core-check", "source": source,
        "n": game.n, "grand_value": float(game.grand_value),
        "core": {"status": core.status, "optimum": core.optimum,
                 "allocation": None if core.allocation is None
                 else [float(x) for x in core.allocation]},
        "convex": structure.convex, "superadditive": structure.superadditive,
        "convexity_witness": _witness(structure.convexity_witness),
        "superadditivity_witness": _witness(structure.superadditivity_witness),
        "rationality": rationality,
    })


def cmd_intervals(args) -> str:
    d, _ = _dataset(args)
    grouped = robustness.subset_svea(d, args.m_s, args.seed, args.method, args.samperm,
                                     _threads(args))
    est = robustness.group_and_interval(grouped, args.alpha)
    if args.format == "csv":
        lines = ["index,name,mean,lower,upper,class"]
        for j, f in enumerate(est.features, start=1):
            lines.append(f"{j},{f.name},{f.mean!r},{f.lower!r},{f.upper!r},{f.classification}")
        return "\n".join(lines) + "\n"
    return _json({
        "schema_version": SCHEMA_VERSION, "command": "intervals",
        "alpha": est.alpha, "G": est.groups, "m_s": est.m_s, "ss": grouped.ss,
        "t_star": est.t_star,
        "features": [{"name": f.name, "mean": f.mean, "std": f.std, "lower": f.lower,
                      "upper": f.upper, "class": f.classification} for f in est.features],
    })


def cmd_topl(args) -> str:
    d, _ = _dataset(args)
    split = train_test_split(d, args.test_fraction, args.seed)
    alloc = game_svea(GameCache(split.train), args.method, args.samperm, args.seed,
                      _threads(args))
    curve = analysis.accuracy_vs_top_l(split.train, split.test, analysis.select_features(alloc))
    if args.format == "json":
        return _json([{"l": p.l, "features": _one_based(p.features), "accuracy": p.accuracy}
                      for p in curve])
    lines = ["l,features,accuracy"]
    for p in curve:
        lines.append(f"{p.l},{' '.join(map(str, _one_based(p.features)))},{p.accuracy!r}")
    return "\n".join(lines) + "\n"


def cmd_synth_gen(args) -> str:
    d = synth.sample(synth.preset(args.preset), args.m, args.seed)
    if args.out:
        write_csv(d, args.out)
        return ""
    buf = io.StringIO()
    buf.write(",".join([*d.feature_names, "label"]) + "\n")
    for row, lab in zip(d.features, d.labels):
        buf.write(",".join(repr(float(v)) for v in row) + ("," + ("1" if lab > 0 else "-1")) + "\n")
    return buf.getvalue()


def cmd_game_dump(args) -> str:
    d, _ = _dataset(args)
    cache = GameCache(d)
    threads = _threads(args)
    method = resolve_method(args.method, d.n)
    if method == "mc":
        shapley(cache, "mc", args.samperm, args.seed, threads)
    else:
        enumerate_all(cache, threads)
    buf = io.StringIO()
    write_game_csv(cache, buf)
    return buf.getvalue()


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svea",
        description="Select features by apportioning the hinge-loss training error of a "
                    "linear classifier among them with Shapley values. Features whose "
                    "apportioned error is negative are selected.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline: game, Shapley values, apportioned errors, selection",
                       description="Build the classification game (value of a feature set = drop in "
                                   "hinge training error against the intercept-only classifier), "
                                   "compute Shapley values, apportion the training error as "
                                   "e_j = c/n - phi_j and select features with e_j < 0.")
    _add_source(p); _add_common(p); _add_method(p)
    p.add_argument("--dump-lp", metavar="PATH",
                   help="also write the full-feature hinge LP in plain text")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("select", help="apportioned errors, ranking and selected set",
                       description="Same computation as run; the CSV format lists e_j, rank and "
                                   "selection per feature.")
    _add_source(p); _add_common(p, ("json", "csv")); _add_method(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("psv", help="power of classification of a feature set",
                       description="Split the data (stratified), train hinge-loss classifiers on the "
                                   "given features and on all features, and report the ratio of "
                                   "their correct test predictions.")
    _add_source(p); _add_common(p)
    p.add_argument("--coalition", type=_parse_indices, required=True,
                   help="comma-separated 1-based feature numbers, e.g. 1,4")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_psv)

    p = sub.add_parser("core-check", help="core, convexity, superadditivity and rationality checks",
                       description="Enumerate the whole game and report: core emptiness via the "
                                   "balanced-collection LP, convexity and superadditivity with a "
                                   "counterexample pair, individual and coalitional rationality of "
                                   "the apportioned errors, and whether the Shapley vector is an "
                                   "imputation.")
    _add_source(p); _add_common(p)
    p.add_argument("--game", help="game table CSV (coalition_mask,tr_er,v) or a bundled fixture name")
    p.add_argument("--allow-large", action="store_true",
                   help="run the O(4^n) pair checks above 12 features")
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("intervals", help="t intervals for apportioned errors over disjoint subsamples",
                       description="Cut the data into disjoint subsets of m_s rows (default 6n), run "
                                   "the pipeline on each, average in groups of 30 subsets and put a "
                                   "Student-t interval around the mean of the group means. A "
                                   "feature is BelowZero when its whole interval is negative.")
    _add_source(p); _add_common(p, ("json", "csv")); _add_method(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m-s", type=_positive_int, default=None, dest="m_s",
                   help="subset size (default 6 * number of features)")
    p.set_defaults(func=cmd_intervals)

    p = sub.add_parser("topl", help="test accuracy using the l best-ranked features, l = 1..n",
                       description="Rank features by apportioned error on a training split, then "
                                   "report the test accuracy of hinge-loss classifiers trained on "
                                   "the first l ranked features.")
    _add_source(p); _add_common(p, ("csv", "json")); _add_method(p)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_topl)

    p = sub.add_parser("synth", help="synthetic data generators")
    synth_sub = p.add_subparsers(dest="synth_command", required=True)
    g = synth_sub.add_parser("gen", help="sample a Gaussian benchmark to CSV",
                             description="Sample a two-class Gaussian benchmark with shared "
                                         "covariance and write it in the standard CSV layout.")
    g.add_argument("--preset", choices=synth.PRESETS, required=True)
    g.add_argument("--m", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--threads", type=_positive_int, default=None, help=argparse.SUPPRESS)
    g.add_argument("-v", "--verbose", action="store_true", help=argparse.SUPPRESS)
    g.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("game-dump", help="write cached coalitions as CSV",
                       description="Evaluate the game (every coalition, or only those touched by "
                                   "Monte Carlo sampling with --method mc) and write rows "
                                   "coalition_mask,tr_er,v. Bit j-1 of the mask is feature j.")
    _add_source(p); _add_common(p, ("csv",)); _add_method(p)
    p.set_defaults(func=cmd_game_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
        if text:
            _emit(args, text)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (NumericalError, LPError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
