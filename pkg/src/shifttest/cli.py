"""Command-line interface.

Subcommands::

    shifttest test --x x.csv --y y.csv --n-shifts 19 [--assoc log-odds] [--alpha 0.05]
    shifttest simulate --out-x x.csv --out-y y.csv [--length 300] [--p-common 0.1]
    shifttest reproduce-fig2 --out results/ [--replicates 1000] [--seed 0]
    shifttest verify-bounds [--replicates 1000] [--seed 0] [--out bounds.json]

Exit codes: 0 success, 1 a bound check failed, 2 usage error, 3 data or
parse error, 4 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import secrets
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

from . import __version__
from .assoc import get_association
from .core import InvalidInputError, ShiftTestError, run_test
from .harness import (
    ExperimentSpec,
    ReplicateError,
    bound_verification_suite,
    dump_json,
    reproduce_figure2,
)
from .io import SeriesParseError, read_series, write_series
from .sim import MarkovPairConfig, simulate_pair

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PRECONDITION = 4

RESULT_SCHEMA_VERSION = 1


def _alpha(text: str) -> str:
    try:
        a = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return text


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= p <= 1:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {text}")
    return p


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _n_states(text: str) -> int:
    n = _positive_int(text)
    if n < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 states, got {n}")
    return n


def _seed(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {n}")
    return n


def _epsilon(text: str) -> float:
    try:
        e = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not e > 0:
        raise argparse.ArgumentTypeError(f"epsilon must be positive, got {text}")
    return e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shifttest", description="Shift test for independence of two time series."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the shift test on two series files")
    p.add_argument("--x", required=True, type=Path, help="series whose central segment is held fixed")
    p.add_argument("--y", required=True, type=Path, help="stationary series that is shifted")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n-shifts", type=_positive_int, help="maximum shift N")
    g.add_argument("--segment-length", type=_positive_int, help="segment length D; T - D must be even")
    p.add_argument("--assoc", choices=["log-odds", "pearson", "spearman"], default="log-odds")
    p.add_argument("--epsilon", type=_epsilon, default=0.1, help="log-odds regulariser")
    p.add_argument("--alpha", type=_alpha, default="0.05")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("simulate", help="simulate a pair of categorical Markov series")
    p.add_argument("--out-x", required=True, type=Path)
    p.add_argument("--out-y", required=True, type=Path)
    p.add_argument("--length", type=_positive_int, default=300)
    p.add_argument("--n-states", type=_n_states, default=2)
    p.add_argument("--p-switch", type=_probability, default=0.1)
    p.add_argument("--p-common", type=_probability, default=0.0)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--meta", type=Path, help="sidecar JSON (default: OUT_X with .json suffix)")

    p = sub.add_parser("reproduce-fig2", help="regenerate the categorical-series example data")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--replicates", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)

    p = sub.add_parser("verify-bounds", help="check P(m <= M) against both bounds under independence")
    p.add_argument("--replicates", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)
    p.add_argument("--length", type=_positive_int, default=300)
    p.add_argument("--n-states", type=_n_states, default=2)
    p.add_argument("--p-switch", type=_probability, default=0.1)
    p.add_argument("--n-shifts", type=_positive_int, default=19)
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="\n")


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def cmd_test(args) -> int:
    kind = "categorical" if args.assoc == "log-odds" else "real"
    x = read_series(args.x, kind)
    y = read_series(args.y, kind)
    if x.length != y.length:
        raise InvalidInputError(f"series lengths differ: {x.length} != {y.length}")
    if args.segment_length is not None:
        gap = x.length - args.segment_length
        if gap < 2 or gap % 2:
            raise InvalidInputError(
                f"T - D = {gap} must be a positive even number (T={x.length}, D={args.segment_length})"
            )
        n_shifts = gap // 2
    else:
        n_shifts = args.n_shifts
    params = {"epsilon": args.epsilon} if args.assoc == "log-odds" else {}
    v = get_association(args.assoc, **params)
    profile, outcome = run_test(x, y, n_shifts, v, args.alpha)
    result = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "association": args.assoc,
        "association_params": params,
        "series_length": x.length,
        "segment_length": profile.segment_length,
        "alpha_text": args.alpha,
        **outcome.to_dict(),
        "profile": {
            "shifts": [int(s) for s in profile.shifts],
            "scores": [float(s) for s in profile.scores],
        },
    }
    if args.format == "json":
        text = dump_json(result)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = [k for k in result if k not in ("profile", "association_params")]
        w.writerow(keys)
        w.writerow([str(result[k]).lower() if isinstance(result[k], bool) else result[k] for k in keys])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    config = MarkovPairConfig(args.length, args.n_states, args.p_switch, args.p_common, seed)
    x, y = simulate_pair(config)
    meta = args.meta or args.out_x.with_suffix(".json")
    try:
        write_series(args.out_x, x)
        write_series(args.out_y, y)
        meta.write_text(
            dump_json({"code_version": __version__, "config": asdict(config)}),
            encoding="utf-8",
            newline="\n",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_reproduce_fig2(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        summary = reproduce_figure2(args.out, args.replicates, seed, args.workers)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for name, entry in summary["conditions"].items():
        print(
            f"{name}: m<=1 in {entry['count_m_le_1']}/{args.replicates} "
            f"(published {entry['published_count_per_1000']}/1000) {entry['status']}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    seed = _resolve_seed(args.seed)
    spec = ExperimentSpec(
        replicates=args.replicates,
        pair_config=MarkovPairConfig(args.length, args.n_states, args.p_switch, 0.0),
        n_shifts=args.n_shifts,
        association_params={"epsilon": args.epsilon},
        master_seed=seed,
    )
    report = bound_verification_suite(spec, workers=args.workers)
    if args.format == "json":
        _emit(dump_json({"master_seed": seed, "spec": spec.to_dict(), **report.to_dict()}), args.out)
    else:
        _emit(report.to_csv(), args.out)
    return EXIT_OK if report.conservative_ok else EXIT_CHECK_FAILED


COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "reproduce-fig2": cmd_reproduce_fig2,
    "verify-bounds": cmd_verify_bounds,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SeriesParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ReplicateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InvalidInputError, ShiftTestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
