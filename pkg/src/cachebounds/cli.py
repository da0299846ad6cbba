"""Command-line front end: ``cachebounds {rates,converse,curve,certify,simulate}``.

Exit codes: 0 success, 1 certification failure, 2 internal consistency
failure, 64 usage error, 74 output file could not be written.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import converse, gap, rates, sim
from .curves import tradeoff_bundle
from .envelope import curve_max_difference

EXIT_OK, EXIT_FAIL, EXIT_INTERNAL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _fmt(x: Fraction) -> str:
    return f"{x} ({float(x):.10g})"


def _params(args) -> rates.SystemParams:
    try:
        if getattr(args, "r", None) is not None:
            return rates.SystemParams.from_r(args.files, args.users, args.r)
        return rates.SystemParams(args.files, args.users, args.memory or Fraction(0))
    except ValueError as e:
        raise UsageError(str(e))


def _add_system(p: argparse.ArgumentParser, memory: bool = True) -> None:
    p.add_argument("--files", "-N", type=_positive, required=True, help="number of files N")
    p.add_argument("--users", "-K", type=_positive, required=True, help="number of users K")
    if memory:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--memory", "-M", type=_fraction, help="cache size M in files, e.g. 3/2")
        g.add_argument("--r", type=_fraction, help="memory ratio r = KM/N")


def cmd_rates(args) -> int:
    p = _params(args)
    print(f"N={p.n_files} K={p.n_users} M={p.memory} r={p.r}")
    print(f"r_u: {_fmt(rates.r_u(p))}")
    print(f"r_u_ave: {_fmt(rates.r_u_ave(p))}")
    print(f"r_dec: {_fmt(rates.r_dec(p))}")
    return EXIT_OK


def cmd_converse(args) -> int:
    p = _params(args)
    best = converse.best_peak_converse(p)
    line = converse.best_peak_provenance(p)
    print(f"N={p.n_files} K={p.n_users} M={p.memory} r={p.r}")
    print(f"best_peak_converse: {_fmt(best)}")
    print(f"provenance: {line.provenance}  line: {line.intercept} + ({line.slope})*M")
    print(f"ave_converse: {_fmt(converse.ave_converse(p))}")
    return EXIT_OK


def cmd_curve(args) -> int:
    bundle = tradeoff_bundle(args.files, args.users)
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    text = bundle.to_json() if fmt == "json" else bundle.to_csv()
    _write(args.out, text)
    ru = bundle.curves["achievable-peak"]
    best = bundle.curves["best-converse"]
    g, at = curve_max_difference(ru, best)
    print(f"wrote {len(bundle.rows())} breakpoints to {args.out}")
    print(f"max peak gap (achievable - best converse): {_fmt(g)} at M={at}")
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.suite == "lemma4":
        report = gap.lemma4_report(seed=args.seed)
    elif args.suite == "theorem1":
        report = gap.theorem1_gap_sweep(args.nmax, args.kmax, args.grid_den, args.workers)
    elif args.suite == "theorem3":
        n_list = [int(x) for x in args.n_list.split(",")]
        try:
            report = gap.theorem3_exactness_check(args.users, n_list)
        except ValueError as e:
            raise UsageError(str(e))
    else:
        report = gap.corollary1_check(args.nmax)
    doc = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, doc)
    print(f"suite: {report.suite}")
    if report.worst_ratio is not None:
        print(f"worst_ratio: {_fmt(report.worst_ratio)}")
    if report.worst_location:
        print(f"worst_location: {json.dumps(gap._jsonable(report.worst_location))}")
    print(f"bound: {report.bound}")
    print(f"pass: {str(report.passed).lower()}")
    if not report.passed:
        print(f"counterexample: {json.dumps(gap._jsonable(report.counterexamples[0]))}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _params(args)
    try:
        r = sim.integer_r(p)
    except NotImplementedError as e:
        raise UsageError(str(e))
    try:
        res = sim.simulate(p, args.bits, args.seed, args.samples,
                           keep_transcript=bool(args.dump_transcript))
    except ValueError as e:
        raise UsageError(str(e))
    print(f"N={p.n_files} K={p.n_users} r={r} demands={res.n_demands}")
    print(f"measured peak: {_fmt(res.peak)}")
    print(f"measured average: {_fmt(res.average)}")
    if args.dump_transcript:
        _write(args.dump_transcript, "\n".join(res.transcript) + "\n")
    if res.decode_failures:
        d, user = res.decode_failures[0]
        print(f"decode FAILED: user {user}, demand {d}", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"decodes: all {res.n_demands * p.n_users} OK")
    want_peak = rates.r_u_integer(p, r)
    want_ave = rates.r_u_ave_integer(p, r)
    print(f"formula peak: {_fmt(want_peak)}")
    print(f"formula average: {_fmt(want_ave)}")
    if res.peak != want_peak or (args.samples is None and res.average != want_ave):
        print("measured rates disagree with the formulas", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cachebounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", help="achievable peak/average rates and R_dec")
    _add_system(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("converse", help="best peak converse and average converse")
    _add_system(p)
    p.set_defaults(func=cmd_converse)

    p = sub.add_parser("curve", help="write tradeoff curve breakpoints")
    _add_system(p, memory=False)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("certify", help="run a gap certification suite")
    p.add_argument("suite", choices=("lemma4", "theorem1", "theorem3", "corollary1"))
    p.add_argument("--nmax", type=_positive, default=30)
    p.add_argument("--kmax", type=_positive, default=30)
    p.add_argument("--grid-den", type=_positive, default=8, help="M grid step is 1/grid-den")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--users", type=_positive, default=5, help="K for theorem3")
    p.add_argument("--n-list", default="100,1000,10000", help="N values for theorem3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="simulate placement, delivery and decoding")
    p.add_argument("--files", "-N", type=_positive, required=True)
    p.add_argument("--users", "-K", type=_positive, required=True)
    p.add_argument("--r", type=_fraction, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=_positive, help="file size F in bits (default 8*C(K,r))")
    p.add_argument("--samples", type=_positive, help="sample demands instead of enumerating")
    p.add_argument("--dump-transcript", metavar="PATH")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"cachebounds: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as e:
        print(f"cachebounds: {e}", file=sys.stderr)
        return EXIT_IO
    except sim.DecodeError as e:
        print(f"cachebounds: protocol failure: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
