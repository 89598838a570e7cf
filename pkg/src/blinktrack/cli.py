"""Command-line front end.

Exit status: 0 on success, 1 for bad input (missing or malformed files,
invalid parameters), 2 when a tracker invariant check fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .codebook import generate_dictionary, load_dictionary, save_dictionary
from .errors import InputError, InvariantViolation
from .fileio import read_report, write_comparison
from .harness import (
    ALGORITHMS,
    default_dictionary,
    resolve_scenario,
    run_scenario,
    simulate_to_files,
    track_stream,
)
from .metrics import MetricsReport, compare

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2


def _summary(report: MetricsReport) -> str:
    rates = ", ".join(f"{i}: {report.success_rate.get(i, 0.0):.2f}/s" for i in report.marker_ids)
    return (
        f"{report.scenario} [{report.algorithm}, seed {report.seed}] success {rates}; "
        f"purity {report.purity:.3f}; id switches {report.id_switch_count}; "
        f"mean frame time {report.mean_frame_time * 1e3:.3f} ms"
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario, _ = resolve_scenario(args.scenario, args.seed)
    dictionary = load_dictionary(args.dict) if args.dict else default_dictionary()
    frames, _, files = simulate_to_files(scenario, dictionary, args.out)
    n_points = sum(len(f.points) for f in frames)
    print(f"simulated {len(frames)} frames, {n_points} detections -> {files['detections']}")
    return EXIT_OK


def cmd_track(args: argparse.Namespace) -> int:
    out = track_stream(
        args.stream, args.dict, args.config, args.algo, args.out, args.truth, args.tolerance_px
    )
    if out.report is not None:
        print(_summary(out.report))
    n_ids = sum(len(r.identifications) for r in out.results)
    print(f"{n_ids} identifications over {len(out.results)} frames -> {out.files['identifications']}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    report = run_scenario(
        args.scenario, args.config, args.dict, args.algo, args.out, args.seed, args.tolerance_px
    )
    print(_summary(report))
    print(f"report -> {Path(args.out) / 'report.csv'}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    for path in (args.report_a, args.report_b):
        if not Path(path).exists():
            raise InputError(f"report not found: {path}")
    a, b = read_report(args.report_a), read_report(args.report_b)
    table = compare(a, b)
    header = {"scenario": a.scenario, "seed": str(a.seed), "a": a.algorithm, "b": b.algorithm}
    text = write_comparison(args.out, table, header)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"comparison -> {args.out}")
    return EXIT_OK


def cmd_gen_dict(args: argparse.Namespace) -> int:
    dictionary = generate_dictionary(
        args.n_ids, args.length, args.max_zero_bits, args.errors, seed=args.seed or 0
    )
    if args.out is None:
        for led_id, seq in dictionary.entries.items():
            print(f"{led_id}, {''.join(map(str, seq))}")
    else:
        save_dictionary(dictionary, args.out)
        print(f"{len(dictionary)} sequences -> {args.out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit status 2 is reserved for invariants
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blinktrack", description="Blinking-marker tracking toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="scenario YAML file or preset name")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    def tracker_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="tracker config YAML")
        p.add_argument("--dict", default=None, help="blink dictionary file")
        p.add_argument("--algo", choices=ALGORITHMS, default="amt")
        p.add_argument("--tolerance-px", type=float, default=3.0, dest="tolerance_px")

    p = sub.add_parser("simulate", help="scenario -> detection stream + truth log")
    scenario_args(p)
    p.add_argument("--dict", default=None, help="blink dictionary file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="detection stream -> identifications (+ metrics)")
    p.add_argument("--stream", required=True, help="detections.csv from `simulate`")
    p.add_argument("--truth", default=None, help="truth log (default: truth.csv beside the stream)")
    tracker_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("run", help="simulate, track and score in one go")
    scenario_args(p)
    tracker_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="two metric reports -> comparison table")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-dict", help="generate a blink dictionary")
    p.add_argument("--n-ids", type=int, default=8, dest="n_ids")
    p.add_argument("--length", type=int, default=18, help="sequence length L_D")
    p.add_argument("--max-zero-bits", type=int, default=4, dest="max_zero_bits")
    p.add_argument("--errors", type=int, default=0, help="tolerated bit errors e")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="dictionary file (default: stdout)")
    p.set_defaults(func=cmd_gen_dict)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"error: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
