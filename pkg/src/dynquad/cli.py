"""Command-line entry point: ``dynquad <subcommand> [flags]``.

Exit status is 0 when every selected check passes, 1 when any check fails
and 2 for configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import suite

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

SUBCOMMAND_CHECKS = {
    ("verify", "quantum"): suite.GROUPS["quantum"],
    ("verify", "classical"): suite.GROUPS["classical"],
    ("calibrate-lax", None): ["calibration", "exchange"],
    ("fuse", None): ["chain"],
    ("limit-scan", None): suite.GROUPS["limit"],
    ("all", None): None,
}


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _tol(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected check=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance for {key} is not a number: {value!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or key = value file; flags override it")
    p.add_argument("--n", type=_int_list, help="comma-separated dimensions, e.g. 2,3")
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-tilde", help="'calibrate' or a number")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=_tol, action="append", default=[], metavar="CHECK=VAL")
    p.add_argument("--min-sep", type=float)
    p.add_argument("--checks", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                   help="comma-separated subset of the subcommand's checks")
    p.add_argument("--out", help="report path (JSON); omitted means stdout summary only")
    p.add_argument("--threads", type=int)
    p.add_argument("--timestamp", help="value stored in the report (default: $SOURCE_DATE_EPOCH or null)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynquad", description="Seeded numerical verification of "
                                     "dynamical quadratic exchange algebras and their classical limit.")
    sub = parser.add_subparsers(dest="command", required=True)
    verify = sub.add_parser("verify", help="quantum or classical relation checks")
    verify.add_argument("target", choices=["quantum", "classical"])
    _common(verify)
    fuse = sub.add_parser("fuse", help="exchange residual of fused chains")
    fuse.add_argument("--chain", action="append", default=[],
                      help="pair tokens 1p,1c,2p,2c (type, plain/contragredient); repeatable")
    _common(fuse)
    for name, text in (("calibrate-lax", "search the scalar Lax variants and report the table"),
                       ("limit-scan", "γ → 0 leading order and scaling slopes"),
                       ("all", "every check")):
        _common(sub.add_parser(name, help=text))
    return parser


def config_from_args(args: argparse.Namespace) -> suite.SuiteConfig:
    data = suite.load_config(args.config) if args.config else {}
    for key in ("n", "gamma", "trials", "seed", "min_sep", "out", "threads", "timestamp"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.gamma_tilde is not None:
        data["gamma_tilde"] = args.gamma_tilde
    if args.tol:
        tols = dict(data.get("tols", {}))
        tols.update(dict(args.tol))
        data["tols"] = tols

    target = getattr(args, "target", None)
    allowed = SUBCOMMAND_CHECKS[(args.command, target)]
    if args.checks is not None:
        if allowed is not None:
            outside = [c for c in args.checks if c not in allowed]
            if outside:
                raise suite.ConfigError(f"checks {outside} are not part of '{args.command}'")
        data["checks"] = args.checks
    elif allowed is not None:
        data["checks"] = list(allowed)
    if args.command == "fuse" and args.chain:
        data["chains"] = args.chain
    return suite.SuiteConfig.from_mapping(data)


def _print_summary(report: dict, out) -> None:
    for name, entry in report["summary"]["checks"].items():
        flag = "PASS" if entry["pass"] else "FAIL"
        mx = entry["max_residual"]
        mx = "-" if mx is None else f"{mx:.3e}"
        print(f"{flag}  {name:<18} records={entry['records']:<4} failed={entry['failed']:<4} max={mx}", file=out)
    if "calibration_error" in report:
        print(f"FAIL  calibration: {report['calibration_error']['message']}", file=out)
    for n, cal in report.get("calibration", {}).items():
        best = cal["best"]
        print(f"calibration n={n}: variant={best['variant']} sign={best['sign']} median={best['median']:.3e}",
              file=out)
    print("overall:", "PASS" if report["summary"]["overall_pass"] else "FAIL", file=out)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        report = suite.run_suite(cfg)
    except (suite.ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _print_summary(report, sys.stdout)
    return EXIT_PASS if report["summary"]["overall_pass"] else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
