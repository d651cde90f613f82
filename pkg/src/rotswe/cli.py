"""Command line entry point.

    rotswe run CONFIG [--out DIR] [--seed INT]
    rotswe study --n 4,8,16,32 CONFIG [--out DIR] [--seed INT]
    rotswe check

Exit codes: 0 pass, 1 failed check, 2 configuration error, 3 blow-up.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .checks import run_checks
from .config import ConfigError, load_config
from .experiment import EXIT_BLOWUP, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, convergence_study, run_scenario


def _n_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotswe", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the config)")

    sub.add_parser("run", parents=[common], help="run the configured scenario")
    st = sub.add_parser("study", parents=[common], help="Friedrichs convergence study")
    st.add_argument("--n", type=_n_list, required=True, help="ascending indices, e.g. 4,8,16,32")
    sub.add_parser("check", help="run the built-in property suite")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "check":
        return EXIT_OK if run_checks() else EXIT_FAIL

    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        if args.command == "study":
            rows, result = convergence_study(cfg, args.n)
            for r in rows:
                print(f"n={r.n_a:>4d} -> {r.n_b:>4d}  distance={r.distance:.6e}  {r.status}")
        else:
            result = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for name, ok in result.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if result.status == "blowup":
        print(f"blow-up: {result.details.get('blowup', '')}", file=sys.stderr)
    print(f"outputs in {result.out_dir}")
    code = result.exit_code
    assert code in (EXIT_OK, EXIT_FAIL, EXIT_BLOWUP)
    return code


if __name__ == "__main__":
    sys.exit(main())
