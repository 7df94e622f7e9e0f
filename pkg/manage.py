#!/usr/bin/env python
import argparse
import sys

from volterra_lab.config import configure_logging
from volterra_lab.runner import EXIT_CONFIG, EXIT_PASS, run_path, validate


def run_experiment(args: argparse.Namespace) -> int:
    """
    Run one experiment config and write its CSVs and manifest.json.
    """
    return run_path(args.config, out_dir=args.out, seed=args.seed, replicas=args.replicas)


def validate_config(args: argparse.Namespace) -> int:
    """
    Check a config against the schema and its invariants without running it.
    """
    findings = validate(args.config)
    if not findings:
        print(f"{args.config}: ok")
        return EXIT_PASS

    for line in findings:
        print(line)
    return EXIT_CONFIG


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Volterra process regularity experiments"
    )
    parser.add_argument(
        "--log-level",
        help="Override VOLTERRA_LOG_LEVEL, e.g. 'DEBUG'",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run subcommand
    run_parser = subparsers.add_parser(
        "run",
        help="Run the experiment described by a JSON config",
    )
    run_parser.add_argument("config", help="Path to the experiment config (JSON)")
    run_parser.add_argument(
        "--out",
        help="Output directory (overrides out_dir in the config)",
    )
    run_parser.add_argument(
        "--seed",
        type=int,
        help="Master seed (overrides seed in the config)",
    )
    run_parser.add_argument(
        "--replicas",
        type=int,
        help="Replica count (overrides replicas in the config)",
    )

    # validate subcommand
    validate_parser = subparsers.add_parser(
        "validate",
        help="Report schema and invariant findings without running",
    )
    validate_parser.add_argument("config", help="Path to the experiment config (JSON)")

    args = parser.parse_args()
    configure_logging(args.log_level)

    if args.command == "run":
        exit_code = run_experiment(args)
    elif args.command == "validate":
        exit_code = validate_config(args)
    else:
        parser.print_help()
        exit_code = 1

    sys.exit(exit_code)


if __name__ == "__main__":
    main()
