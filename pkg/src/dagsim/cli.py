"""Command-line entry point: ``dagsim {budget,game,growth,walk,reproduce}``.

Exit codes: 0 success, 2 configuration error, 3 a run completed but its
threshold check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import SCENARIOS, ConfigError, parse_config
from .ledger import atomic_write_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _scenario_config(args):
    if args.config is not None:
        raw = _read_json(args.config)
    elif args.command == "budget" and None not in (args.alpha, args.throughput, args.delay, args.verify_time):
        raw = {"scenario": "budget", "budget": {"alpha": args.alpha, "throughput": args.throughput,
                                                "delay": args.delay, "verify_time": args.verify_time}}
    else:
        raise ConfigError("--config is required" + (" (or all four budget flags)" if args.command == "budget" else ""))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("scenario") != args.command:
        raise ConfigError(f"config scenario {raw.get('scenario')!r} does not match subcommand {args.command!r}")
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
    return parse_config(raw)


def cmd_scenario(args) -> int:
    from .experiments import run_experiment

    config = _scenario_config(args)
    result = run_experiment(config, out=args.out)
    print(json.dumps({"scenario": result.scenario, "passed": result.passed, "summary": result.summary},
                     sort_keys=True))
    return EXIT_OK if result.passed else EXIT_THRESHOLD


def cmd_reproduce(args) -> int:
    from .criteria import reproduce_all

    seeds = _read_json(args.seeds) if args.seeds else None

    def progress(cid, res):
        print(f"{cid} {'PASS' if res.passed else 'FAIL'} {res.key}", file=sys.stderr, flush=True)

    report = reproduce_all(args.suite, seeds, rerun=not args.no_rerun, progress=progress)
    if args.out is not None:
        out = Path(args.out)
        atomic_write_text(out / "report.jsonl", report.dumps())
        atomic_write_text(out / "report.txt", report.table())
    sys.stdout.write(report.table())
    return EXIT_OK if report.passed else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagsim", description="DAG ledger simulation lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: the config's output field)")
        if name == "budget":
            for flag in ("alpha", "throughput", "delay", "verify-time"):
                p.add_argument(f"--{flag}", help="exact number such as 1/10 (used without --config)")
        p.set_defaults(func=cmd_scenario)
    p = sub.add_parser("reproduce", help="run the acceptance battery")
    p.add_argument("--suite", choices=["fast", "full"], default="fast")
    p.add_argument("--seeds", help="JSON mapping of criterion name to seed (default: pinned seeds)")
    p.add_argument("--out", help="directory for report.jsonl and report.txt")
    p.add_argument("--no-rerun", action="store_true", help="skip the determinism re-run")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
