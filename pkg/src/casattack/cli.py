"""Command-line entry point: ``casattack run|replay|classify|metrics|validate``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 objective not reached on any repetition (results are still written).
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import sys

from .errors import CasAttackError, ConfigError, NotInCatalogError
from .metrics import classify
from .scenario import (OUTPUT_ENV, aggregate, dump_json, load_config, load_result,
                       run_experiment, run_repetition)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_OBJECTIVE = 0, 1, 2, 3


def _config_error(exc: ConfigError) -> int:
    where = []
    if exc.line is not None:
        where.append(f"line {exc.line}, column {exc.column}")
    if exc.field:
        where.append(f"field {exc.field}")
    suffix = f" ({'; '.join(where)})" if where else ""
    print(f"config error: {exc}{suffix}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg.output = args.output
    if args.workers:
        cfg.workers = args.workers
    result = run_experiment(cfg)
    agg = result.aggregates
    print(f"{cfg.kind}: {agg['successes']}/{agg['repetitions']} repetitions reached the objective"
          f" -> {cfg.output_dir}")
    if agg["repetitions"] and agg["failures"] == agg["repetitions"]:
        return EXIT_RUNTIME
    return EXIT_OK if agg["successes"] else EXIT_OBJECTIVE


def cmd_replay(args) -> int:
    result = load_result(args.result)
    if not 0 <= args.rep < len(result.reports):
        print(f"repetition {args.rep} not in result (0..{len(result.reports) - 1})",
              file=sys.stderr)
        return EXIT_CONFIG
    stored = dump_json(result.reports[args.rep]).splitlines()
    fresh = dump_json(run_repetition(result.config, args.rep)).splitlines()
    diff = list(difflib.unified_diff(stored, fresh, "stored", "replayed", lineterm=""))
    if diff:
        print("\n".join(diff))
        return EXIT_RUNTIME
    print(f"repetition {args.rep} reproduced exactly")
    return EXIT_OK


def cmd_classify(args) -> int:
    try:
        row = classify(args.name)
    except NotInCatalogError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(row.to_dict(), indent=1))
    return EXIT_OK


def cmd_metrics(args) -> int:
    result = load_result(args.result)
    agg = aggregate(result.config.kind, result.reports)
    shown = {k: agg.get(k) for k in ("successes", "repetitions", "cost_unit",
                                     "vulnerability", "resilience")}
    print(json.dumps(shown, indent=1))
    return EXIT_OK if agg["successes"] else EXIT_OBJECTIVE


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg.kind}, {cfg.repetitions} repetitions, seed {cfg.seed}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="casattack",
        description="Simulate reinforcement-learning attacks on complex adaptive systems.",
        epilog=f"Relative output directories are placed under ${OUTPUT_ENV} when it is set.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment")
    run.add_argument("config")
    run.add_argument("--output", help="override output.directory")
    run.add_argument("--workers", type=int, help="process pool size")
    run.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-run one repetition and diff it with the stored one")
    rp.add_argument("result", help="result.json or the directory holding it")
    rp.add_argument("--rep", type=int, required=True)
    rp.set_defaults(func=cmd_replay)

    cl = sub.add_parser("classify", help="look up an attack in the classification catalog")
    cl.add_argument("name", nargs="+")
    cl.set_defaults(func=cmd_classify)

    me = sub.add_parser("metrics", help="print vulnerability and resilience of a result")
    me.add_argument("result")
    me.set_defaults(func=cmd_metrics)

    va = sub.add_parser("validate", help="check a scenario file without running it")
    va.add_argument("config")
    va.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "classify":
        args.name = " ".join(args.name)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _config_error(exc)
    except (CasAttackError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
