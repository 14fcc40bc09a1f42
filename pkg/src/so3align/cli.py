"""Command-line front end.

    so3align simulate (SCENARIO | --preset NAME) [--dt X] [--t-end X] [--seed N]
                      [--out PATH] [--format csv|json] [--check]
    so3align validate SCENARIO
    so3align presets

Exit codes: 0 ok, 1 a check failed, 2 bad configuration, 3 I/O error.
Log verbosity comes from ``SO3_LOG_LEVEL`` (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .export import ExportError, export
from .report import summarize
from .scenario import PRESETS, ConfigError, dump_scenario, parse_scenario, preset, with_overrides
from .sim import run

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("so3align")


def _setup_logging() -> None:
    raw = os.environ.get("SO3_LOG_LEVEL", "warn").strip().lower()
    level = LOG_LEVELS.get(raw)
    logging.basicConfig(level=level or logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.warning("SO3_LOG_LEVEL=%r not in %s; using warn", raw, "/".join(LOG_LEVELS))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc


def _load(args):
    if args.preset is not None:
        if args.scenario is not None:
            raise ConfigError("give either a scenario file or --preset, not both")
        config = preset(args.preset)
    elif args.scenario is not None:
        config = parse_scenario(_read(args.scenario))
    else:
        raise ConfigError("a scenario file or --preset is required")
    return with_overrides(config, dt=args.dt, t_end=args.t_end, seed=args.seed)


def cmd_simulate(args) -> int:
    config = _load(args)
    log.info("running %s: %d robots, dt=%g, t_end=%g, seed=%d",
             config.name, len(config.robots), config.dt, config.t_end, config.seed)
    traj = run(config)
    if args.out is not None:
        for p in export(traj, args.format, args.out):
            log.info("wrote %s", p)
    report = summarize(traj, config)
    if args.json_summary:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.format())
    if args.check and not report.passed:
        return EXIT_CHECK
    return EXIT_OK


def cmd_validate(args) -> int:
    config = parse_scenario(_read(args.scenario))
    # echo with all defaults filled in
    sys.stdout.write(dump_scenario(config))
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, (_, desc) in PRESETS.items():
        print(f"{name}\t{desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="so3align", description="Attitude alignment of 3D unicycle robots.")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and summarize it")
    sim.add_argument("scenario", nargs="?", help="scenario YAML file")
    sim.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    sim.add_argument("--dt", type=float)
    sim.add_argument("--t-end", type=float, dest="t_end")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="export the trajectory here")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--check", action="store_true", help="exit 1 if any check fails")
    sim.add_argument("--json-summary", action="store_true", help="print the summary as JSON")
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="parse a scenario and echo it with defaults")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    pre = sub.add_parser("presets", help="list built-in scenarios")
    pre.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage errors are configuration errors
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
