"""Command-line front end.

``sensorcollab solve --config cfg.json [--seed N] [--out DIR] [--algo ...]
[--scenario ...] [--trials N]`` runs a scenario and writes CSV, manifest, and
figure files; ``sensorcollab validate --config cfg.json`` checks the config
only.  Exit codes: 0 full success, 1 configuration error, 2 partial solver
failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .experiments import ALGORITHMS, SCENARIOS, ConfigError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorcollab",
        description="Optimal sensor collaboration under energy budgets")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a scenario from a config file")
    _config_arg(solve)
    solve.add_argument("--seed", type=int, help="override the config seed")
    solve.add_argument("--out", help="override the output directory")
    solve.add_argument("--algo", action="append", choices=ALGORITHMS,
                       help="override the algorithm set (repeatable)")
    solve.add_argument("--scenario", choices=SCENARIOS,
                       help="override the scenario")
    solve.add_argument("--trials", type=int,
                       help="override the Monte Carlo trial count")

    validate = sub.add_parser("validate", help="schema-check a config file")
    _config_arg(validate)
    return parser


def _config_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the JSON config")


def _load(args) -> experiments.ExperimentConfig:
    with open(args.config) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        doc["out"] = args.out
    if getattr(args, "algo", None):
        doc["algorithms"] = list(args.algo)
    if getattr(args, "scenario", None):
        doc["scenario"] = args.scenario
    if getattr(args, "trials", None) is not None:
        doc["trials"] = args.trials
    return experiments.ExperimentConfig.from_json_dict(doc)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _load(args)
        errors = config.validate()
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"config ok: scenario={config.scenario} "
              f"algorithms={list(config.algorithms)} grid={config.grid}")
        return 0

    result = experiments.run_scenario(config)
    print(f"wrote {result.csv_path}")
    print(f"wrote {result.manifest_path}")
    if result.figure_path is not None:
        print(f"wrote {result.figure_path}")
    for path in result.trajectory_paths:
        print(f"wrote {path}")
    failed = [row for row in result.rows if row["status"] != "ok"]
    if failed:
        for row in failed:
            print(f"warning: {row['algorithm']} at grid point "
                  f"{row['grid_value']} ended with status {row['status']}",
                  file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
