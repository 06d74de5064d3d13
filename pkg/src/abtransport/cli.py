"""Command-line entry point: scenarios, presets and the validation report."""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import ConfigError, apply_override, load_config, read_config_file
from .dataset import DatasetError
from .presets import PRESETS
from .scenario import ScenarioError, run_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2

# subcommand -> observables it computes (None keeps those in the config)
SINGLE = {
    "steady": ["current", "occupations"],
    "sweep": None,
    "noise": ["noise"],
    "waiting": ["waiting"],
    "transient": ["transient"],
    "spectrum": ["spectrum"],
    "kappa": ["kappa"],
    "rates": ["rates"],
    "fom": ["fom"],
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="YAML scenario file")
    p.add_argument("--out", metavar="DIR", help="output directory (default: print to stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="dataset format")
    p.add_argument("--workers", type=int, metavar="N", default=None, help="worker processes (default: CPU count)")
    p.add_argument("--mode", choices=("secular", "nonsecular"), help="dissipator mode")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. system.bath.gamma=1 (repeatable)")
    p.add_argument("--detailed-balance-skew", type=float, default=None, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abtransport", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SINGLE:
        _add_common(sub.add_parser(name, help=f"compute {name}" if name != "sweep" else "run a config as given"))
    pre = sub.add_parser("preset", help="reproduce a named figure scenario")
    pre.add_argument("name", choices=sorted(PRESETS))
    _add_common(pre)
    val = sub.add_parser("validate", help="run the acceptance checks and print a report")
    val.add_argument("--only", type=int, action="append", metavar="N", help="run criterion N only (repeatable)")
    val.add_argument("--mode", choices=("secular", "nonsecular"))
    val.add_argument("--detailed-balance-skew", type=float, default=None, help=argparse.SUPPRESS)
    return parser


def _scenario_data(args) -> dict:
    if args.command == "preset":
        data = dict(PRESETS[args.name])
    elif args.config:
        data = read_config_file(args.config)
    else:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    for assignment in args.overrides:
        data = apply_override(data, assignment)
    wanted = SINGLE.get(args.command)
    if wanted is not None:
        data["observables"] = wanted
    output = dict(data.get("output") or {})
    if args.out:
        output["directory"] = args.out
    if args.format:
        output["format"] = args.format
    if output:
        data["output"] = output
    numerics = dict(data.get("numerics") or {})
    if args.mode:
        numerics["mode"] = args.mode
    if args.detailed_balance_skew is not None:
        numerics["detailed_balance_skew"] = args.detailed_balance_skew
    if numerics:
        data["numerics"] = numerics
    return data


def _print_datasets(datasets, fmt):
    for k, ds in enumerate(datasets):
        if len(datasets) > 1:
            print(f"# {ds.name}")
        sys.stdout.write(ds.to_json() if fmt == "json" else ds.to_csv().replace("\r\n", "\n"))
        if k + 1 < len(datasets):
            print()


def _run_validate(args) -> int:
    from .liouvillian import Numerics
    from .validation import run_all

    kw = {}
    if args.mode:
        kw["mode"] = args.mode
    if args.detailed_balance_skew is not None:
        kw["detailed_balance_skew"] = args.detailed_balance_skew
    results = run_all(Numerics(**kw), only=args.only)
    for res in results:
        print(res.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failing: {failed}" if failed else ""))
    return EXIT_VALIDATION if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _run_validate(args)
    try:
        config = load_config(_scenario_data(args))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.workers is not None and args.workers < 1:
        print("configuration error: --workers must be at least 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        datasets = run_scenario(config, workers=args.workers)
    except (ScenarioError, DatasetError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if config.directory:
        for ds in datasets:
            print(os.path.join(config.directory, f"{ds.name}.{config.format}"))
    else:
        _print_datasets(datasets, config.format)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
