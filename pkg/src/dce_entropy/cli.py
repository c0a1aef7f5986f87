"""Command-line interface.

Subcommands map one-to-one onto pipelines:

    dce-entropy sweep-entropy   --config cfg.json --out results
    dce-entropy crosscheck      --config cfg.json --out results
    dce-entropy resonance       --config cfg.json --out results
    dce-entropy gaussian        --config cfg.json --out results
    dce-entropy field-oracle    --config cfg.json --out results
    dce-entropy validate-config --config cfg.json

Every subcommand accepts --out <dir>, --threads <n>, --tol <x>, and
--plot; --config is optional (defaults apply).  Any config field can also
be overridden through DCE_-prefixed environment variables (see config
module).  Exit codes: 0 success, 2 configuration error, 3 regime
violation, 4 numerical failure, 5 crosscheck failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .cavity import ConfigurationError
from .config import ScenarioConfig, apply_env_overrides, load_config
from .fieldmodes import ExtractionError, OscillatoryStiffnessError
from .fock import IntegrationError, NumericalValidityError
from .gaussian import InvalidCovarianceError, TailBoundError
from .perturbative import RegimeError
from .resonance import StiffnessError
from .runner import CrosscheckError, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_NUMERICAL = 4
EXIT_CROSSCHECK = 5

_SUBCOMMAND_PIPELINE = {
    "sweep-entropy": "short-time",
    "crosscheck": "crosscheck",
    "resonance": "resonance",
    "gaussian": "gaussian",
    "field-oracle": "field-oracle",
    "fock-oracle": "fock-oracle",
}

_NUMERICAL_ERRORS = (IntegrationError, NumericalValidityError, StiffnessError,
                     OscillatoryStiffnessError, ExtractionError,
                     InvalidCovarianceError, TailBoundError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dce-entropy",
        description="Entropy production of a cavity field with an "
                    "oscillating mirror.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = list(_SUBCOMMAND_PIPELINE) + ["validate-config"]
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (defaults apply "
                                        "when omitted)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker pool size (default: available cores)")
        p.add_argument("--tol", type=float, default=None,
                       help="integration tolerance override")
        if name != "validate-config":
            p.add_argument("--plot", action="store_true",
                           help="also render a matplotlib PNG next to the CSV")
    return parser


def _resolve_config(args) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    pipeline = _SUBCOMMAND_PIPELINE.get(args.command)
    if pipeline is not None:
        overrides["pipeline"] = pipeline
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.out is not None:
        overrides["output_path"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return apply_env_overrides(config.validate())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "validate-config":
            print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
            return EXIT_OK
        report = run_scenario(config, config.output_path)
        if getattr(args, "plot", False):
            from .plotting import render_report
            render_report(report, config.output_path)
        print(f"{config.pipeline}: {len(report.records)} records -> "
              f"{config.output_path} ({report.wall_time_s:.2f} s)")
        for key, value in sorted(report.diagnostics.items()):
            print(f"  {key}: {value}")
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except CrosscheckError as exc:
        print(f"crosscheck failure: {exc}", file=sys.stderr)
        return EXIT_CROSSCHECK
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
