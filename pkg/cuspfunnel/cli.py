"""
Command line entry point: cuspfunnel run <config.json>
"""

# Standard Library
import argparse
import json
import logging
import sys
from importlib import resources

# Third Party
import fastjsonschema
import yaml

# Local
from .constants import VERSION
from .exceptions import CuspFunnelError
from .reports import emit_series, write_report
from .workbench import Workbench

logger = logging.getLogger("cuspfunnel")

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2


def load_schema():
    """The config schema shipped with the package"""
    path = resources.files("cuspfunnel").joinpath("schema.yaml")
    text = path.read_text(encoding="utf-8")
    return yaml.safe_load(text)


def validate_config(config, schema=None):
    """Validate a config and its command parameters, filling in defaults"""
    schema = schema or load_schema()
    config = fastjsonschema.validate(schema["config"], config)
    config["command_params"] = fastjsonschema.validate(
        schema["commands"][config["command"]], config.get("command_params", {})
    )
    return config


def _parse_arguments(argv=None):
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        prog="cuspfunnel",
        description="Run a cusp/funnel spectral experiment from a JSON config.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    subparsers = parser.add_subparsers(dest="action", required=True)
    run = subparsers.add_parser("run", help="Run one experiment")
    run.add_argument("config", help="Path to the JSON experiment config")
    run.add_argument("--output", help="Directory for report.json and CSV series")
    run.add_argument("--seed", type=int, help="Seed for random start vectors")
    run.add_argument("--max-dim", type=int, help="Dense eigensolver dimension cap")
    run.add_argument(
        "--loglevel",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log to stderr at this level",
    )
    return parser.parse_args(argv)


def run(config_path, output=None, seed=None, max_dim=None, loglevel=None):
    """Run one config file and return the exit status"""
    try:
        with open(config_path, encoding="utf-8") as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read {config_path}: {exc}")
        return EXIT_ERROR

    # command line flags win over the file
    for key, value in (("output", output), ("seed", seed), ("max_dim", max_dim)):
        if value is not None:
            config[key] = value

    try:
        config = validate_config(config)
    except fastjsonschema.JsonSchemaException as exc:
        print(exc.message)
        if getattr(exc, "name", None):
            print(f"offending field: {exc.name}")
        return EXIT_ERROR

    try:
        workbench = Workbench.from_config(config, loglevel=loglevel)
        report = workbench.run(config["command"], config["command_params"])
    except CuspFunnelError as exc:
        print(exc)
        return EXIT_ERROR

    try:
        write_report(report, config["output"])
        emit_series(report, config["output"])
    except OSError as exc:
        logger.error("Cannot write results to %s: %s", config["output"], exc)
        print(f"cannot write to {config['output']}: {exc}")
        return EXIT_ERROR
    if not report.passed:
        failed = [name for name, v in report.verdicts.items() if not v["passed"]]
        print(f"verdicts failed: {', '.join(sorted(failed))}")
        return EXIT_VERDICT
    return EXIT_PASS


def main(argv=None):
    args = _parse_arguments(argv)
    sys.exit(run(args.config, args.output, args.seed, args.max_dim, args.loglevel))
