# optomech/main.py - Command-Line Entry Point
"""
Command-line runner for optomechanical experiments.

    python -m optomech.main run <config|preset> [--output PATH] [--workers N] [--verbose]
    python -m optomech.main validate <config|preset>
    python -m optomech.main presets list

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from . import __version__
from .core.errors import ConfigError, ExitCode, SimulationError
from .experiments.executor import ExperimentExecutor, ValidationReport, write_outputs
from .experiments.registry import ExperimentCategory, get_experiment_registry
from .models.experiment import ExperimentBase, load_config
from .services.config import config

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )


def resolve_config_path(reference: str) -> Path:
    """A file path, or the name of a preset in PRESETS_DIR.

    Raises:
        ConfigError: neither a readable file nor a known preset
    """
    path = Path(reference)
    if path.is_file():
        return path
    preset = Path(config.PRESETS_DIR) / f"{reference}.yaml"
    if preset.is_file():
        return preset
    raise ConfigError(
        f"cannot read {reference}",
        [f"<file>: no such file and no preset named '{reference}' in {config.PRESETS_DIR}"],
    )


def load_reference(reference: str) -> ExperimentBase:
    return load_config(resolve_config_path(reference))


def list_presets() -> List[dict]:
    """Name, experiment and description of every preset file."""
    presets = []
    for path in sorted(Path(config.PRESETS_DIR).glob("*.yaml")):
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            logger.warning(f"Skipping unreadable preset {path.name}: {e}")
            continue
        presets.append({
            "name": path.stem,
            "experiment": data.get("experiment", "?"),
            "description": data.get("description", ""),
        })
    return presets


def grouped_presets() -> Dict[str, List[dict]]:
    """Presets keyed by the category of their experiment; unknown experiments go last."""
    registry = get_experiment_registry()
    presets = list_presets()
    groups: Dict[str, List[dict]] = {}
    for category in ExperimentCategory:
        names = {definition.name for definition in registry.get_by_category(category)}
        members = [p for p in presets if p["experiment"] in names]
        if members:
            groups[category.value] = members
    known = {definition.name for definition in registry.get_all()}
    unregistered = [p for p in presets if p["experiment"] not in known]
    if unregistered:
        groups["unregistered"] = unregistered
    return groups


def print_report(report: ValidationReport) -> None:
    print(f"experiment: {report.experiment or '?'}")
    print(f"valid: {'true' if report.valid else 'false'}")
    for error in report.errors:
        print(f"  error: {error}")
    for finding in report.findings:
        print(f"  [{finding.level}] {finding.check}: {finding.message}")


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        cfg = load_reference(args.config)
    except ConfigError as e:
        print_report(ValidationReport(False, errors=e.errors or [e.message]))
        return int(ExitCode.CONFIG_ERROR)
    report = ExperimentExecutor(workers=1).validate(cfg)
    print_report(report)
    return int(ExitCode.SUCCESS if report.valid else ExitCode.CONFIG_ERROR)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_reference(args.config)
    except ConfigError as e:
        print_report(ValidationReport(False, errors=e.errors or [e.message]))
        return int(e.exit_code)

    output = args.output or cfg.output or f"{Path(args.config).stem}.csv"
    try:
        result = ExperimentExecutor(workers=args.workers).run(cfg)
        written = write_outputs(result, output)
    except SimulationError as e:
        print(f"error: {e.error_code.value}: {e.message}", file=sys.stderr)
        return int(e.exit_code)
    except Exception as e:
        logger.exception(f"Unexpected failure running {args.config}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return int(ExitCode.NUMERICAL_FAILURE)

    for kind, path in written.items():
        print(f"{kind}: {path}")
    return int(ExitCode.SUCCESS)


def cmd_presets(args: argparse.Namespace) -> int:
    for category, presets in grouped_presets().items():
        print(f"{category}:")
        for preset in presets:
            print(f"  {preset['name']:<22} {preset['experiment']:<18} {preset['description']}")
    return int(ExitCode.SUCCESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optomech", description="Optomechanical cluster-state simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment file or preset")
    run.add_argument("config", help="YAML experiment file or preset name")
    run.add_argument("--output", default=None, help="CSV output path (sidecar JSON written next to it)")
    run.add_argument("--workers", type=int, default=None, help="Worker processes (OPTOMECH_WORKERS)")
    run.add_argument("--verbose", action="store_true", help="Debug logging")
    run.set_defaults(handler=cmd_run)

    validate = sub.add_parser("validate", help="Validate an experiment without running it")
    validate.add_argument("config", help="YAML experiment file or preset name")
    validate.add_argument("--verbose", action="store_true", help="Debug logging")
    validate.set_defaults(handler=cmd_validate)

    presets = sub.add_parser("presets", help="Preset experiment files")
    presets.add_argument("action", choices=["list"])
    presets.add_argument("--verbose", action="store_true", help="Debug logging")
    presets.set_defaults(handler=cmd_presets)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return int(ExitCode.CONFIG_ERROR)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
