# experiments/executor.py - Experiment Executor
"""
Dispatches validated configurations to experiment handlers, fans grid points
out over a process pool and writes the CSV table plus its JSON sidecar.

Workers receive only the JSON dump of the configuration and rebuild their
own handler; results come back in grid order, so the written CSV does not
depend on the worker count.
"""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, Union

import numpy as np

from .. import __version__
from ..core.errors import (
    ConfigError,
    ErrorCode,
    ExitCode,
    InstabilityError,
    SimulationError,
    numerical_guard,
)
from ..core.performance_monitoring import metrics_collector, monitored_operation, performance_counters
from ..models.experiment import ExperimentBase, config_to_dict, parse_config
from ..services.config import config
from ..utils.caching import get_operator_cache
from .base import BaseExperiment, CheckFinding, ExperimentResult, PointResult
from .model_check_experiments import RwaCheckExperiment, StabilityScanExperiment
from .protocol_experiments import CubicGateExperiment, TwoNodeClusterExperiment
from .registry import get_experiment_registry
from .steady_state_experiments import CubicNoiseSweepExperiment, CubicSteadyExperiment

logger = logging.getLogger(__name__)

HANDLER_TYPES: Dict[str, Type[BaseExperiment]] = {
    "cubic-steady": CubicSteadyExperiment,
    "cubic-noise-sweep": CubicNoiseSweepExperiment,
    "two-node-cluster": TwoNodeClusterExperiment,
    "rwa-check": RwaCheckExperiment,
    "cubic-gate": CubicGateExperiment,
    "stability-scan": StabilityScanExperiment,
}


@dataclass
class ValidationReport:
    """Outcome of ``validate``: schema errors and physics pre-check findings."""

    valid: bool
    experiment: Optional[str] = None
    errors: List[str] = field(default_factory=list)
    findings: List[CheckFinding] = field(default_factory=list)

    @property
    def warnings(self) -> List[CheckFinding]:
        return [f for f in self.findings if f.level == "warning"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "experiment": self.experiment,
            "errors": list(self.errors),
            "findings": [f.to_dict() for f in self.findings],
        }


def _run_point_worker(payload: Tuple[str, Dict[str, Any], Dict[str, Any]]) -> Tuple[str, Any]:
    """Process-pool entry point; errors travel back as dictionaries."""
    name, data, point = payload
    cfg = parse_config(data)
    handler = HANDLER_TYPES[name]()
    try:
        with numerical_guard(f"{name} at {point}"):
            return "ok", handler.run_point(cfg, point)
    except SimulationError as e:
        return "error", {"error": e.to_dict(), "exit_code": int(e.exit_code)}


def _raise_point_failure(name: str, point: Dict[str, Any], failure: Dict[str, Any]) -> None:
    error = failure["error"]
    raise SimulationError(
        message=f"{name} failed at grid point {point}: {error['message']}",
        error_code=ErrorCode(error["error_code"]),
        exit_code=ExitCode(failure["exit_code"]),
        detail=error.get("detail"),
    )


class ExperimentExecutor:
    """Runs experiments through registered handlers."""

    def __init__(self, workers: Optional[int] = None):
        """Initialize the executor.

        Args:
            workers: Worker processes for grid points (config.WORKERS when unset)
        """
        self.workers = max(1, int(workers or config.WORKERS))
        self.registry = get_experiment_registry()

        self._handlers: Dict[str, BaseExperiment] = {}
        self._register_handlers()

        logger.info(f"ExperimentExecutor initialized with {len(self._handlers)} handlers, {self.workers} workers")

    def _register_handlers(self) -> None:
        for name, handler_type in HANDLER_TYPES.items():
            self._handlers[name] = handler_type()

    def get_handler(self, name: str) -> BaseExperiment:
        handler = self._handlers.get(name)
        if handler is None:
            raise ConfigError(f"Unknown experiment: {name}", [f"experiment: unknown value '{name}'"])
        return handler

    def validate(self, cfg: ExperimentBase) -> ValidationReport:
        """Physics pre-checks of an already parsed configuration."""
        handler = self.get_handler(cfg.experiment)
        findings = handler.checks(cfg)
        valid = not any(f.level == "error" for f in findings)
        for finding in findings:
            level = {"error": logging.ERROR, "warning": logging.WARNING}.get(finding.level, logging.INFO)
            logger.log(level, f"{cfg.experiment} {finding.check}: {finding.message}")
        return ValidationReport(valid, cfg.experiment, findings=findings)

    def _preflight(self, cfg: ExperimentBase) -> None:
        report = self.validate(cfg)
        errors = [f for f in report.findings if f.level == "error"]
        if not errors:
            return
        messages = [f"{f.check}: {f.message}" for f in errors]
        if any(f.check == "stability" for f in errors):
            raise InstabilityError(f"{cfg.experiment} configuration is unstable", detail="; ".join(messages))
        raise ConfigError(f"{cfg.experiment} configuration failed pre-checks", messages)

    def _run_points(self, handler: BaseExperiment, cfg: ExperimentBase,
                    points: List[Dict[str, Any]]) -> List[PointResult]:
        workers = min(self.workers, len(points))
        if workers <= 1:
            results = []
            for point in points:
                with numerical_guard(f"{handler.name} at {point}"):
                    results.append(handler.run_point(cfg, point))
            return results

        data = config_to_dict(cfg)
        payloads = [(handler.name, data, point) for point in points]
        logger.info(f"Running {len(points)} grid points on {workers} worker processes")
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for point, (status, value) in zip(points, pool.map(_run_point_worker, payloads)):
                if status != "ok":
                    _raise_point_failure(handler.name, point, value)
                results.append(value)
        return results

    def run(self, cfg: ExperimentBase) -> ExperimentResult:
        """Execute every grid point of ``cfg`` and assemble the result.

        Raises:
            SimulationError: pre-check or numerical failure (exit code attached)
        """
        handler = self.get_handler(cfg.experiment)
        self._preflight(cfg)
        points = handler.grid(cfg)
        logger.info(f"Executing {cfg.experiment} over {len(points)} grid points")

        metrics_collector.reset()
        performance_counters.reset()
        with monitored_operation(f"experiment.{cfg.experiment}", {"points": len(points)}) as metrics:
            results = self._run_points(handler, cfg, points)
        rows = [row for result in results for row in result.rows]
        extra_rows = [row for result in results for row in result.extra_rows]

        reports = [result.truncation for result in results if result.truncation is not None]
        truncation = None
        if reports:
            truncation = {
                "max_tail": max(max(r["tails"].values(), default=0.0) for r in reports),
                "converged": all(r["converged"] for r in reports),
                "points": reports,
            }
        metadata = {
            "experiment": cfg.experiment,
            "config_hash": cfg.config_hash(),
            "config": config_to_dict(cfg),
            "columns": list(handler.columns),
            "row_count": len(rows),
            "grid_points": len(points),
            "cutoffs": handler.cutoffs(cfg),
            "truncation": truncation,
            "wall_time_s": metrics.duration_s,
            "version": __version__,
            "seed": cfg.seed,
            "workers": min(self.workers, len(points)),
            "summary": handler.summarize(cfg, rows, results),
        }
        # pool workers keep their own counters and caches; only in-process points are counted
        metadata["diagnostics"] = {
            "counters": performance_counters.snapshot(),
            "operations": metrics_collector.get_metrics_summary(),
            "operator_cache": get_operator_cache().get_stats(),
        }
        if extra_rows:
            metadata["sample_columns"] = list(handler.extra_columns)
            metadata["sample_count"] = len(extra_rows)

        result = ExperimentResult(
            success=True,
            experiment=cfg.experiment,
            columns=handler.columns,
            rows=rows,
            extra_columns=handler.extra_columns,
            extra_rows=extra_rows,
            metadata=metadata,
            wall_time_s=metrics.duration_s,
        )
        logger.info(f"{cfg.experiment} completed: {len(rows)} rows in {metrics.duration_s:.2f}s")
        return result


def format_value(value: Any) -> str:
    """CSV cell text; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, columns: List[str], rows: List[Dict[str, Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[column]) for column in columns])


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def output_paths(output: Union[str, Path]) -> Dict[str, Path]:
    """CSV path plus the sidecar and sample-table paths derived from it."""
    csv_path = Path(output)
    if csv_path.suffix != ".csv":
        csv_path = csv_path.with_name(csv_path.name + ".csv")
    return {
        "csv": csv_path,
        "metadata": csv_path.with_suffix(".json"),
        "samples": csv_path.with_name(f"{csv_path.stem}_samples.csv"),
    }


def write_outputs(result: ExperimentResult, output: Union[str, Path]) -> Dict[str, Path]:
    """Write the CSV table, the optional sample table and the JSON sidecar."""
    paths = output_paths(output)
    paths["csv"].parent.mkdir(parents=True, exist_ok=True)
    write_csv(paths["csv"], result.columns, result.rows)
    written = {"csv": paths["csv"]}
    if result.extra_rows:
        write_csv(paths["samples"], result.extra_columns, result.extra_rows)
        written["samples"] = paths["samples"]
    with open(paths["metadata"], "w", encoding="utf-8") as handle:
        json.dump(result.metadata, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    written["metadata"] = paths["metadata"]
    logger.info(f"Wrote {result.row_count} rows to {paths['csv']}")
    return written


def execute_experiment(cfg: ExperimentBase, output: Union[str, Path],
                       workers: Optional[int] = None) -> ExperimentResult:
    """Run ``cfg`` with a fresh executor and write its outputs."""
    result = ExperimentExecutor(workers).run(cfg)
    write_outputs(result, output)
    return result
