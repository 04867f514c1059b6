# experiments/base.py - Base Experiment Handler Interface
"""
Base classes for experiment handlers.

A handler expands a validated configuration into grid points, computes the
CSV rows of one point at a time and runs the physics pre-checks used by
``validate``. Points must be computable independently; the executor may
ship them to worker processes.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

from ..models.experiment import ExperimentBase
from .registry import get_experiment_registry

logger = logging.getLogger(__name__)


@dataclass
class PointResult:
    """Rows and diagnostics produced by one grid point."""

    rows: List[Dict[str, Any]]
    extra_rows: List[Dict[str, Any]] = field(default_factory=list)
    truncation: Optional[Dict[str, Any]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckFinding:
    """One pre-check outcome; ``level`` is "error", "warning" or "info"."""

    level: str
    check: str
    message: str

    def to_dict(self) -> Dict[str, str]:
        return {"level": self.level, "check": self.check, "message": self.message}


class ExperimentResult:
    """Standardized experiment result."""

    def __init__(
        self,
        success: bool,
        experiment: str,
        columns: Sequence[str] = (),
        rows: Optional[List[Dict[str, Any]]] = None,
        extra_columns: Sequence[str] = (),
        extra_rows: Optional[List[Dict[str, Any]]] = None,
        metadata: Optional[Dict[str, Any]] = None,
        error: Optional[Dict[str, Any]] = None,
        wall_time_s: Optional[float] = None,
    ):
        self.success = success
        self.experiment = experiment
        self.columns = list(columns)
        self.rows = rows or []
        self.extra_columns = list(extra_columns)
        self.extra_rows = extra_rows or []
        self.metadata = metadata or {}
        self.error = error
        self.wall_time_s = wall_time_s
        self.timestamp = datetime.now(timezone.utc)

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def to_dict(self) -> Dict[str, Any]:
        """Summary for logging; rows are written separately."""
        result = {
            "success": self.success,
            "experiment": self.experiment,
            "timestamp": self.timestamp.isoformat(),
            "row_count": self.row_count,
        }
        if self.success:
            result["metadata"] = self.metadata
        else:
            result["error"] = self.error
        if self.wall_time_s is not None:
            result["wall_time_s"] = self.wall_time_s
        return result


class BaseExperiment(ABC):
    """Abstract base class for experiment handlers.

    Subclasses set ``name`` (which must match the registry) and implement
    ``run_point``; the CSV columns come from the registry definition.
    """

    name: str = ""

    def __init__(self):
        definition = get_experiment_registry().get(self.name)
        if definition is None:
            raise KeyError(f"experiment '{self.name}' is not registered")
        self.definition = definition
        self.columns: Sequence[str] = definition.columns
        self.extra_columns: Sequence[str] = definition.extra_columns
        self.logger = logging.getLogger(f"experiments.{self.name}")

    def grid(self, cfg: ExperimentBase) -> List[Dict[str, Any]]:
        """Grid points in output order; a single empty point by default."""
        return [{}]

    @abstractmethod
    def run_point(self, cfg: ExperimentBase, point: Dict[str, Any]) -> PointResult:
        """Compute the rows belonging to one grid point."""

    def checks(self, cfg: ExperimentBase) -> List[CheckFinding]:
        """Stability and model-validity pre-checks (no time evolution)."""
        return []

    def cutoffs(self, cfg: ExperimentBase) -> Dict[str, Any]:
        """Fock cutoffs recorded in the metadata sidecar."""
        return {}

    def summarize(self, cfg: ExperimentBase, rows: List[Dict[str, Any]],
                  points: List[PointResult]) -> Dict[str, Any]:
        """Experiment-level figures of merit derived from all rows."""
        return {}
