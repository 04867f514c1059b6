# core/performance_monitoring.py - Solver Timing and Counters
"""
Wall-time tracking for solver operations and simple counters for integrator
work (accepted and rejected steps, Liouvillian applications).

``monitored_operation`` yields the live OperationMetrics so callers can put
the measured wall time into result metadata.
"""

import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class OperationMetrics:
    """Metrics for a single operation."""
    operation_name: str
    start_time: float
    end_time: Optional[float] = None
    duration_s: Optional[float] = None
    success: bool = True
    error_message: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def complete(self, success: bool = True, error_message: Optional[str] = None):
        """Mark operation as complete."""
        self.end_time = time.perf_counter()
        self.duration_s = self.end_time - self.start_time
        self.success = success
        self.error_message = error_message

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for logging."""
        return {
            "operation_name": self.operation_name,
            "duration_s": self.duration_s,
            "success": self.success,
            "error_message": self.error_message,
            "metadata": self.metadata,
        }


class MetricsCollector:
    """Collects completed operation metrics for the current process."""

    def __init__(self, history: int = 1000):
        self.operations: List[OperationMetrics] = []
        self.history = history
        self._lock = threading.Lock()

    def start_operation(self, operation_name: str, metadata: Optional[Dict[str, Any]] = None) -> OperationMetrics:
        logger.debug(f"Started operation {operation_name}")
        return OperationMetrics(operation_name, time.perf_counter(), metadata=dict(metadata or {}))

    def end_operation(self, metrics: OperationMetrics, success: bool = True,
                      error_message: Optional[str] = None) -> OperationMetrics:
        """Complete ``metrics``, record it and log the duration."""
        metrics.complete(success, error_message)
        with self._lock:
            self.operations.append(metrics)
            if len(self.operations) > self.history:
                del self.operations[: len(self.operations) - self.history]

        level = logging.DEBUG if success else logging.ERROR
        message = f"Operation {metrics.operation_name} completed in {metrics.duration_s:.3f}s"
        if not success:
            message += f" with error: {error_message}"
        logger.log(level, message, extra={"metrics": metrics.to_dict()})
        return metrics

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Per-operation counts and durations."""
        with self._lock:
            operations = list(self.operations)
        if not operations:
            return {"total_operations": 0, "operation_stats": {}}

        operation_stats: Dict[str, Dict[str, Any]] = {}
        for op in operations:
            stats = operation_stats.setdefault(
                op.operation_name, {"count": 0, "failed": 0, "total_duration_s": 0.0}
            )
            stats["count"] += 1
            stats["failed"] += 0 if op.success else 1
            stats["total_duration_s"] += op.duration_s or 0.0
        for stats in operation_stats.values():
            stats["avg_duration_s"] = stats["total_duration_s"] / stats["count"]

        failed = sum(1 for op in operations if not op.success)
        return {
            "total_operations": len(operations),
            "failed_operations": failed,
            "operation_stats": operation_stats,
        }

    def reset(self):
        with self._lock:
            self.operations.clear()


# Global metrics collector instance
metrics_collector = MetricsCollector()


@contextmanager
def monitored_operation(operation_name: str, metadata: Optional[Dict[str, Any]] = None) -> Iterator[OperationMetrics]:
    """Context manager timing a block and recording the outcome.

    Args:
        operation_name: Name of the operation
        metadata: Additional metadata about the operation
    """
    metrics = metrics_collector.start_operation(operation_name, metadata)
    try:
        yield metrics
    except Exception as e:
        metrics_collector.end_operation(metrics, success=False, error_message=str(e))
        raise
    metrics_collector.end_operation(metrics, success=True)


class PerformanceCounters:
    """Named integer counters (integrator steps, rejected steps, RHS calls)."""

    def __init__(self):
        self.counters: Dict[str, int] = {}
        self._lock = threading.Lock()

    def increment(self, counter_name: str, amount: int = 1):
        with self._lock:
            self.counters[counter_name] = self.counters.get(counter_name, 0) + amount

    def get_counter(self, counter_name: str) -> int:
        return self.counters.get(counter_name, 0)

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return dict(self.counters)

    def reset(self):
        with self._lock:
            self.counters.clear()


# Global performance counters instance
performance_counters = PerformanceCounters()
