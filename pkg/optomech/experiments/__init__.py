# experiments/__init__.py
"""Config-driven experiment handlers, registry and executor."""

from .base import BaseExperiment, CheckFinding, ExperimentResult, PointResult
from .registry import (
    ExperimentCategory,
    ExperimentDefinition,
    ExperimentRegistry,
    get_experiment_registry,
)
from .executor import (
    ExperimentExecutor,
    ValidationReport,
    execute_experiment,
    output_paths,
    write_outputs,
)
from .steady_state_experiments import CubicNoiseSweepExperiment, CubicSteadyExperiment
from .model_check_experiments import RwaCheckExperiment, StabilityScanExperiment
from .protocol_experiments import CubicGateExperiment, TwoNodeClusterExperiment

__all__ = [
    # Base classes
    'BaseExperiment',
    'CheckFinding',
    'ExperimentResult',
    'PointResult',

    # Registry
    'ExperimentCategory',
    'ExperimentDefinition',
    'ExperimentRegistry',
    'get_experiment_registry',

    # Executor
    'ExperimentExecutor',
    'ValidationReport',
    'execute_experiment',
    'output_paths',
    'write_outputs',

    # Handlers
    'CubicSteadyExperiment',
    'CubicNoiseSweepExperiment',
    'RwaCheckExperiment',
    'StabilityScanExperiment',
    'CubicGateExperiment',
    'TwoNodeClusterExperiment',
]
