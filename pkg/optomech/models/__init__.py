# models/__init__.py
"""Pydantic models for experiment files."""

from .experiment import (
    EXPERIMENT_NAMES,
    CubicGateConfig,
    CubicNoiseSweepConfig,
    CubicSteadyConfig,
    ExperimentBase,
    ExperimentConfig,
    RwaCheckConfig,
    StabilityScanConfig,
    TwoNodeClusterConfig,
    config_to_dict,
    load_config,
    parse_config,
)

__all__ = [
    'EXPERIMENT_NAMES',
    'ExperimentBase',
    'ExperimentConfig',
    'CubicSteadyConfig',
    'CubicNoiseSweepConfig',
    'TwoNodeClusterConfig',
    'RwaCheckConfig',
    'CubicGateConfig',
    'StabilityScanConfig',
    'config_to_dict',
    'load_config',
    'parse_config',
]
