# optomech/services/config.py - Configuration Management
"""
Centralized numerical and runtime configuration for the simulator.

Values come from environment variables prefixed with ``OPTOMECH_`` (a ``.env``
file in the working directory is honoured). Every tolerance a library function
accepts as an optional argument falls back to the global ``config`` instance.
"""

import os
from dataclasses import dataclass
from pathlib import Path
import logging

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

_DEFAULT_PRESETS_DIR = str(Path(__file__).resolve().parents[2] / "presets")
_VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class SimulatorConfig:
    """Configuration for simulator components."""

    # Runtime
    WORKERS: int = 1
    LOG_LEVEL: str = "INFO"
    PRESETS_DIR: str = _DEFAULT_PRESETS_DIR

    # State invariants
    TRUNCATION_TOL: float = 1e-6
    HERMITICITY_TOL: float = 1e-12
    NORM_TOL: float = 1e-9
    MIXED_EIGEN_TOL: float = 1e-9

    # Memory budgets (Hilbert-space dimension)
    MAX_STATE_DIM: int = 250_000
    MAX_DENSITY_DIM: int = 4000
    DIRECT_SOLVER_MAX_DIM: int = 64

    # Time integration
    RK4_STEP_FACTOR: float = 0.01
    RK4_STEPS_PER_PERIOD: int = 20
    ADAPTIVE_TOL: float = 1e-8
    MIN_STEP: float = 1e-9
    POSITIVITY_TOL: float = 1e-6
    POSITIVITY_CHECK_MAX_DIM: int = 600
    TRACE_WARN_TOL: float = 1e-6
    TRACE_ABORT_TOL: float = 1e-4

    # Steady state
    STEADY_RHS_TOL: float = 1e-8
    STEADY_MONITOR_TOL: float = 1e-9
    # integrator step tolerance as a fraction of the residual threshold
    STEADY_STEP_TOL_RATIO: float = 1e-4
    STEADY_MAX_TIME: float = 5000.0
    STEADY_CHECK_INTERVAL: float = 5.0

    # Classical drive linearization
    FIXED_POINT_DAMPING: float = 0.5
    FIXED_POINT_MAX_ITER: int = 10_000
    FIXED_POINT_TOL: float = 1e-10

    # Model checks
    RWA_MARGIN: float = 0.1

    # Protocols (total switching time in units of 1/beta)
    PROTOCOL_TOTAL_TIME: float = 20.0

    # Homodyne measurement
    HOMODYNE_GRID_POINTS: int = 1001
    HOMODYNE_GRID_WIDTH: float = 8.0
    HOMODYNE_TAIL_TOL: float = 1e-4
    HOMODYNE_UNDERFLOW: float = 1e-12
    HOMODYNE_MAX_ABS: float = 50.0

    # Analysis
    WIGNER_POINTS: int = 201
    WIGNER_EXTENT: float = 6.0
    TAIL_CONVERGENCE_TOL: float = 1e-4

    def __post_init__(self):
        """Validate configuration values after initialization."""
        self._validate_runtime()
        self._validate_tolerances()
        self._validate_budgets()
        self._validate_integration()
        self._validate_measurement()

        logger.debug("SimulatorConfig initialized and validated")

    def _validate_runtime(self):
        """Validate runtime settings."""
        if self.WORKERS <= 0:
            raise ValueError("WORKERS must be positive")
        if self.LOG_LEVEL.upper() not in _VALID_LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {', '.join(_VALID_LOG_LEVELS)}")

    def _validate_tolerances(self):
        """Validate tolerance settings."""
        for name in (
            "TRUNCATION_TOL", "HERMITICITY_TOL", "NORM_TOL", "MIXED_EIGEN_TOL",
            "ADAPTIVE_TOL", "POSITIVITY_TOL", "TRACE_WARN_TOL", "TRACE_ABORT_TOL",
            "STEADY_RHS_TOL", "STEADY_MONITOR_TOL", "STEADY_STEP_TOL_RATIO", "FIXED_POINT_TOL",
            "HOMODYNE_TAIL_TOL", "HOMODYNE_UNDERFLOW", "TAIL_CONVERGENCE_TOL",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.TRACE_WARN_TOL > self.TRACE_ABORT_TOL:
            raise ValueError("TRACE_WARN_TOL cannot be greater than TRACE_ABORT_TOL")
        if not 0 < self.FIXED_POINT_DAMPING <= 1:
            raise ValueError("FIXED_POINT_DAMPING must lie in (0, 1]")
        if self.RWA_MARGIN <= 0:
            raise ValueError("RWA_MARGIN must be positive")

    def _validate_budgets(self):
        """Validate memory budgets."""
        if self.MAX_STATE_DIM <= 0 or self.MAX_DENSITY_DIM <= 0:
            raise ValueError("state dimension budgets must be positive")
        if self.DIRECT_SOLVER_MAX_DIM <= 0:
            raise ValueError("DIRECT_SOLVER_MAX_DIM must be positive")
        if self.POSITIVITY_CHECK_MAX_DIM < 0:
            raise ValueError("POSITIVITY_CHECK_MAX_DIM must be non-negative")

    def _validate_integration(self):
        """Validate integrator and steady-state settings."""
        if self.RK4_STEP_FACTOR <= 0:
            raise ValueError("RK4_STEP_FACTOR must be positive")
        if self.RK4_STEPS_PER_PERIOD < 1:
            raise ValueError("RK4_STEPS_PER_PERIOD must be at least 1")
        if self.MIN_STEP <= 0:
            raise ValueError("MIN_STEP must be positive")
        if self.STEADY_MAX_TIME <= 0 or self.STEADY_CHECK_INTERVAL <= 0:
            raise ValueError("steady-state time budget and check interval must be positive")
        if self.STEADY_CHECK_INTERVAL > self.STEADY_MAX_TIME:
            raise ValueError("STEADY_CHECK_INTERVAL cannot be greater than STEADY_MAX_TIME")
        if self.FIXED_POINT_MAX_ITER <= 0:
            raise ValueError("FIXED_POINT_MAX_ITER must be positive")
        if self.PROTOCOL_TOTAL_TIME <= 0:
            raise ValueError("PROTOCOL_TOTAL_TIME must be positive")

    def _validate_measurement(self):
        """Validate homodyne and Wigner grid settings."""
        if self.HOMODYNE_GRID_POINTS < 3:
            raise ValueError("HOMODYNE_GRID_POINTS must be at least 3")
        if self.HOMODYNE_GRID_WIDTH < 6:
            raise ValueError("HOMODYNE_GRID_WIDTH must cover at least 6 standard deviations")
        if self.HOMODYNE_MAX_ABS <= 0:
            raise ValueError("HOMODYNE_MAX_ABS must be positive")
        if self.WIGNER_POINTS < 3 or self.WIGNER_EXTENT <= 0:
            raise ValueError("Wigner grid needs at least 3 points and a positive extent")

    @classmethod
    def from_env(cls) -> 'SimulatorConfig':
        """Create configuration from environment variables.

        Returns:
            SimulatorConfig instance with values from environment
        """
        load_dotenv()

        def env(name: str, default: str) -> str:
            return os.getenv(f"OPTOMECH_{name}", default)

        return cls(
            WORKERS=int(env("WORKERS", "1")),
            LOG_LEVEL=env("LOG_LEVEL", "INFO").upper(),
            PRESETS_DIR=env("PRESETS_DIR", _DEFAULT_PRESETS_DIR),
            TRUNCATION_TOL=float(env("TRUNCATION_TOL", "1e-6")),
            MAX_STATE_DIM=int(env("MAX_STATE_DIM", "250000")),
            MAX_DENSITY_DIM=int(env("MAX_DENSITY_DIM", "4000")),
            DIRECT_SOLVER_MAX_DIM=int(env("DIRECT_SOLVER_MAX_DIM", "64")),
            RK4_STEP_FACTOR=float(env("RK4_STEP_FACTOR", "0.01")),
            ADAPTIVE_TOL=float(env("ADAPTIVE_TOL", "1e-8")),
            POSITIVITY_CHECK_MAX_DIM=int(env("POSITIVITY_CHECK_MAX_DIM", "600")),
            STEADY_RHS_TOL=float(env("STEADY_RHS_TOL", "1e-8")),
            STEADY_STEP_TOL_RATIO=float(env("STEADY_STEP_TOL_RATIO", "1e-4")),
            STEADY_MAX_TIME=float(env("STEADY_MAX_TIME", "5000")),
            STEADY_CHECK_INTERVAL=float(env("STEADY_CHECK_INTERVAL", "5")),
            RWA_MARGIN=float(env("RWA_MARGIN", "0.1")),
            PROTOCOL_TOTAL_TIME=float(env("PROTOCOL_TOTAL_TIME", "20")),
            HOMODYNE_GRID_POINTS=int(env("HOMODYNE_GRID_POINTS", "1001")),
            WIGNER_POINTS=int(env("WIGNER_POINTS", "201")),
        )


# Global configuration instance
config = SimulatorConfig.from_env()
