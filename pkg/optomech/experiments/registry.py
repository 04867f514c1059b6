# experiments/registry.py - Centralized Experiment Registry
"""
Registry of the available experiments with their CSV schemas.
Separates experiment definitions from handler implementations.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Sequence


class ExperimentCategory(str, Enum):
    """Experiment categories for organization."""
    STEADY_STATE = "steady_state"
    PROTOCOL = "protocol"
    MODEL_CHECK = "model_check"


class ExperimentDefinition:
    """Structured experiment definition with its output schema."""

    def __init__(
        self,
        name: str,
        description: str,
        category: ExperimentCategory,
        columns: Sequence[str],
        extra_columns: Sequence[str] = (),
    ):
        self.name = name
        self.description = description
        self.category = category
        self.columns = tuple(columns)
        self.extra_columns = tuple(extra_columns)

    def to_dict(self) -> Dict[str, Any]:
        result = {
            "name": self.name,
            "description": self.description,
            "category": self.category.value,
            "columns": list(self.columns),
        }
        if self.extra_columns:
            result["sample_columns"] = list(self.extra_columns)
        return result


class ExperimentRegistry:
    """Central registry for all experiments."""

    def __init__(self):
        self._experiments: Dict[str, ExperimentDefinition] = {}
        self._register_default_experiments()

    def _register_default_experiments(self) -> None:
        """Register all default experiments."""

        # Steady-state experiments
        self.register(ExperimentDefinition(
            name="cubic-steady",
            description="Steady state of the cubic drive recipe per mechanical cutoff and initial occupation",
            category=ExperimentCategory.STEADY_STATE,
            columns=("mechanical_cutoff", "initial_nbar", "fidelity", "purity", "tail_population"),
        ))
        self.register(ExperimentDefinition(
            name="cubic-noise-sweep",
            description="Cubic-state steady-state fidelity over a (bath occupation, damping) grid",
            category=ExperimentCategory.STEADY_STATE,
            columns=("nbar", "gamma_m", "fidelity"),
        ))

        # Protocols
        self.register(ExperimentDefinition(
            name="two-node-cluster",
            description="Fidelity against time during switching preparation of a cluster state",
            category=ExperimentCategory.PROTOCOL,
            columns=("time", "step", "fidelity"),
        ))
        self.register(ExperimentDefinition(
            name="cubic-gate",
            description="Measurement-based cubic phase gate fidelity averaged over homodyne outcomes",
            category=ExperimentCategory.PROTOCOL,
            columns=("nbar", "gamma_m", "average_fidelity", "std_fidelity", "n_samples"),
            extra_columns=("nbar", "gamma_m", "sample", "outcome", "density", "fidelity"),
        ))

        # Model checks
        self.register(ExperimentDefinition(
            name="rwa-check",
            description="Evolution with and without counter-rotating terms",
            category=ExperimentCategory.MODEL_CHECK,
            columns=("time", "fidelity_rwa", "fidelity_full"),
        ))
        self.register(ExperimentDefinition(
            name="stability-scan",
            description="Drift-matrix stability over the ratio and relative phase of g2 and g1",
            category=ExperimentCategory.MODEL_CHECK,
            columns=("g2_over_g1", "phase", "rh_margin", "stable_rh", "stable_eig", "max_real_eigenvalue"),
        ))

    def register(self, experiment: ExperimentDefinition) -> None:
        self._experiments[experiment.name] = experiment

    def get(self, name: str) -> Optional[ExperimentDefinition]:
        """Get an experiment definition by name, or None."""
        return self._experiments.get(name)

    def get_all(self) -> List[ExperimentDefinition]:
        return list(self._experiments.values())

    def get_by_category(self, category: ExperimentCategory) -> List[ExperimentDefinition]:
        return [e for e in self._experiments.values() if e.category == category]


# Global registry instance
_registry: Optional[ExperimentRegistry] = None


def get_experiment_registry() -> ExperimentRegistry:
    """Get the global experiment registry instance.

    Returns:
        ExperimentRegistry singleton
    """
    global _registry
    if _registry is None:
        _registry = ExperimentRegistry()
    return _registry
