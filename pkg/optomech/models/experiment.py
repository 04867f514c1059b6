# models/experiment.py - Experiment Configuration Models with Validation
"""
Pydantic models for experiment files. One experiment per file; the
``experiment`` field selects the schema and unknown keys are rejected.
Sweeps are declared as explicit axis lists.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from ..core.errors import ConfigError

logger = logging.getLogger(__name__)

SolverMethod = Literal["auto", "direct", "integrate"]


class ExperimentBase(BaseModel):
    """Fields shared by every experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    description: Optional[str] = Field(default=None, max_length=500, description="Free-text note")
    output: Optional[str] = Field(default=None, description="CSV output path")
    seed: int = Field(default=0, ge=0, description="Root seed for every random draw")
    truncation_tol: Optional[float] = Field(
        default=None, gt=0, lt=1,
        description="Truncation tolerance for initial and target states (config default when unset)",
    )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """sha256 of the canonical JSON dump."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


class CubicDriveFields(BaseModel):
    """Single-oscillator cubic drive recipe g2 = −r g1, g3 = g4 = g5 ∝ γ(1 + r) g1."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    g1: float = Field(default=1.0, gt=0, description="Red-sideband coupling, the unit of rates")
    r: float = Field(..., ge=0, description="Ratio −g2/g1; a stable steady state needs r < 1")
    gamma: float = Field(..., description="Cubicity γ of the target state")
    kappa: float = Field(..., gt=0, description="Cavity decay rate")
    cavity_cutoff: int = Field(default=4, ge=2, le=20)
    method: SolverMethod = "auto"
    max_time: Optional[float] = Field(default=None, gt=0, description="Integration budget of the steady-state search")


class CubicSteadyConfig(ExperimentBase, CubicDriveFields):
    """Steady state of the cubic drive recipe at several mechanical cutoffs and initial occupations."""

    experiment: Literal["cubic-steady"]
    mechanical_cutoffs: List[int] = Field(..., min_length=1)
    initial_nbar: List[float] = Field(default_factory=lambda: [0.0], min_length=1)

    @field_validator("mechanical_cutoffs")
    @classmethod
    def cutoffs_valid(cls, v):
        if any(c < 2 for c in v):
            raise ValueError("mechanical cutoffs must be >= 2")
        return v

    @field_validator("initial_nbar")
    @classmethod
    def occupations_valid(cls, v):
        if any(n < 0 for n in v):
            raise ValueError("initial occupations must be >= 0")
        return v


class CubicNoiseSweepConfig(ExperimentBase, CubicDriveFields):
    """Steady-state fidelity over an (n̄, Γ_m) grid; nbar is the outer axis."""

    experiment: Literal["cubic-noise-sweep"]
    mechanical_cutoff: int = Field(..., ge=2)
    nbar: List[float] = Field(..., min_length=1)
    gamma_m: List[float] = Field(..., min_length=1, description="Mechanical damping rates")

    @field_validator("nbar", "gamma_m")
    @classmethod
    def axis_non_negative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("sweep values must be >= 0")
        return v


class TwoNodeClusterConfig(ExperimentBase):
    """Switching preparation of a cluster (two nodes by default) tracked in time."""

    experiment: Literal["two-node-cluster"]
    beta: float = Field(default=1.0, gt=0)
    kappa: float = Field(..., gt=0)
    squeezing: List[float] = Field(..., min_length=1, max_length=4)
    cubic: List[float] = Field(..., min_length=1, max_length=4)
    adjacency: Optional[List[List[int]]] = Field(default=None, description="Defaults to one edge between two nodes")
    nbar: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    gamma_m: float = Field(default=0.0, ge=0)
    initial: Literal["vacuum", "thermal"] = "vacuum"
    precool: bool = False
    step_duration: Optional[float] = Field(default=None, gt=0)
    cooling_duration: Optional[float] = Field(default=None, gt=0)
    cavity_cutoff: int = Field(default=3, ge=2, le=20)
    mechanical_cutoffs: List[int] = Field(..., min_length=1, max_length=4)
    sample_interval: float = Field(default=0.5, gt=0)

    @model_validator(mode="after")
    def shapes_match(self):
        n = len(self.squeezing)
        adjacency = self.adjacency or [[0, 1], [1, 0]]
        for name, value in (("cubic", self.cubic), ("nbar", self.nbar),
                            ("mechanical_cutoffs", self.mechanical_cutoffs), ("adjacency", adjacency)):
            if len(value) != n:
                raise ValueError(f"{name} has {len(value)} entries, squeezing has {n}")
        if any(len(row) != n for row in adjacency):
            raise ValueError("adjacency must be square")
        if any(s <= 0 for s in self.squeezing):
            raise ValueError("squeezing factors must be > 0")
        if any(x < 0 for x in self.nbar):
            raise ValueError("nbar must be >= 0")
        return self

    def adjacency_matrix(self) -> List[List[int]]:
        return self.adjacency or [[0, 1], [1, 0]]


class RwaCheckConfig(ExperimentBase, CubicDriveFields):
    """RWA against full-Hamiltonian evolution for one oscillator; rates in units of Ω."""

    experiment: Literal["rwa-check"]
    Omega: float = Field(default=1.0, gt=0)
    R: float = Field(..., gt=0, description="G_L/G_Q")
    mechanical_cutoff: int = Field(..., ge=2)
    duration: float = Field(..., gt=0)
    sample_interval: float = Field(..., gt=0)


class CubicGateConfig(ExperimentBase):
    """Measurement-based cubic phase gate averaged over sampled outcomes."""

    experiment: Literal["cubic-gate"]
    input_s: float = Field(..., gt=0)
    output_s: Optional[float] = Field(default=None, gt=0)
    gamma: float
    n_samples: int = Field(default=200, ge=1)
    mechanical_cutoffs: List[int] = Field(..., min_length=2, max_length=2)
    preparation: Literal["direct", "switching"] = "direct"
    nbar: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    gamma_m: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    beta: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=10.0, gt=0)
    cavity_cutoff: int = Field(default=3, ge=2, le=20)
    precool: bool = False

    @model_validator(mode="after")
    def noise_needs_switching(self):
        if any(x < 0 for x in self.nbar + self.gamma_m):
            raise ValueError("nbar and gamma_m must be >= 0")
        noisy = any(self.nbar) or any(self.gamma_m)
        if self.preparation == "direct" and (noisy or self.precool):
            raise ValueError("noise and pre-cooling need preparation: switching")
        return self


class StabilityScanConfig(ExperimentBase):
    """Drift-matrix stability over |g2|/|g1| and the relative phase of g2."""

    experiment: Literal["stability-scan"]
    g1: float = Field(default=1.0, gt=0)
    kappa: float = Field(..., gt=0)
    Gamma: float = Field(default=0.0, ge=0)
    g2_over_g1: List[float] = Field(..., min_length=1)
    phases: List[float] = Field(default_factory=lambda: [0.0], min_length=1)

    @field_validator("g2_over_g1")
    @classmethod
    def ratios_non_negative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("ratios must be >= 0")
        return v


ExperimentConfig = Annotated[
    Union[
        CubicSteadyConfig,
        CubicNoiseSweepConfig,
        TwoNodeClusterConfig,
        RwaCheckConfig,
        CubicGateConfig,
        StabilityScanConfig,
    ],
    Field(discriminator="experiment"),
]

_adapter = TypeAdapter(ExperimentConfig)

EXPERIMENT_NAMES = (
    "cubic-steady", "cubic-noise-sweep", "two-node-cluster", "rwa-check", "cubic-gate", "stability-scan",
)


def _format_errors(error: ValidationError) -> List[str]:
    """One line per failing field, ``a.b.c: message``."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return lines


def parse_config(data: Any) -> ExperimentBase:
    """Validate a mapping against the experiment schemas.

    Raises:
        ConfigError: with one entry per failing field
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("experiment file must contain a mapping", [f"<root>: got {type(data).__name__}"])
    if "experiment" not in data:
        raise ConfigError(
            "experiment type missing",
            [f"experiment: field required (one of {', '.join(EXPERIMENT_NAMES)})"],
        )
    try:
        return _adapter.validate_python(data)
    except ValidationError as e:
        raise ConfigError(f"invalid '{data.get('experiment')}' configuration", _format_errors(e)) from e


def load_config(path: Union[str, Path]) -> ExperimentBase:
    """Read and validate a YAML experiment file.

    Raises:
        ConfigError: unreadable file, malformed YAML or schema violations
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}", [f"<file>: {e}"]) from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML in {path}", [f"<file>: {e}"]) from e
    logger.debug(f"Loaded experiment file {path}")
    return parse_config(data)


def config_to_dict(config: ExperimentBase) -> Dict[str, Any]:
    return config.model_dump(mode="json")
