# optomech/services/analysis.py - State Diagnostics
"""
Fidelities against pure targets, Wigner functions, squeezing in dB and
truncation diagnostics.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from ..core.errors import DimensionError, DomainError, UnsupportedOperationError
from ..core.fock import ModeRef, QState, estimate_dx, estimate_xmax, hermite_functions
from .config import config

logger = logging.getLogger(__name__)


def fidelity_pure_target(target: QState, state: QState) -> float:
    """Uhlmann fidelity √⟨ψ|ρ|ψ⟩ of ``state`` with the pure ``target``.

    Raises:
        UnsupportedOperationError: mixed target
        DimensionError: spaces differ
    """
    if not target.is_pure:
        raise UnsupportedOperationError("fidelity against a mixed target is not supported")
    if not target.space.compatible(state.space):
        raise DimensionError(
            f"target lives on {target.space.cutoffs}, state on {state.space.cutoffs}"
        )
    psi = target.data
    if state.is_pure:
        return float(abs(np.vdot(psi, state.data)))
    overlap = float(np.real(np.vdot(psi, state.data @ psi)))
    return math.sqrt(max(overlap, 0.0))


def squeezing_db(s: float) -> float:
    """10·log₁₀(s²)."""
    if not s > 0:
        raise DomainError(f"squeezing factor must be > 0, got {s}")
    return 10 * math.log10(s * s)


def purity(state: QState) -> float:
    if state.is_pure:
        return 1.0
    return float(np.real(np.einsum("ij,ji->", state.data, state.data)))


def _populations(state: QState) -> np.ndarray:
    if state.is_pure:
        diagonal = np.abs(state.data) ** 2
    else:
        diagonal = np.real(np.diag(state.data))
    return diagonal.reshape(state.space.cutoffs)


def mode_populations(state: QState, mode: ModeRef) -> np.ndarray:
    """Fock-level occupation probabilities of one mode."""
    index = state.space.index(mode)
    populations = _populations(state)
    others = tuple(k for k in range(state.space.num_modes) if k != index)
    return populations.sum(axis=others) if others else populations


def mean_occupation(state: QState, mode: ModeRef = 0) -> float:
    populations = mode_populations(state, mode)
    return float(np.dot(np.arange(populations.size), populations))


@dataclass(frozen=True)
class TruncationReport:
    """Population of the top two Fock levels of every mode."""

    tails: Dict[str, float]
    threshold: float
    truncation_loss: float = 0.0

    @property
    def converged(self) -> bool:
        return all(tail < self.threshold for tail in self.tails.values())

    @property
    def max_tail(self) -> float:
        return max(self.tails.values(), default=0.0)

    def to_dict(self) -> Dict[str, object]:
        return {
            "tails": dict(self.tails),
            "threshold": self.threshold,
            "converged": self.converged,
            "truncation_loss": self.truncation_loss,
        }


def truncation_report(state: QState, threshold: Optional[float] = None) -> TruncationReport:
    threshold = config.TAIL_CONVERGENCE_TOL if threshold is None else threshold
    tails = {}
    for label in state.space.mode_labels:
        populations = mode_populations(state, label)
        tails[label] = float(np.sum(populations[-2:]))
    report = TruncationReport(tails, threshold, state.truncation_loss)
    if not report.converged:
        logger.warning(f"Fock tails above {threshold:.0e}: {report.tails}")
    return report


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner function sampled on a rectangular grid, ``values[q_index, p_index]``."""

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(trapezoid(trapezoid(self.values, self.p_axis, axis=1), self.q_axis))

    def position_marginal(self) -> np.ndarray:
        """∫W dp at every grid q."""
        return trapezoid(self.values, self.p_axis, axis=1)

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))


def wigner(
    state: QState,
    q_axis: Optional[np.ndarray] = None,
    p_axis: Optional[np.ndarray] = None,
    points: Optional[int] = None,
    extent: Optional[float] = None,
) -> WignerGrid:
    """Single-mode Wigner function W(q, p) = (1/π) ∫dy ⟨q+y|ρ|q−y⟩ e^{−2ipy}.

    The kernel ⟨q+y|ρ|q−y⟩ is evaluated from the Hermite-function series of
    ρ; y spans the quadrature extent of the cutoff.
    """
    if state.space.num_modes != 1:
        raise DimensionError(f"wigner needs a single-mode state, got {state.space.num_modes} modes")
    points = config.WIGNER_POINTS if points is None else points
    extent = config.WIGNER_EXTENT if extent is None else extent
    q_axis = np.linspace(-extent, extent, points) if q_axis is None else np.asarray(q_axis, dtype=float)
    p_axis = np.linspace(-extent, extent, points) if p_axis is None else np.asarray(p_axis, dtype=float)

    cutoff = state.space.cutoffs[0]
    rho = state.density_matrix()
    p_max = float(np.max(np.abs(p_axis), initial=1.0))
    y_max = estimate_xmax(cutoff)
    dy = min(estimate_dx(cutoff), math.pi / (2 * p_max) / 10)
    y = np.arange(-y_max, y_max + dy / 2, dy)
    fourier = np.exp(-2j * np.outer(y, p_axis)) * dy / math.pi

    values = np.empty((q_axis.size, p_axis.size))
    for i, q in enumerate(q_axis):
        left = hermite_functions(q + y, cutoff)
        right = hermite_functions(q - y, cutoff)
        kernel = np.sum((left.T @ rho) * right.T, axis=1)
        values[i] = np.real(kernel @ fourier)

    grid = WignerGrid(q_axis, p_axis, values)
    integral = grid.integral()
    if abs(integral - 1.0) > 0.02:
        logger.warning(f"Wigner grid covers only {integral:.4f} of the state; widen the grid")
    return grid


def wigner_negativity(grid: WignerGrid) -> float:
    """Integrated negative volume ∫(|W| − W)/2."""
    negative = 0.5 * (np.abs(grid.values) - grid.values)
    return float(trapezoid(trapezoid(negative, grid.p_axis, axis=1), grid.q_axis))


@dataclass(frozen=True)
class ConvergenceStudy:
    """Values of a figure of merit at increasing cutoffs."""

    cutoffs: List[int]
    values: List[float]
    threshold: float
    deltas: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(self.deltas) and self.deltas[-1] < self.threshold

    def to_dict(self) -> Dict[str, object]:
        return {
            "cutoffs": list(self.cutoffs),
            "values": list(self.values),
            "deltas": list(self.deltas),
            "threshold": self.threshold,
            "converged": self.converged,
        }


def convergence_study(
    evaluate: Callable[[int], float],
    cutoffs: Sequence[int],
    threshold: float = 1e-3,
) -> ConvergenceStudy:
    """Evaluate at every cutoff; converged when the last change is below ``threshold``."""
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) < 2:
        raise DomainError("a convergence study needs at least two cutoffs")
    values = [float(evaluate(c)) for c in cutoffs]
    deltas = [abs(b - a) for a, b in zip(values, values[1:])]
    for cutoff, value in zip(cutoffs, values):
        logger.info(f"convergence_study: cutoff {cutoff} -> {value:.10f}")
    return ConvergenceStudy(cutoffs, values, threshold, deltas)
