# optomech/services/states.py - Target State Constructors
"""
Squeezed vacua, cubic phase states, thermal states and (non-)Gaussian cluster
states on truncated Fock spaces.

Squeezing follows S(s) = exp[−(i/2)(qp + pq) ln s], so S(s)|0⟩ has
Var(q) = s²/2 and Var(p) = 1/(2s²). Every constructor reports the norm it had
to discard at the requested cutoff and refuses cutoffs that lose more than the
configured tolerance.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..core.errors import DimensionError, DomainError, ResourceError, TruncationError
from ..core.fock import (
    QState,
    StateKind,
    TensorSpace,
    matrix_exp,
    position_eigensystem,
    quadratures,
)
from .config import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterSpec:
    """Target cluster |γ, s, A⟩ = E(A) Γ(γ) S(s) |0⟩ with unit-weight CZ edges."""

    adjacency: np.ndarray
    squeezing: np.ndarray
    cubic: np.ndarray

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=float, ndmin=2)
        squeezing = np.array(self.squeezing, dtype=float).reshape(-1)
        cubic = np.array(self.cubic, dtype=float).reshape(-1)
        n = adjacency.shape[0]
        if adjacency.shape != (n, n):
            raise DimensionError(f"adjacency must be square, got shape {adjacency.shape}")
        if len(squeezing) != n or len(cubic) != n:
            raise DimensionError(
                f"squeezing ({len(squeezing)}) and cubic ({len(cubic)}) must both have length {n}"
            )
        if not np.array_equal(adjacency, adjacency.T):
            raise DomainError("adjacency must be symmetric")
        if np.any(np.diag(adjacency) != 0):
            raise DomainError("adjacency must have a zero diagonal")
        if not np.all(np.isin(adjacency, (0.0, 1.0))):
            raise DomainError("adjacency entries must be 0 or 1 (weighted graphs are not supported)")
        if np.any(squeezing <= 0) or not np.all(np.isfinite(squeezing)):
            raise DomainError("squeezing factors must be finite and > 0")
        if not np.all(np.isfinite(cubic)):
            raise DomainError("cubic coefficients must be finite")
        for name, value in (("adjacency", adjacency), ("squeezing", squeezing), ("cubic", cubic)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def num_modes(self) -> int:
        return len(self.squeezing)

    def permuted(self, order: Sequence[int]) -> "ClusterSpec":
        """Relabel modes: new mode k is old mode ``order[k]``."""
        order = list(order)
        return ClusterSpec(
            self.adjacency[np.ix_(order, order)], self.squeezing[order], self.cubic[order]
        )


def r_of_s(s: float) -> float:
    """Inverse of s(r): r = (s² − 1)/(s² + 1)."""
    if s <= 0:
        raise DomainError(f"squeezing factor must be > 0, got {s}")
    return (s * s - 1) / (s * s + 1)


def default_mechanical_cutoff(s: float, gamma: float = 0.0) -> int:
    """Heuristic cutoff max(20, ⌈10 s² + 200 γ²⌉); validate with a convergence study."""
    return max(20, math.ceil(10 * s * s + 200 * gamma * gamma))


def vacuum(cutoff: int) -> QState:
    vector = np.zeros(int(cutoff), dtype=complex)
    vector[0] = 1.0
    return QState.pure(TensorSpace((int(cutoff),)), vector)


def _squeezed_amplitudes(s: float, cutoff: int):
    """Fock amplitudes of S(s)|0⟩ below ``cutoff`` and the discarded norm."""
    t = (s * s - 1) / (s * s + 1)
    amplitudes = np.zeros(cutoff)
    amplitudes[0] = math.sqrt(2 * s / (s * s + 1))
    for n in range(2, cutoff, 2):
        amplitudes[n] = amplitudes[n - 2] * t * math.sqrt((n - 1) / n)
    loss = max(0.0, 1.0 - float(np.sum(amplitudes ** 2)))
    return amplitudes, loss


def squeezed_vacuum(s: float, cutoff: int, tol: Optional[float] = None) -> QState:
    """S(s)|0⟩ from the closed-form even-Fock expansion, renormalized.

    Raises:
        DomainError: s ≤ 0
        TruncationError: discarded norm exceeds ``tol``
    """
    tol = config.TRUNCATION_TOL if tol is None else tol
    if not s > 0 or not math.isfinite(s):
        raise DomainError(f"squeezing factor must be finite and > 0, got {s}")
    if cutoff < 1:
        raise DimensionError(f"cutoff must be positive, got {cutoff}")
    amplitudes, loss = _squeezed_amplitudes(s, int(cutoff))
    if loss > tol:
        raise TruncationError(f"squeezed vacuum s={s:g} does not fit cutoff {cutoff}", loss, tol)
    return QState.pure(TensorSpace((int(cutoff),)), amplitudes, truncation_loss=loss, normalize=True)


def cubic_phase_state(gamma: float, s: float, cutoff: int, tol: Optional[float] = None) -> QState:
    """|γ, s⟩ = e^{iγq³} S(s)|0⟩ with q³ the cube of the truncated q."""
    squeezed = squeezed_vacuum(s, cutoff, tol)
    if gamma == 0:
        return squeezed
    q, _ = quadratures(int(cutoff))
    unitary = matrix_exp(q @ q @ q, 1j * gamma)
    vector = unitary.matrix @ squeezed.data
    return QState.pure(squeezed.space, vector, truncation_loss=squeezed.truncation_loss, normalize=True)


def thermal_state(nbar: float, cutoff: int, tol: Optional[float] = None) -> QState:
    """Truncated thermal state with mean occupation ``nbar``, trace renormalized.

    Raises:
        DomainError: nbar < 0
        TruncationError: weight beyond the cutoff exceeds ``tol``
    """
    tol = config.TRUNCATION_TOL if tol is None else tol
    if not nbar >= 0 or not math.isfinite(nbar):
        raise DomainError(f"mean occupation must be finite and >= 0, got {nbar}")
    cutoff = int(cutoff)
    ratio = nbar / (1 + nbar)
    populations = (1 - ratio) * ratio ** np.arange(cutoff)
    tail = float(ratio ** cutoff)
    if tail > tol:
        raise TruncationError(f"thermal state nbar={nbar:g} does not fit cutoff {cutoff}", tail, tol)
    populations = populations / populations.sum()
    return QState(TensorSpace((cutoff,)), np.diag(populations), StateKind.MIXED, tail)


def cluster_state(
    spec: ClusterSpec,
    cutoffs: Union[int, Sequence[int]],
    tol: Optional[float] = None,
    max_dim: Optional[int] = None,
) -> QState:
    """E(A) Γ(γ) S(s)|0⟩ on the mechanical space with the given cutoffs.

    E(A) = exp(i/2 Σ A_jk q_j q_k) and Γ(γ) = exp(i Σ γ_j q_j³) are both
    diagonal in the product eigenbasis of the truncated position operators,
    so they are applied there as a single phase tensor.

    Raises:
        ResourceError: total dimension exceeds ``max_dim`` (MAX_STATE_DIM)
    """
    n = spec.num_modes
    cutoffs = [int(cutoffs)] * n if np.isscalar(cutoffs) else [int(c) for c in cutoffs]
    if len(cutoffs) != n:
        raise DimensionError(f"{len(cutoffs)} cutoffs given for a {n}-mode cluster")
    space = TensorSpace.mechanical(cutoffs)
    budget = config.MAX_STATE_DIM if max_dim is None else max_dim
    if space.dim > budget:
        raise ResourceError("cluster state too large", space.dim, budget)

    factors = [squeezed_vacuum(float(spec.squeezing[j]), cutoffs[j], tol) for j in range(n)]
    kept = math.prod(1.0 - f.truncation_loss for f in factors)

    # amplitudes in the product q-eigenbasis
    tensor = np.ones((), dtype=complex)
    nodes = []
    for j, factor in enumerate(factors):
        eigenvalues, vectors = position_eigensystem(cutoffs[j])
        nodes.append(eigenvalues)
        tensor = np.multiply.outer(tensor, vectors.T @ factor.data)

    phase = np.zeros(tuple(cutoffs))
    for j in range(n):
        shape = [1] * n
        shape[j] = cutoffs[j]
        phase = phase + spec.cubic[j] * nodes[j].reshape(shape) ** 3
        for k in range(j + 1, n):
            if spec.adjacency[j, k]:
                shape_k = [1] * n
                shape_k[k] = cutoffs[k]
                phase = phase + nodes[j].reshape(shape) * nodes[k].reshape(shape_k)
    tensor = tensor * np.exp(1j * phase)

    for j in range(n):
        _, vectors = position_eigensystem(cutoffs[j])
        tensor = np.moveaxis(np.tensordot(vectors, tensor, axes=([1], [j])), 0, j)

    logger.debug(f"cluster_state built on cutoffs {cutoffs} (kept norm {kept:.12f})")
    return QState.pure(space, tensor.reshape(-1), truncation_loss=1.0 - kept, normalize=True)
