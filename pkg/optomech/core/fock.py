# core/fock.py - Truncated Fock-Space Linear Algebra
"""
Mode operators, tensor embedding, matrix functions and quadrature
eigenfunctions on a truncated composite Fock space.

Conventions:
    * tensor ordering is cavity first, then mechanical modes in label order;
    * q = (b + b†)/√2 and p = (b − b†)/(i√2), so the vacuum has Var(q) = 1/2;
    * quadrature eigenvectors have components ⟨n|m⟩_φ = e^{inφ} ψ_n(m), which
      makes them eigenvectors of Q_φ = q cos φ + p sin φ = e^{iφn} q e^{−iφn}.

All types are immutable after construction. Matrices are stored dense; a
cached CSR view serves operator-state products.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionError, DomainError
from ..services.config import config
from ..utils.caching import cached_operator

logger = logging.getLogger(__name__)

ModeRef = Union[int, str]


@dataclass(frozen=True)
class TensorSpace:
    """Ordered list of mode cutoffs defining a truncated composite space.

    A space with zero modes has dimension 1; it is what remains after the
    last mode of a state has been measured.
    """

    cutoffs: Tuple[int, ...]
    mode_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if any(c < 1 for c in cutoffs):
            raise DimensionError(f"cutoffs must be positive integers, got {cutoffs}")
        labels = tuple(str(label) for label in self.mode_labels)
        if not labels:
            labels = tuple(f"mode{k}" for k in range(len(cutoffs)))
        if len(labels) != len(cutoffs):
            raise DimensionError(
                f"{len(labels)} mode labels given for {len(cutoffs)} modes"
            )
        if len(set(labels)) != len(labels):
            raise DimensionError(f"mode labels must be unique, got {labels}")
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "mode_labels", labels)

    @classmethod
    def optomechanical(cls, cavity_cutoff: int, mechanical_cutoffs: Sequence[int]) -> "TensorSpace":
        """Cavity (index 0) followed by mechanical modes ``mech1..mechN``."""
        mechanical_cutoffs = tuple(int(c) for c in mechanical_cutoffs)
        labels = ("cavity",) + tuple(f"mech{j + 1}" for j in range(len(mechanical_cutoffs)))
        return cls((int(cavity_cutoff),) + mechanical_cutoffs, labels)

    @classmethod
    def mechanical(cls, cutoffs: Sequence[int]) -> "TensorSpace":
        """Mechanical modes only, labelled ``mech1..mechN``."""
        cutoffs = tuple(int(c) for c in cutoffs)
        return cls(cutoffs, tuple(f"mech{j + 1}" for j in range(len(cutoffs))))

    @property
    def num_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(self.cutoffs)

    def index(self, mode: ModeRef) -> int:
        """Resolve a mode index or label to a validated index."""
        if isinstance(mode, str):
            if mode not in self.mode_labels:
                raise DimensionError(f"unknown mode label '{mode}'", labels=list(self.mode_labels))
            return self.mode_labels.index(mode)
        index = int(mode)
        if not 0 <= index < self.num_modes:
            raise DimensionError(f"mode index {mode} out of range for {self.num_modes} modes")
        return index

    def without(self, mode: ModeRef) -> "TensorSpace":
        """Space with one mode removed."""
        index = self.index(mode)
        keep = [k for k in range(self.num_modes) if k != index]
        return self.subspace(keep)

    def subspace(self, keep: Iterable[ModeRef]) -> "TensorSpace":
        """Space of the kept modes, in tensor order."""
        indices = sorted({self.index(mode) for mode in keep})
        return TensorSpace(
            tuple(self.cutoffs[k] for k in indices),
            tuple(self.mode_labels[k] for k in indices),
        )

    def compatible(self, other: "TensorSpace") -> bool:
        """Same cutoffs in the same order (labels are not compared)."""
        return self.cutoffs == other.cutoffs


def _hermiticity_defect(matrix: np.ndarray) -> float:
    """Relative Frobenius norm of the anti-Hermitian part."""
    scale = np.linalg.norm(matrix)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(matrix - matrix.conj().T) / scale)


@dataclass(frozen=True, eq=False)
class QOperator:
    """Dense complex matrix labelled by a TensorSpace (ħ = 1 units)."""

    space: TensorSpace
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.space.dim, self.space.dim):
            raise DimensionError(
                f"operator shape {matrix.shape} does not match space dimension {self.space.dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.space.dim

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        """CSR view used for operator-state products."""
        return sp.csr_matrix(self.matrix)

    def dag(self) -> "QOperator":
        return QOperator(self.space, self.matrix.conj().T)

    def _check(self, other: "QOperator") -> None:
        if not self.space.compatible(other.space):
            raise DimensionError(
                f"operator spaces differ: {self.space.cutoffs} vs {other.space.cutoffs}"
            )

    def __add__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        return QOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        return QOperator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "QOperator":
        return QOperator(self.space, -self.matrix)

    def __mul__(self, scalar: complex) -> "QOperator":
        return QOperator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "QOperator":
        return QOperator(self.space, self.matrix / complex(scalar))

    def __matmul__(self, other: "QOperator") -> "QOperator":
        self._check(other)
        return QOperator(self.space, self.matrix @ other.matrix)

    def commutator(self, other: "QOperator") -> "QOperator":
        return self @ other - other @ self

    def is_hermitian(self, tol: Optional[float] = None) -> bool:
        tol = config.HERMITICITY_TOL if tol is None else tol
        return _hermiticity_defect(self.matrix) <= tol

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.matrix))


class StateKind(str, Enum):
    """Representation of a QState."""
    PURE = "pure"
    MIXED = "mixed"


@dataclass(frozen=True, eq=False)
class QState:
    """Pure state vector or density matrix on a TensorSpace.

    Construction checks normalization (pure) or Hermiticity and unit trace
    (mixed). The O(d³) positivity check runs only in ``QState.mixed``.
    ``truncation_loss`` records norm discarded when the state was cut to the
    space's cutoffs.
    """

    space: TensorSpace
    data: np.ndarray
    kind: StateKind
    truncation_loss: float = 0.0

    def __post_init__(self):
        kind = StateKind(self.kind)
        data = np.array(self.data, dtype=complex)
        dim = self.space.dim
        if kind is StateKind.PURE:
            data = data.reshape(-1)
            if data.shape != (dim,):
                raise DimensionError(f"state vector length {data.size} does not match dimension {dim}")
            deviation = abs(np.linalg.norm(data) - 1.0)
            if deviation > config.NORM_TOL:
                raise DomainError(f"pure state not normalized (|norm - 1| = {deviation:.3e})")
        else:
            if data.shape != (dim, dim):
                raise DimensionError(f"density matrix shape {data.shape} does not match dimension {dim}")
            defect = _hermiticity_defect(data)
            if defect > config.HERMITICITY_TOL:
                raise DomainError(f"density matrix not Hermitian (relative defect {defect:.3e})")
            trace_error = abs(np.trace(data) - 1.0)
            if trace_error > config.NORM_TOL:
                raise DomainError(f"density matrix trace deviates from 1 by {trace_error:.3e}")
        data.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "truncation_loss", float(self.truncation_loss))

    @classmethod
    def pure(
        cls,
        space: TensorSpace,
        vector: np.ndarray,
        truncation_loss: float = 0.0,
        normalize: bool = False,
    ) -> "QState":
        """Build a pure state, optionally renormalizing the vector first."""
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(vector)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            vector = vector / norm
        return cls(space, vector, StateKind.PURE, truncation_loss)

    @classmethod
    def mixed(
        cls,
        space: TensorSpace,
        matrix: np.ndarray,
        truncation_loss: float = 0.0,
        eigen_tol: Optional[float] = None,
    ) -> "QState":
        """Build a density matrix and verify positivity down to ``-eigen_tol``."""
        matrix = np.asarray(matrix, dtype=complex)
        eigen_tol = config.MIXED_EIGEN_TOL if eigen_tol is None else eigen_tol
        state = cls(space, matrix, StateKind.MIXED, truncation_loss)
        min_eigenvalue = float(np.linalg.eigvalsh(state.data)[0])
        if min_eigenvalue < -eigen_tol:
            raise DomainError(
                f"density matrix has eigenvalue {min_eigenvalue:.3e} below -{eigen_tol:.1e}"
            )
        return state

    @property
    def is_pure(self) -> bool:
        return self.kind is StateKind.PURE

    @property
    def dim(self) -> int:
        return self.space.dim

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def to_mixed(self) -> "QState":
        if not self.is_pure:
            return self
        return QState(self.space, self.density_matrix(), StateKind.MIXED, self.truncation_loss)

    def tensor(self) -> np.ndarray:
        """Pure-state amplitudes reshaped to one axis per mode."""
        if not self.is_pure:
            raise DomainError("tensor() is defined for pure states only")
        return self.data.reshape(self.space.cutoffs)


def _require_cutoff(cutoff: int) -> int:
    if int(cutoff) != cutoff or cutoff < 2:
        raise DimensionError(f"cutoff must be an integer >= 2, got {cutoff}")
    return int(cutoff)


@cached_operator("fock.annihilation")
def _annihilation_matrix(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


@cached_operator("fock.quadratures")
def _quadrature_matrices(cutoff: int) -> Tuple[np.ndarray, np.ndarray]:
    b = _annihilation_matrix(cutoff)
    bd = b.conj().T
    return (b + bd) / np.sqrt(2), (b - bd) / (1j * np.sqrt(2))


@cached_operator("fock.position_eigensystem")
def position_eigensystem(cutoff: int) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and real orthogonal eigenvectors of the truncated q.

    The eigenvalues are the Gauss-Hermite nodes of order ``cutoff``; every
    function of the truncated q is diagonal in this basis.
    """
    q, _ = _quadrature_matrices(_require_cutoff(cutoff))
    return scipy.linalg.eigh(q.real)


def annihilation(cutoff: int) -> QOperator:
    """Single-mode annihilation operator with ⟨n−1|b|n⟩ = √n."""
    cutoff = _require_cutoff(cutoff)
    return QOperator(TensorSpace((cutoff,)), _annihilation_matrix(cutoff))


def number(cutoff: int) -> QOperator:
    cutoff = _require_cutoff(cutoff)
    return QOperator(TensorSpace((cutoff,)), np.diag(np.arange(cutoff, dtype=float)))


def identity(space: TensorSpace) -> QOperator:
    return QOperator(space, np.eye(space.dim))


def quadratures(cutoff: int) -> Tuple[QOperator, QOperator]:
    """Truncated position and momentum quadratures (q, p)."""
    cutoff = _require_cutoff(cutoff)
    space = TensorSpace((cutoff,))
    q, p = _quadrature_matrices(cutoff)
    return QOperator(space, q), QOperator(space, p)


def rotated_quadrature(cutoff: int, phi: float) -> QOperator:
    """Q_φ = q cos φ + p sin φ."""
    q, p = quadratures(cutoff)
    return q * np.cos(phi) + p * np.sin(phi)


def embed(op: QOperator, mode: ModeRef, space: TensorSpace) -> QOperator:
    """Lift a single-mode operator into ``space`` with identities elsewhere."""
    index = space.index(mode)
    if op.space.num_modes != 1 or op.dim != space.cutoffs[index]:
        raise DimensionError(
            f"cannot embed a {op.dim}-dimensional operator into mode {index} "
            f"with cutoff {space.cutoffs[index]}"
        )
    left = math.prod(space.cutoffs[:index])
    right = math.prod(space.cutoffs[index + 1:])
    lifted = sp.kron(sp.kron(sp.identity(left), sp.csr_matrix(op.matrix)), sp.identity(right))
    return QOperator(space, lifted.toarray())


def _exp_hermitian(matrix: np.ndarray, scale: complex) -> np.ndarray:
    hermitian = 0.5 * (matrix + matrix.conj().T)
    eigenvalues, vectors = scipy.linalg.eigh(hermitian)
    return (vectors * np.exp(scale * eigenvalues)) @ vectors.conj().T


def matrix_exp(op: QOperator, scale: complex = 1.0) -> QOperator:
    """exp(scale · op).

    Hermitian and anti-Hermitian generators go through an eigendecomposition;
    anything else uses scaling-and-squaring.
    """
    scale = complex(scale)
    if not np.all(np.isfinite(op.matrix)) or not np.isfinite(scale):
        raise DomainError("matrix_exp requires finite entries and scale")
    if _hermiticity_defect(op.matrix) <= config.HERMITICITY_TOL:
        result = _exp_hermitian(op.matrix, scale)
    elif _hermiticity_defect(1j * op.matrix) <= config.HERMITICITY_TOL:
        result = _exp_hermitian(-1j * op.matrix, 1j * scale)
    else:
        result = scipy.linalg.expm(scale * op.matrix)
    return QOperator(op.space, result)


def hermite_functions(x: Union[float, np.ndarray], cutoff: int) -> np.ndarray:
    """Hermite functions ψ_n(x) for n < cutoff, shape (cutoff, len(x)).

    ψ_0(x) = π^{-1/4} e^{-x²/2} is the vacuum wavefunction with Var(q) = 1/2;
    higher orders follow the stable three-term recurrence.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    psi = np.zeros((int(cutoff), x.size))
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x ** 2)
    if cutoff > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(1, int(cutoff) - 1):
        psi[n + 1] = (np.sqrt(2.0) * x * psi[n] - np.sqrt(n) * psi[n - 1]) / np.sqrt(n + 1)
    return psi


def quadrature_eigenvector(m: float, phi: float, cutoff: int) -> np.ndarray:
    """Fock components e^{inφ} ψ_n(m) of the improper eigenvector |m⟩_φ."""
    cutoff = _require_cutoff(cutoff)
    phases = np.exp(1j * phi * np.arange(cutoff))
    return phases * hermite_functions(m, cutoff)[:, 0]


def estimate_xmax(cutoff: int, minimum: float = 5.0) -> float:
    """Quadrature extent outside which Fock states below ``cutoff`` vanish."""
    classical_endpoint = np.sqrt(2 * cutoff)
    excess_probability = 1 / (7.464 * cutoff ** (1 / 3))
    return float(max(minimum, classical_endpoint * (1 + 5 * excess_probability)))


def estimate_dx(cutoff: int, period_resolution: int = 20) -> float:
    """Quadrature step resolving the fastest Fock wavefunction oscillation."""
    return float(2 * np.pi / np.sqrt(2 * (cutoff + 1)) / period_resolution)


def fock_state(cutoff: int, n: int) -> QState:
    if not 0 <= n < cutoff:
        raise DimensionError(f"Fock level {n} outside cutoff {cutoff}")
    vector = np.zeros(int(cutoff), dtype=complex)
    vector[n] = 1.0
    return QState.pure(TensorSpace((int(cutoff),)), vector)


def basis_state(space: TensorSpace, occupations: Sequence[int]) -> QState:
    """Product Fock state |n_0, n_1, ...⟩."""
    if len(occupations) != space.num_modes:
        raise DimensionError(f"{len(occupations)} occupations for {space.num_modes} modes")
    if any(not 0 <= n < c for n, c in zip(occupations, space.cutoffs)):
        raise DimensionError(f"occupations {tuple(occupations)} exceed cutoffs {space.cutoffs}")
    vector = np.zeros(space.dim, dtype=complex)
    vector[np.ravel_multi_index(tuple(occupations), space.cutoffs)] = 1.0
    return QState.pure(space, vector)


def tensor_states(states: Sequence[QState], space: Optional[TensorSpace] = None) -> QState:
    """Product state in tensor order; mixed if any factor is mixed."""
    cutoffs = tuple(c for state in states for c in state.space.cutoffs)
    space = space or TensorSpace(cutoffs)
    if space.cutoffs != cutoffs:
        raise DimensionError(f"target space {space.cutoffs} does not match factors {cutoffs}")
    loss = 1.0 - math.prod(1.0 - state.truncation_loss for state in states)
    if all(state.is_pure for state in states):
        vector = np.ones(1, dtype=complex)
        for state in states:
            vector = np.kron(vector, state.data)
        return QState.pure(space, vector, truncation_loss=loss, normalize=True)
    matrix = np.ones((1, 1), dtype=complex)
    for state in states:
        matrix = np.kron(matrix, state.density_matrix())
    return QState(space, matrix, StateKind.MIXED, loss)


def apply_to_mode(
    amplitudes: np.ndarray, space: TensorSpace, mode: ModeRef, matrix: np.ndarray
) -> np.ndarray:
    """Apply a single-mode matrix to a pure-state tensor without embedding it."""
    index = space.index(mode)
    tensor = np.asarray(amplitudes).reshape(space.cutoffs)
    result = np.tensordot(matrix, tensor, axes=([1], [index]))
    return np.moveaxis(result, 0, index)
