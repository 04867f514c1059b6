# optomech/services/hamiltonians.py - Optomechanical Model
"""
Hamiltonian builders for the linearized multi-tone optomechanical system,
the drive-linearization map, stability analysis and RWA-validity checks.

Mode convention: index 0 of every TensorSpace is the cavity ``a``, indices
1..N are the mechanical oscillators ``b_j``. In the rotating frame the
interaction reads

    H = a† Σ_j (g1 b_j + g2 b_j† + g3 b_j² + g4 b_j†² + g5 {b_j, b_j†}) + H.c.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..core.errors import ConvergenceError, DimensionError, DomainError, InstabilityError
from ..core.fock import QOperator, TensorSpace, annihilation, embed, rotated_quadrature
from .config import config

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

COUPLING_NAMES = ("g1", "g2", "g3", "g4", "g5")


@dataclass(frozen=True, eq=False)
class DriveSet:
    """Per-mode complex couplings g1..g5, shape (N, 5)."""

    couplings: np.ndarray

    def __post_init__(self):
        couplings = np.array(self.couplings, dtype=complex, ndmin=2)
        if couplings.ndim != 2 or couplings.shape[1] != 5:
            raise DimensionError(f"couplings must have shape (N, 5), got {couplings.shape}")
        if not np.all(np.isfinite(couplings)):
            raise DomainError("drive couplings must be finite")
        couplings.setflags(write=False)
        object.__setattr__(self, "couplings", couplings)

    @classmethod
    def single(cls, g1: complex = 0, g2: complex = 0, g3: complex = 0,
               g4: complex = 0, g5: complex = 0) -> "DriveSet":
        """DriveSet for one mechanical mode."""
        return cls([[g1, g2, g3, g4, g5]])

    @classmethod
    def zeros(cls, n_modes: int) -> "DriveSet":
        return cls(np.zeros((n_modes, 5), dtype=complex))

    @property
    def num_modes(self) -> int:
        return self.couplings.shape[0]

    @property
    def g1(self) -> np.ndarray:
        return self.couplings[:, 0]

    @property
    def g2(self) -> np.ndarray:
        return self.couplings[:, 1]

    @property
    def g3(self) -> np.ndarray:
        return self.couplings[:, 2]

    @property
    def g4(self) -> np.ndarray:
        return self.couplings[:, 3]

    @property
    def g5(self) -> np.ndarray:
        return self.couplings[:, 4]

    def scaled(self, factor: complex) -> "DriveSet":
        return DriveSet(self.couplings * factor)


def _as_modes(value: ArrayLike, n: int, name: str) -> np.ndarray:
    array = np.array(value, dtype=float).reshape(-1)
    if array.size == 1:
        array = np.full(n, float(array[0]))
    if array.size != n:
        raise DimensionError(f"{name} has {array.size} entries for {n} mechanical modes")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PhysicalParams:
    """Bare system parameters (rates in rad/time, occupations dimensionless).

    Scalars are broadcast to every mechanical mode; the mode count is taken
    from ``Omega``.
    """

    kappa: float
    Omega: np.ndarray
    Gamma_m: np.ndarray = 0.0
    nbar: np.ndarray = 0.0
    G_L: np.ndarray = 0.0
    G_Q: np.ndarray = 0.0

    def __post_init__(self):
        omega = np.array(self.Omega, dtype=float).reshape(-1)
        n = omega.size
        object.__setattr__(self, "Omega", _as_modes(omega, n, "Omega"))
        for name in ("Gamma_m", "nbar", "G_L", "G_Q"):
            object.__setattr__(self, name, _as_modes(getattr(self, name), n, name))
        if not self.kappa > 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa}")
        if np.any(self.Omega <= 0):
            raise DomainError("mechanical frequencies must be > 0")
        if np.any(self.Gamma_m < 0) or np.any(self.nbar < 0):
            raise DomainError("Gamma_m and nbar must be >= 0")

    @classmethod
    def uniform(cls, n_modes: int, kappa: float, Omega: float = 1.0, Gamma_m: float = 0.0,
                nbar: ArrayLike = 0.0, G_L: float = 0.0, G_Q: float = 0.0) -> "PhysicalParams":
        """Same parameters for every oscillator (``nbar`` may still be per-mode)."""
        return cls(kappa=kappa, Omega=np.full(n_modes, Omega), Gamma_m=Gamma_m,
                   nbar=nbar, G_L=G_L, G_Q=G_Q)

    @property
    def num_modes(self) -> int:
        return self.Omega.size

    @property
    def R(self) -> np.ndarray:
        """G_L/G_Q per mode, NaN where either coupling vanishes."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where((self.G_L != 0) & (self.G_Q != 0), self.G_L / self.G_Q, np.nan)
        return ratio


@dataclass(frozen=True)
class StabilityReport:
    """Linear-stability analysis of the single-oscillator fluctuation dynamics."""

    drift: np.ndarray
    eigen_real_parts: np.ndarray
    rh_margin: float
    stable_rh: bool
    stable_eig: bool

    @property
    def max_real_eigenvalue(self) -> float:
        return float(np.max(self.eigen_real_parts))


@dataclass(frozen=True)
class RwaValidityReport:
    """Largest drive-enhanced coupling relative to Ω and the verdict."""

    ratio: float
    margin: float
    passed: bool
    dominant_term: str


@dataclass(frozen=True)
class ClassicalSteadyState:
    """Self-consistent classical displacements of the driven system."""

    Q0: np.ndarray
    alpha: np.ndarray
    iterations: int
    residual: float


def _mechanical_block(cutoff: int, couplings: np.ndarray) -> np.ndarray:
    b = annihilation(cutoff).matrix
    bd = b.conj().T
    g1, g2, g3, g4, g5 = couplings
    return g1 * b + g2 * bd + g3 * (b @ b) + g4 * (bd @ bd) + g5 * (b @ bd + bd @ b)


def _check_space(drives: DriveSet, space: TensorSpace) -> TensorSpace:
    if space.num_modes != drives.num_modes + 1:
        raise DimensionError(
            f"space has {space.num_modes} modes, expected cavity + {drives.num_modes} mechanical"
        )
    return space.subspace(range(1, space.num_modes))


def rwa_hamiltonian(drives: DriveSet, space: TensorSpace) -> QOperator:
    """H = a† Σ_j L_j + H.c. with L_j = g1 b + g2 b† + g3 b² + g4 b†² + g5 {b, b†}."""
    mechanical = _check_space(drives, space)
    jump = np.zeros((mechanical.dim, mechanical.dim), dtype=complex)
    for j in range(drives.num_modes):
        if not np.any(drives.couplings[j]):
            continue
        block = QOperator(TensorSpace((mechanical.cutoffs[j],)),
                          _mechanical_block(mechanical.cutoffs[j], drives.couplings[j]))
        jump += embed(block, j, mechanical).matrix
    a_dag = annihilation(space.cutoffs[0]).matrix.conj().T
    coupling = sp.kron(sp.csr_matrix(a_dag), sp.csr_matrix(jump)).toarray()
    return QOperator(space, coupling + coupling.conj().T)


def s_of_r(r: float) -> float:
    """Squeezing factor s(r) = √((1 + r)/(1 − r)) of the cubic steady state."""
    if not 0 <= r < 1:
        raise DomainError(f"r must lie in [0, 1) for a stable configuration, got {r}")
    return math.sqrt((1 + r) / (1 - r))


def cubic_drive_couplings(g1: float, r: float, gamma: float) -> DriveSet:
    """Drive recipe whose dark state is the cubic phase state e^{iγq³}S(s(r))|0⟩.

    g2 = −r g1 and g3 = g4 = g5 = −(3i/(2√2)) γ (1 + r) g1.

    Raises:
        DomainError: g1 ≤ 0
        InstabilityError: r outside [0, 1)
    """
    if not g1 > 0:
        raise DomainError(f"g1 must be > 0, got {g1}")
    if not 0 <= r < 1:
        raise InstabilityError(
            f"r={r} is outside [0, 1): |g2| >= |g1| has no stable steady state"
        )
    quadratic = -3j / (2 * math.sqrt(2)) * gamma * (1 + r) * g1
    return DriveSet.single(g1, -r * g1, quadratic, quadratic, quadratic)


def drive_couplings_from_amplitudes(alpha: np.ndarray, params: PhysicalParams) -> DriveSet:
    """Linearized couplings from the classical tone amplitudes.

    Args:
        alpha: shape (N, 5), columns ordered by tone (−1, +1, −2, +2, 0)
            sideband relative to the cavity frequency
        params: supplies the bare couplings G_L and G_Q per mode

    Returns:
        DriveSet with g1 = α₋₁G_L, g2 = α₊₁G_L, g3 = α₋₂G_Q, g4 = α₊₂G_Q, g5 = α₀G_Q
    """
    alpha = np.array(alpha, dtype=complex, ndmin=2)
    if alpha.shape != (params.num_modes, 5):
        raise DimensionError(f"alpha must have shape ({params.num_modes}, 5), got {alpha.shape}")
    linear = params.G_L[:, None]
    quadratic = params.G_Q[:, None]
    scale = np.hstack([linear, linear, quadratic, quadratic, quadratic])
    return DriveSet(alpha * scale)


def classical_steady_state(
    eps: ArrayLike,
    Delta: ArrayLike,
    params: PhysicalParams,
    damping: Optional[float] = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
) -> ClassicalSteadyState:
    """Damped fixed-point solution of the classical displacement equations.

        Q_j = −g_L,j S / (Ω_j + 2 g_Q,j S),   S = Σ_k |α_k|²
        α_k = −i ε_k / (κ/2 + i(−Δ_k + Σ_j (g_L,j Q_j + g_Q,j Q_j²)))

    Raises:
        ConvergenceError: residual above ``tol`` after ``max_iter`` iterations
    """
    damping = config.FIXED_POINT_DAMPING if damping is None else damping
    max_iter = config.FIXED_POINT_MAX_ITER if max_iter is None else max_iter
    tol = config.FIXED_POINT_TOL if tol is None else tol
    eps = np.array(eps, dtype=complex).reshape(-1)
    Delta = np.array(Delta, dtype=float).reshape(-1)
    if Delta.size == 1 and eps.size > 1:
        Delta = np.full(eps.size, Delta[0])
    if Delta.size != eps.size:
        raise DimensionError(f"{eps.size} tone amplitudes but {Delta.size} detunings")

    def update(Q: np.ndarray, alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        intensity = float(np.sum(np.abs(alpha) ** 2))
        denominator = params.Omega + 2 * params.G_Q * intensity
        if np.any(denominator == 0):
            raise DomainError("Ω_j + 2 g_Q,j S vanished; no classical steady state")
        shift = float(np.sum(params.G_L * Q + params.G_Q * Q ** 2))
        return (-params.G_L * intensity / denominator,
                -1j * eps / (params.kappa / 2 + 1j * (-Delta + shift)))

    Q = np.zeros(params.num_modes)
    alpha = -1j * eps / (params.kappa / 2 - 1j * Delta)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        Q_new, alpha_new = update(Q, alpha)
        residual = max(float(np.max(np.abs(Q_new - Q), initial=0.0)),
                       float(np.max(np.abs(alpha_new - alpha), initial=0.0)))
        if residual < tol:
            logger.debug(f"classical_steady_state converged in {iteration} iterations")
            return ClassicalSteadyState(Q, alpha, iteration, residual)
        Q = Q + damping * (Q_new - Q)
        alpha = alpha + damping * (alpha_new - alpha)
    raise ConvergenceError(
        f"classical steady state did not converge in {max_iter} iterations", residual
    )


def drift_matrix(drives: DriveSet, kappa: float, Gamma: float = 0.0) -> StabilityReport:
    """Drift matrix of (x, y, q, p) fluctuations for one oscillator.

    The Routh-Hurwitz condition R1R2 + I1I2 > 0 is equivalent to |g1| > |g2|.
    """
    if drives.num_modes != 1:
        raise DimensionError(f"drift_matrix needs exactly one mechanical mode, got {drives.num_modes}")
    g1, g2 = drives.g1[0], drives.g2[0]
    R1, I1 = (g1 + g2).real, (g1 + g2).imag
    R2, I2 = (g1 - g2).real, (g1 - g2).imag
    drift = np.array([
        [-kappa / 2, 0.0, I1, R2],
        [0.0, -kappa / 2, -R1, I2],
        [-I2, R2, 0.0, 0.0],
        [-R1, -I1, 0.0, -Gamma],
    ])
    real_parts = np.sort(np.linalg.eigvals(drift).real)
    margin = float(R1 * R2 + I1 * I2)
    return StabilityReport(
        drift=drift,
        eigen_real_parts=real_parts,
        rh_margin=margin,
        stable_rh=bool(margin > 0),
        stable_eig=bool(np.all(real_parts < 0)),
    )


def cubic_rwa_ratio(g1: float, R: float, Omega: float) -> float:
    """Reduced cubic-drive condition max(|g1|, |R g1|, |g1/R|)/Ω."""
    return rwa_validity(DriveSet.single(g1), R, Omega, margin=math.inf, condition="cubic").ratio


def rwa_validity(
    drives: DriveSet,
    R: ArrayLike,
    Omega: ArrayLike,
    margin: Optional[float] = None,
    condition: str = "general",
) -> RwaValidityReport:
    """Compare drive-enhanced couplings with the mechanical frequency.

    ``condition="general"`` evaluates max(|g_j|, |R g_μ| (μ=3,4,5), |g_ν/R| (ν=1,2))/Ω
    over every mode; ``condition="cubic"`` evaluates the reduced single-oscillator
    condition max(|g1|, |R g1|, |g1/R|)/Ω used for the cubic drive recipe.
    """
    margin = config.RWA_MARGIN if margin is None else margin
    n = drives.num_modes
    R = _as_modes(R, n, "R")
    Omega = _as_modes(Omega, n, "Omega")
    if np.any(Omega <= 0) or np.any(R <= 0):
        raise DomainError("Omega and R must be > 0")

    terms: List[Tuple[float, str]] = [(0.0, "none")]
    for j in range(n):
        g = np.abs(drives.couplings[j])
        if condition == "cubic":
            candidates = [(g[0], "|g1|"), (R[j] * g[0], "|R g1|"), (g[0] / R[j], "|g1/R|")]
        elif condition == "general":
            candidates = [(g[k], f"|{COUPLING_NAMES[k]}|") for k in range(5)]
            candidates += [(R[j] * g[k], f"|R {COUPLING_NAMES[k]}|") for k in (2, 3, 4)]
            candidates += [(g[k] / R[j], f"|{COUPLING_NAMES[k]}/R|") for k in (0, 1)]
        else:
            raise DomainError(f"unknown RWA condition '{condition}'")
        suffix = f" (mode {j + 1})" if n > 1 else ""
        terms += [(value / Omega[j], label + suffix) for value, label in candidates]
    ratio, dominant = max(terms, key=lambda item: item[0])
    passed = ratio < margin
    if not passed:
        logger.warning(f"RWA margin violated: ratio {ratio:.3g} >= {margin:g} (dominant {dominant})")
    return RwaValidityReport(float(ratio), float(margin), bool(passed), dominant)


@dataclass(frozen=True, eq=False)
class TimeDependentHamiltonian:
    """H(t) = H0 + Σ_ℓ (B_ℓ e^{iω_ℓ t} + B_ℓ† e^{−iω_ℓ t}) from constant blocks."""

    static: QOperator
    blocks: Tuple[QOperator, ...] = ()
    frequencies: Tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.blocks) != len(self.frequencies):
            raise DimensionError("every oscillating block needs exactly one frequency")
        for block in self.blocks:
            if not block.space.compatible(self.static.space):
                raise DimensionError("oscillating blocks must share the static block's space")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "frequencies", tuple(float(w) for w in self.frequencies))
        object.__setattr__(self, "_adjoints", tuple(block.dag() for block in self.blocks))

    @property
    def space(self) -> TensorSpace:
        return self.static.space

    @property
    def max_frequency(self) -> float:
        return max((abs(w) for w in self.frequencies), default=0.0)

    def matrix_at(self, t: float) -> np.ndarray:
        matrix = np.array(self.static.matrix)
        for block, adjoint, omega in zip(self.blocks, self._adjoints, self.frequencies):
            phase = np.exp(1j * omega * t)
            matrix += phase * block.matrix + np.conj(phase) * adjoint.matrix
        return matrix

    def __call__(self, t: float) -> QOperator:
        return QOperator(self.space, self.matrix_at(t))

    def apply(self, t: float, rho: np.ndarray) -> np.ndarray:
        """H(t) @ rho through the sparse block views."""
        result = self.static.sparse @ rho
        for block, adjoint, omega in zip(self.blocks, self._adjoints, self.frequencies):
            phase = np.exp(1j * omega * t)
            result = result + phase * (block.sparse @ rho) + np.conj(phase) * (adjoint.sparse @ rho)
        return result

    def norm_bound(self) -> float:
        """Row-sum bound on H(t) over all times (bounds the spectral norm of the Hermitian H(t))."""
        bound = _row_sum_norm(self.static.matrix)
        for block, adjoint in zip(self.blocks, self._adjoints):
            bound += _row_sum_norm(block.matrix) + _row_sum_norm(adjoint.matrix)
        return bound


def _row_sum_norm(matrix: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(matrix), axis=1), initial=0.0))


def counter_rotating_blocks(drives: DriveSet, R: float, space: TensorSpace) -> Tuple[QOperator, ...]:
    """The four single-oscillator blocks H^(1)..H^(4) oscillating at ℓΩ."""
    if drives.num_modes != 1:
        raise DimensionError("counter-rotating terms are built for one mechanical mode")
    _check_space(drives, space)
    if not R > 0:
        raise DomainError(f"R must be > 0, got {R}")
    g1, g2, g3, g4, g5 = drives.couplings[0]
    a = annihilation(space.cutoffs[0]).matrix
    ad = a.conj().T
    b = annihilation(space.cutoffs[1]).matrix
    bd = b.conj().T
    anti = b @ bd + bd @ b
    bd2 = bd @ bd

    def cav(x: complex, y: complex) -> np.ndarray:
        return x * ad + y * a

    def term(cavity_part: np.ndarray, mechanical_part: np.ndarray) -> np.ndarray:
        return np.kron(cavity_part, mechanical_part)

    h1 = (R * term(cav(g3, np.conj(g4)), b) + R * term(cav(g5, np.conj(g5)), bd)
          + term(cav(g2, np.conj(g1)), bd2) / R + term(cav(g1, np.conj(g2)), anti) / R)
    h2 = (term(cav(g1, np.conj(g2)), bd) + term(cav(g5, np.conj(g5)), bd2)
          + term(cav(g3, np.conj(g4)), anti))
    h3 = R * term(cav(g3, np.conj(g4)), bd) + term(cav(g1, np.conj(g2)), bd2) / R
    h4 = term(cav(g3, np.conj(g4)), bd2)
    return tuple(QOperator(space, block) for block in (h1, h2, h3, h4))


def counter_rotating_terms(drives: DriveSet, R: float, Omega: float,
                           space: TensorSpace) -> TimeDependentHamiltonian:
    """H_crt(t) = Σ_ℓ H^(ℓ) e^{iℓΩt} + H.c. as a reusable callback."""
    blocks = counter_rotating_blocks(drives, R, space)
    zero = QOperator(space, np.zeros((space.dim, space.dim)))
    return TimeDependentHamiltonian(zero, blocks, tuple(ell * Omega for ell in range(1, 5)))


def counter_rotating_hamiltonian(drives: DriveSet, R: float, Omega: float, t: float,
                                 space: TensorSpace) -> QOperator:
    """H_crt evaluated at time ``t``."""
    return counter_rotating_terms(drives, R, Omega, space)(t)


def full_hamiltonian(drives: DriveSet, R: float, Omega: float,
                     space: TensorSpace) -> TimeDependentHamiltonian:
    """RWA Hamiltonian plus the counter-rotating blocks."""
    blocks = counter_rotating_blocks(drives, R, space)
    return TimeDependentHamiltonian(
        rwa_hamiltonian(drives, space), blocks, tuple(ell * Omega for ell in range(1, 5))
    )


def measurement_hamiltonian(beta: float, phi: float, mode: int, space: TensorSpace) -> QOperator:
    """QND coupling 2β X Q_φ between the cavity X = (a + a†)/√2 and mode ``mode``."""
    index = space.index(mode)
    if index == 0:
        raise DimensionError("the measured mode must be mechanical (index >= 1)")
    a = annihilation(space.cutoffs[0])
    x = (a + a.dag()) / math.sqrt(2)
    quadrature = rotated_quadrature(space.cutoffs[index], phi)
    return embed(x, 0, space) @ embed(quadrature, index, space) * (2 * beta)


def measurement_drives(beta: float, phi: float, mode: int, n_modes: int) -> DriveSet:
    """Couplings g1 = β e^{−iφ}, g2 = β e^{iφ} on ``mode`` (1-based) realizing H_meas."""
    if not 1 <= mode <= n_modes:
        raise DimensionError(f"mode {mode} outside 1..{n_modes}")
    couplings = np.zeros((n_modes, 5), dtype=complex)
    couplings[mode - 1, 0] = beta * np.exp(-1j * phi)
    couplings[mode - 1, 1] = beta * np.exp(1j * phi)
    return DriveSet(couplings)


def cooling_drives(beta: float, mode: int, n_modes: int) -> DriveSet:
    """Red-sideband beam splitter β(a† b_j + H.c.) on ``mode`` (1-based)."""
    if not 1 <= mode <= n_modes:
        raise DimensionError(f"mode {mode} outside 1..{n_modes}")
    couplings = np.zeros((n_modes, 5), dtype=complex)
    couplings[mode - 1, 0] = beta
    return DriveSet(couplings)
