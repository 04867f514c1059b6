# optomech/services/protocols.py - Preparation and Measurement Protocols
"""
Hamiltonian switching for cluster-state preparation, red-sideband pre-cooling,
projective homodyne measurement and the measurement-based cubic phase gate.

Switching: with U = D₊ − (i/2)(D₊+D₋)A, V = −D₋ − (i/2)(D₊+D₋)A and
W = −(3i/(2√2)) D_γ(D₊+D₋), step ℓ drives g1 = βU_ℓj, g2 = βV_ℓj and
g3 = g4 = g5 = βW_ℓj on every oscillator j, so the cavity couples to the
collective mode d_ℓ = Σ_j U_ℓj b_j + V_ℓj b_j† + W_ℓj (b_j + b_j†)² whose
vacuum is the target cluster.

Gate conventions: X(m) = e^{−imp}, Z(θ) = e^{iθq}, P(θ) = e^{iθq²},
F = e^{i(π/2)n}. Measuring p = m on node 1 of the two-node cluster leaves
node 2 in X(m)P(3γm)Z(3γm²)F e^{−iγp³}|φ⟩ up to the global phase e^{−iγm³}
and finite-squeezing distortion.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..core.errors import DimensionError, DomainError, GridError, InstabilityError, RareOutcomeError
from ..core.fock import (
    ModeRef,
    QOperator,
    QState,
    StateKind,
    TensorSpace,
    annihilation,
    apply_to_mode,
    embed,
    hermite_functions,
    matrix_exp,
    number,
    quadratures,
    rotated_quadrature,
    tensor_states,
)
from ..core.performance_monitoring import monitored_operation
from .analysis import fidelity_pure_target
from .config import config
from .hamiltonians import DriveSet, PhysicalParams, cooling_drives, drift_matrix, rwa_hamiltonian
from .lindblad import EvolutionResult, OpenSystem, evolve, partial_trace
from .states import ClusterSpec, cluster_state, squeezed_vacuum, thermal_state, vacuum

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def switching_matrices(spec: ClusterSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(U, V, W) of the collective modes d_ℓ for ``spec``."""
    s = spec.squeezing
    d_plus = np.diag(0.5 * (s + 1 / s))
    d_minus = np.diag(0.5 * (s - 1 / s))
    coupling = -0.5j * (d_plus + d_minus) @ spec.adjacency
    U = d_plus + coupling
    V = -d_minus + coupling
    W = -3j / (2 * math.sqrt(2)) * np.diag(spec.cubic) @ (d_plus + d_minus)
    return U, V, W


@dataclass(frozen=True, eq=False)
class SwitchingPlan:
    """N-step switching schedule, optionally preceded by per-mode cooling.

    ``step_duration`` defaults to PROTOCOL_TOTAL_TIME/(N β) and
    ``cooling_duration`` to the same value.
    """

    spec: ClusterSpec
    beta: float
    step_duration: Optional[float] = None
    precool: bool = False
    cooling_duration: Optional[float] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        step = self.step_duration
        if step is None:
            step = config.PROTOCOL_TOTAL_TIME / (self.spec.num_modes * self.beta)
        if not step > 0:
            raise DomainError(f"step duration must be > 0, got {step}")
        cooling = step if self.cooling_duration is None else self.cooling_duration
        if self.precool and not cooling > 0:
            raise DomainError(f"cooling duration must be > 0, got {cooling}")
        object.__setattr__(self, "step_duration", float(step))
        object.__setattr__(self, "cooling_duration", float(cooling))
        U, V, W = switching_matrices(self.spec)
        for name, value in (("U", U), ("V", V), ("W", W)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def num_steps(self) -> int:
        return self.spec.num_modes


def step_drives(plan: SwitchingPlan, step: int) -> DriveSet:
    """Couplings realizing β(a† d_ℓ + H.c.) at 1-based step ``step``."""
    if not 1 <= step <= plan.num_steps:
        raise DimensionError(f"step {step} outside 1..{plan.num_steps}")
    row = step - 1
    quadratic = plan.beta * plan.W[row]
    couplings = np.column_stack([
        plan.beta * plan.U[row],
        plan.beta * plan.V[row],
        quadratic,
        quadratic,
        quadratic,
    ])
    return DriveSet(couplings)


def collective_mode(plan: SwitchingPlan, step: int, space: TensorSpace) -> QOperator:
    """d_ℓ on ``space``; mechanical modes are found by their ``mech<j>`` labels."""
    if not 1 <= step <= plan.num_steps:
        raise DimensionError(f"step {step} outside 1..{plan.num_steps}")
    row = step - 1
    result = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(plan.num_steps):
        index = space.index(f"mech{j + 1}")
        b = embed(annihilation(space.cutoffs[index]), index, space).matrix
        bd = b.conj().T
        x = b + bd
        result += plan.U[row, j] * b + plan.V[row, j] * bd
        if plan.W[row, j] != 0:
            result += plan.W[row, j] * (x @ x)
    return QOperator(space, result)


@dataclass(frozen=True, eq=False)
class SwitchingResult:
    """Fidelity trace and final state of a switching run."""

    times: np.ndarray
    fidelities: np.ndarray
    stages: List[str]
    collective_occupation: np.ndarray
    final: QState
    final_mechanical: QState
    boundaries: List[Tuple[str, float, float]] = field(default_factory=list)
    evolutions: List[EvolutionResult] = field(default_factory=list)

    @property
    def peak_fidelity(self) -> float:
        return float(np.max(self.fidelities))

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelities[-1])

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"time": float(t), "step": stage, "fidelity": float(f)}
            for t, stage, f in zip(self.times, self.stages, self.fidelities)
        ]


def reduced_fidelity_monitor(target: QState, space: TensorSpace):
    """Callable ρ ↦ √⟨ψ|Tr_cavity ρ|ψ⟩ for a cavity-first space."""
    psi = target.data
    cavity_dim = space.cutoffs[0]
    mechanical_dim = space.dim // cavity_dim
    if mechanical_dim != target.dim:
        raise DimensionError(f"target dimension {target.dim} does not match mechanical dimension {mechanical_dim}")

    def monitor(rho: np.ndarray) -> float:
        blocks = rho.reshape(cavity_dim, mechanical_dim, cavity_dim, mechanical_dim)
        overlap = np.real(np.einsum("i,aiaj,j->", psi.conj(), blocks, psi))
        return math.sqrt(max(float(overlap), 0.0))

    return monitor


def with_cavity_vacuum(mechanical: QState, cavity_cutoff: int) -> QState:
    """Cavity vacuum ⊗ ``mechanical`` on an optomechanical space."""
    space = TensorSpace.optomechanical(cavity_cutoff, mechanical.space.cutoffs)
    return tensor_states([vacuum(cavity_cutoff), mechanical], space)


def thermal_mechanical_state(nbar: Sequence[float], cutoffs: Sequence[int],
                             tol: Optional[float] = None) -> QState:
    """Product of thermal states (vacuum where n̄ = 0)."""
    factors = [thermal_state(float(n), int(c), tol) if n > 0 else vacuum(int(c)) for n, c in zip(nbar, cutoffs)]
    return tensor_states(factors, TensorSpace.mechanical(cutoffs))


def _run_stage(
    hamiltonian: QOperator,
    params: PhysicalParams,
    rho: QState,
    duration: float,
    t0: float,
    observables: Dict[str, object],
    sample_interval: Optional[float],
) -> EvolutionResult:
    system = OpenSystem.optomechanical(hamiltonian, params, rho.space)
    return evolve(system, rho, duration, observables=observables, sample_interval=sample_interval, t0=t0)


def precool(
    params: PhysicalParams,
    mode: int,
    beta: float,
    duration: float,
    rho: QState,
    sample_interval: Optional[float] = None,
) -> QState:
    """Red-sideband cooling β(a† b_j + H.c.) of oscillator ``mode`` (1-based)."""
    if not duration > 0:
        raise DomainError(f"cooling duration must be > 0, got {duration}")
    drives = cooling_drives(beta, mode, params.num_modes)
    hamiltonian = rwa_hamiltonian(drives, rho.space)
    return _run_stage(hamiltonian, params, rho, duration, 0.0, {}, sample_interval).final


def run_switching(
    plan: SwitchingPlan,
    initial: QState,
    params: PhysicalParams,
    cavity_cutoff: int = 3,
    sample_interval: Optional[float] = None,
    target: Optional[QState] = None,
) -> SwitchingResult:
    """Evolve through the (pre-cooling and) switching steps, tracking fidelity.

    ``initial`` is either a full cavity+mechanics state or a mechanical state,
    which is then joined with a cavity vacuum of ``cavity_cutoff``. Fidelity is
    that of the mechanical reduced state with ``target`` (default
    ``cluster_state(plan.spec)`` at the mechanical cutoffs).
    """
    n = plan.num_steps
    if params.num_modes != n:
        raise DimensionError(f"params describe {params.num_modes} oscillators, plan has {n}")
    rho = initial if initial.space.num_modes == n + 1 else with_cavity_vacuum(initial, cavity_cutoff)
    space = TensorSpace.optomechanical(rho.space.cutoffs[0], rho.space.cutoffs[1:])
    rho = QState(space, rho.data, rho.kind, rho.truncation_loss)
    mechanical_cutoffs = space.cutoffs[1:]
    if target is None:
        target = cluster_state(plan.spec, mechanical_cutoffs)
    fidelity = reduced_fidelity_monitor(target, space)

    for step in range(1, n + 1):
        drives = step_drives(plan, step)
        linear = DriveSet.single(drives.g1[step - 1], drives.g2[step - 1])
        if not drift_matrix(linear, params.kappa).stable_rh:
            raise InstabilityError(f"switching step {step} has an unstable linear part")

    stages: List[Tuple[str, QOperator, QOperator, float]] = []
    if plan.precool:
        for j in range(1, n + 1):
            hamiltonian = rwa_hamiltonian(cooling_drives(plan.beta, j, n), space)
            b = embed(annihilation(space.cutoffs[j]), j, space)
            stages.append((f"cool{j}", hamiltonian, b.dag() @ b, plan.cooling_duration))
    for step in range(1, n + 1):
        hamiltonian = rwa_hamiltonian(step_drives(plan, step), space)
        d = collective_mode(plan, step, space)
        stages.append((f"step{step}", hamiltonian, d.dag() @ d, plan.step_duration))

    times: List[float] = []
    fidelities: List[float] = []
    labels: List[str] = []
    occupations: List[float] = []
    boundaries = []
    evolutions = []
    t = 0.0
    with monitored_operation("protocols.run_switching", {"steps": n, "precool": plan.precool}):
        for label, hamiltonian, occupation, duration in stages:
            result = _run_stage(
                hamiltonian, params, rho, duration, t,
                {"fidelity": fidelity, "occupation": occupation}, sample_interval,
            )
            first = 1 if times else 0
            times.extend(result.times[first:])
            fidelities.extend(result.observables["fidelity"][first:])
            occupations.extend(result.observables["occupation"][first:])
            labels.extend([label] * (len(result.times) - first))
            boundaries.append((label, t, t + duration))
            evolutions.append(result)
            logger.info(f"{label}: fidelity {result.observables['fidelity'][-1]:.6f} at t={t + duration:g}")
            rho = result.final
            t += duration

    return SwitchingResult(
        times=np.asarray(times),
        fidelities=np.asarray(fidelities, dtype=float),
        stages=labels,
        collective_occupation=np.asarray(occupations, dtype=float),
        final=rho,
        final_mechanical=partial_trace(rho, list(range(1, n + 1))),
        boundaries=boundaries,
        evolutions=evolutions,
    )


@dataclass(frozen=True)
class MeasurementRecord:
    """One homodyne outcome."""

    mode: int
    phi: float
    outcome: float
    density: float


def _mode_density(state: QState, mode: ModeRef) -> Tuple[int, np.ndarray]:
    index = state.space.index(mode)
    if state.space.num_modes == 1:
        return index, state.density_matrix()
    return index, partial_trace(state, [index]).data


def _eigenvectors(grid: np.ndarray, phi: float, cutoff: int) -> np.ndarray:
    """Columns e^{inφ} ψ_n(m) for every grid point m."""
    phases = np.exp(1j * phi * np.arange(cutoff))
    return phases[:, None] * hermite_functions(grid, cutoff)


def marginal_density(state: QState, mode: ModeRef, phi: float, grid: np.ndarray) -> np.ndarray:
    """Probability density of Q_φ on ``mode`` at every grid point."""
    index, rho = _mode_density(state, mode)
    vectors = _eigenvectors(np.asarray(grid, dtype=float), phi, state.space.cutoffs[index])
    density = np.real(np.einsum("ng,nk,kg->g", vectors.conj(), rho, vectors))
    return np.clip(density, 0.0, None)


def homodyne_grid(
    state: QState,
    mode: ModeRef,
    phi: float,
    points: Optional[int] = None,
    width: Optional[float] = None,
) -> np.ndarray:
    """``points`` samples over μ ± width·σ of the Q_φ marginal.

    Raises:
        GridError: the grid misses more than HOMODYNE_TAIL_TOL of the marginal
    """
    points = config.HOMODYNE_GRID_POINTS if points is None else points
    width = config.HOMODYNE_GRID_WIDTH if width is None else width
    index, rho = _mode_density(state, mode)
    quadrature = rotated_quadrature(state.space.cutoffs[index], phi).matrix
    mean = float(np.real(np.trace(quadrature @ rho)))
    variance = float(np.real(np.trace(quadrature @ quadrature @ rho))) - mean ** 2
    sigma = math.sqrt(max(variance, 0.0))
    if sigma == 0:
        raise GridError("quadrature marginal has zero width", tail_mass=1.0)
    grid = np.linspace(mean - width * sigma, mean + width * sigma, points)
    if np.max(np.abs(grid)) > config.HOMODYNE_MAX_ABS:
        raise GridError(
            f"grid extends beyond |m| = {config.HOMODYNE_MAX_ABS:g}", tail_mass=0.0
        )
    tail = 1.0 - float(trapezoid(marginal_density(state, index, phi, grid), grid))
    if tail > config.HOMODYNE_TAIL_TOL:
        raise GridError(f"homodyne grid over ±{width:g}σ misses part of the marginal", tail_mass=tail)
    return grid


def homodyne_project(state: QState, mode: ModeRef, phi: float, m: float) -> Tuple[QState, float]:
    """Posterior after observing Q_φ = m on ``mode`` and the density at m.

    The measured mode is removed from the space.

    Raises:
        RareOutcomeError: density below HOMODYNE_UNDERFLOW
    """
    if not abs(m) <= config.HOMODYNE_MAX_ABS:
        raise DomainError(f"outcome {m} outside the measurable range ±{config.HOMODYNE_MAX_ABS:g}")
    space = state.space
    index = space.index(mode)
    vector = _eigenvectors(np.array([m]), phi, space.cutoffs[index])[:, 0]
    remaining = space.without(index)

    if state.is_pure:
        projected = np.tensordot(vector.conj(), state.tensor(), axes=([0], [index])).reshape(-1)
        density = float(np.real(np.vdot(projected, projected)))
    else:
        tensor = state.data.reshape(space.cutoffs + space.cutoffs)
        projected = np.tensordot(vector.conj(), tensor, axes=([0], [index]))
        projected = np.tensordot(projected, vector, axes=([space.num_modes - 1 + index], [0]))
        projected = projected.reshape(remaining.dim, remaining.dim)
        density = float(np.real(np.trace(projected)))

    if density < config.HOMODYNE_UNDERFLOW:
        raise RareOutcomeError(f"homodyne outcome m={m:g} is too unlikely", density=density)
    if state.is_pure:
        posterior = QState.pure(remaining, projected / math.sqrt(density), state.truncation_loss, normalize=True)
    else:
        projected = 0.5 * (projected + projected.conj().T) / density
        posterior = QState(remaining, projected / np.trace(projected).real, StateKind.MIXED, state.truncation_loss)
    return posterior, density


def _inverse_cdf(state: QState, mode: ModeRef, phi: float, grid: np.ndarray):
    density = marginal_density(state, mode, phi, grid)
    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    if cdf[-1] <= 0:
        raise GridError("marginal vanishes on the sampling grid", tail_mass=1.0)
    return cdf / cdf[-1]


def sample_homodyne(
    state: QState,
    mode: ModeRef,
    phi: float,
    rng_seed: SeedLike,
    grid: Optional[np.ndarray] = None,
) -> MeasurementRecord:
    """Draw one outcome by inverse-CDF sampling of the grid marginal."""
    index = state.space.index(mode)
    grid = homodyne_grid(state, index, phi) if grid is None else np.asarray(grid, dtype=float)
    cdf = _inverse_cdf(state, index, phi, grid)
    rng = np.random.default_rng(rng_seed)
    outcome = float(np.interp(rng.random(), cdf, grid))
    density = float(marginal_density(state, index, phi, np.array([outcome]))[0])
    return MeasurementRecord(index, float(phi), outcome, density)


def sample_homodyne_outcomes(
    state: QState,
    mode: ModeRef,
    phi: float,
    n: int,
    rng_seed: SeedLike,
    grid: Optional[np.ndarray] = None,
) -> np.ndarray:
    """``n`` independent outcomes from one generator (same sampler as sample_homodyne)."""
    index = state.space.index(mode)
    grid = homodyne_grid(state, index, phi) if grid is None else np.asarray(grid, dtype=float)
    cdf = _inverse_cdf(state, index, phi, grid)
    rng = np.random.default_rng(rng_seed)
    return np.interp(rng.random(int(n)), cdf, grid)


def x_gate(m: float, cutoff: int) -> QOperator:
    _, p = quadratures(cutoff)
    return matrix_exp(p, -1j * m)


def z_gate(theta: float, cutoff: int) -> QOperator:
    q, _ = quadratures(cutoff)
    return matrix_exp(q, 1j * theta)


def p_gate(theta: float, cutoff: int) -> QOperator:
    q, _ = quadratures(cutoff)
    return matrix_exp(q @ q, 1j * theta)


def f_gate(cutoff: int) -> QOperator:
    return matrix_exp(number(cutoff), 0.5j * math.pi)


def cubic_gate(gamma: float, cutoff: int) -> QOperator:
    """e^{−iγp³}."""
    _, p = quadratures(cutoff)
    return matrix_exp(p @ p @ p, -1j * gamma)


def cubic_gate_target(input_state: QState, gamma: float, m: float) -> QState:
    """X(m) P(3γm) Z(3γm²) F e^{−iγp³} |φ⟩."""
    if not input_state.is_pure or input_state.space.num_modes != 1:
        raise DimensionError("cubic_gate_target needs a single-mode pure input")
    space = input_state.space
    cutoff = space.cutoffs[0]
    gates = [f_gate(cutoff)]
    if gamma != 0:
        gates.insert(0, cubic_gate(gamma, cutoff))
        if m != 0:
            gates += [z_gate(3 * gamma * m * m, cutoff), p_gate(3 * gamma * m, cutoff)]
    if m != 0:
        gates.append(x_gate(m, cutoff))
    amplitudes = input_state.data
    for gate in gates:
        amplitudes = apply_to_mode(amplitudes, space, 0, gate.matrix)
    return QState.pure(space, amplitudes.reshape(-1), input_state.truncation_loss, normalize=True)


@dataclass(frozen=True)
class GateSample:
    """One measurement branch of the cubic-gate pipeline."""

    index: int
    outcome: float
    density: float
    fidelity: float


@dataclass(frozen=True)
class CubicGateResult:
    """Outcome-averaged gate fidelity and per-sample records."""

    average_fidelity: float
    std_fidelity: float
    samples: List[GateSample]

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def sample_generators(seed: int, n: int) -> List[np.random.Generator]:
    """Independent per-sample generators: sample i uses SeedSequence(seed).spawn(n)[i]."""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(n)]


def two_node_cluster(input_s: float, output_s: float, gamma: float) -> ClusterSpec:
    """Squeezed input node 1 joined by one CZ edge to the cubic-phase node 2."""
    return ClusterSpec(
        adjacency=[[0, 1], [1, 0]],
        squeezing=[input_s, output_s],
        cubic=[0.0, gamma],
    )


def cubic_gate_pipeline(
    input_s: float,
    gamma: float,
    n_samples: int,
    rng_seed: int,
    cutoffs: Sequence[int],
    output_s: Optional[float] = None,
    params: Optional[PhysicalParams] = None,
    beta: float = 1.0,
    precool_modes: bool = False,
    cavity_cutoff: int = 3,
    cluster: Optional[QState] = None,
    tol: Optional[float] = None,
) -> CubicGateResult:
    """Measure p on node 1 of the two-node cluster and score node 2 against the gate target.

    Without ``params`` the cluster is built directly (noiseless); with
    ``params`` it is prepared by ``run_switching`` from the thermal state of
    ``params.nbar``. A precomputed ``cluster`` (mechanical state) skips both.
    ``tol`` is the truncation tolerance of the thermal start, the cluster
    target and the squeezed input.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    output_s = input_s if output_s is None else output_s
    spec = two_node_cluster(input_s, output_s, gamma)
    cutoffs = [int(c) for c in cutoffs]
    with monitored_operation("protocols.cubic_gate_pipeline", {"n_samples": n_samples}):
        if cluster is None:
            if params is None:
                cluster = cluster_state(spec, cutoffs, tol)
            else:
                plan = SwitchingPlan(spec, beta, precool=precool_modes)
                initial = thermal_mechanical_state(params.nbar, cutoffs, tol)
                prepared_target = cluster_state(spec, cutoffs, tol)
                cluster = run_switching(plan, initial, params, cavity_cutoff, target=prepared_target).final_mechanical
        phi = math.pi / 2
        grid = homodyne_grid(cluster, 0, phi)
        cdf = _inverse_cdf(cluster, 0, phi, grid)
        input_state = squeezed_vacuum(input_s, cluster.space.cutoffs[1], tol)

        samples = []
        for i, rng in enumerate(sample_generators(rng_seed, n_samples)):
            m = float(np.interp(rng.random(), cdf, grid))
            posterior, density = homodyne_project(cluster, 0, phi, m)
            target = cubic_gate_target(input_state, gamma, m)
            fidelity = fidelity_pure_target(target, posterior)
            samples.append(GateSample(i, m, density, fidelity))

    values = np.array([sample.fidelity for sample in samples])
    logger.info(f"cubic gate: average fidelity {values.mean():.6f} over {n_samples} samples")
    return CubicGateResult(float(values.mean()), float(values.std()), samples)
