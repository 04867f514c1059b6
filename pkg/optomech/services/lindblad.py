# optomech/services/lindblad.py - Master-Equation Dynamics
"""
Lindblad dynamics on truncated Fock spaces.

    dρ/dt = −i[H, ρ] + Σ_c rate_c (c ρ c† − ½{c†c, ρ})

The right-hand side is applied matrix-free through sparse operator views; the
d²×d² superoperator is only materialized for the direct steady-state solver
on small spaces. Time integration is classical RK4, either at a fixed step
h = RK4_STEP_FACTOR/‖L‖ or adaptively by step doubling with Richardson
extrapolation. Every accepted step re-symmetrizes ρ.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..core.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    ErrorCode,
    InstabilityError,
    IntegrationError,
    ResourceError,
    UnsupportedOperationError,
)
from ..core.fock import ModeRef, QOperator, QState, StateKind, TensorSpace, annihilation, basis_state, embed
from ..core.performance_monitoring import monitored_operation, performance_counters
from .config import config
from .hamiltonians import PhysicalParams, StabilityReport, TimeDependentHamiltonian

logger = logging.getLogger(__name__)

Hamiltonian = Union[QOperator, TimeDependentHamiltonian]
Observable = Union[QOperator, Callable[[np.ndarray], Any]]


@dataclass(frozen=True, eq=False)
class CollapseChannel:
    """Dissipator rate · D[operator]."""

    operator: QOperator
    rate: float
    label: str = ""

    def __post_init__(self):
        if not self.rate >= 0 or not math.isfinite(self.rate):
            raise DomainError(f"collapse rate must be finite and >= 0, got {self.rate}")
        object.__setattr__(self, "rate", float(self.rate))


@dataclass(frozen=True, eq=False)
class OpenSystem:
    """Hamiltonian (constant or time-dependent) plus collapse channels.

    ``collapse_ops`` accepts CollapseChannel instances or (operator, rate) pairs.
    """

    hamiltonian: Hamiltonian
    collapse_ops: Tuple[CollapseChannel, ...] = ()

    def __post_init__(self):
        channels = tuple(
            c if isinstance(c, CollapseChannel) else CollapseChannel(*c) for c in self.collapse_ops
        )
        for channel in channels:
            if not channel.operator.space.compatible(self.space):
                raise DimensionError(
                    f"collapse operator '{channel.label}' lives on {channel.operator.space.cutoffs}, "
                    f"Hamiltonian on {self.space.cutoffs}"
                )
        object.__setattr__(self, "collapse_ops", channels)

        # K = −(1/2) Σ rate c†c; jumps keep (rate, c)
        dim = self.space.dim
        decay = sp.csr_matrix((dim, dim), dtype=complex)
        jumps = []
        for channel in channels:
            if channel.rate == 0:
                continue
            c = channel.operator.sparse
            decay = decay + (-0.5 * channel.rate) * (c.conj().T @ c)
            jumps.append((channel.rate, c))
        object.__setattr__(self, "_decay", decay.tocsr())
        object.__setattr__(self, "_jumps", tuple(jumps))

    @classmethod
    def optomechanical(cls, hamiltonian: Hamiltonian, params: PhysicalParams,
                       space: Optional[TensorSpace] = None) -> "OpenSystem":
        """Cavity decay √κ a plus thermal baths √(Γ(n̄+1)) b_j and √(Γ n̄) b_j†.

        Zero-rate channels are omitted.
        """
        space = space or hamiltonian.space
        if space.num_modes != params.num_modes + 1:
            raise DimensionError(
                f"space has {space.num_modes} modes but params describe {params.num_modes} oscillators"
            )
        channels = [CollapseChannel(embed(annihilation(space.cutoffs[0]), 0, space), params.kappa, "cavity")]
        for j in range(params.num_modes):
            b = embed(annihilation(space.cutoffs[j + 1]), j + 1, space)
            gamma, nbar = float(params.Gamma_m[j]), float(params.nbar[j])
            if gamma * (nbar + 1) > 0:
                channels.append(CollapseChannel(b, gamma * (nbar + 1), f"mech{j + 1}-"))
            if gamma * nbar > 0:
                channels.append(CollapseChannel(b.dag(), gamma * nbar, f"mech{j + 1}+"))
        return cls(hamiltonian, tuple(channels))

    @property
    def space(self) -> TensorSpace:
        return self.hamiltonian.space

    @property
    def is_time_dependent(self) -> bool:
        return isinstance(self.hamiltonian, TimeDependentHamiltonian)

    def _coherent(self, t: float, rho: np.ndarray) -> np.ndarray:
        if self.is_time_dependent:
            return self.hamiltonian.apply(t, rho)
        return self.hamiltonian.sparse @ rho

    def generator_scale(self) -> float:
        """Row-sum bound on ‖H‖ + ½ Σ rate ‖c†c‖, the inverse of the fastest time scale."""
        if self.is_time_dependent:
            scale = self.hamiltonian.norm_bound()
        else:
            scale = _row_sum_norm(self.hamiltonian.matrix)
        if self._decay.nnz:
            scale += float(abs(self._decay).sum(axis=1).max())
        return scale


def _row_sum_norm(matrix: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(matrix), axis=1), initial=0.0))


def _density(rho: Union[QState, np.ndarray], space: TensorSpace) -> np.ndarray:
    if isinstance(rho, QState):
        if not rho.space.compatible(space):
            raise DimensionError(f"state lives on {rho.space.cutoffs}, system on {space.cutoffs}")
        return rho.density_matrix()
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (space.dim, space.dim):
        raise DimensionError(f"density matrix shape {rho.shape} does not match dimension {space.dim}")
    return rho


def _rhs(sys: OpenSystem, t: float, rho: np.ndarray) -> np.ndarray:
    # valid for Hermitian rho: ρK† = (Kρ)†
    drift = -1j * sys._coherent(t, rho) + sys._decay @ rho
    result = drift + drift.conj().T
    for rate, c in sys._jumps:
        result += rate * (c @ (c @ rho).conj().T)
    performance_counters.increment("lindblad.rhs")
    return result


def liouvillian_apply(sys: OpenSystem, rho: Union[QState, np.ndarray], t: float = 0.0) -> np.ndarray:
    """dρ/dt for a Hermitian density matrix (traceless and Hermitian output)."""
    return _rhs(sys, t, _density(rho, sys.space))


def superoperator(sys: OpenSystem, t: float = 0.0, max_dim: Optional[int] = None) -> np.ndarray:
    """Dense Liouvillian acting on row-major vec(ρ), vec(AρB) = (A ⊗ Bᵀ) vec(ρ).

    Raises:
        ResourceError: dimension above ``max_dim`` (DIRECT_SOLVER_MAX_DIM)
    """
    dim = sys.space.dim
    budget = config.DIRECT_SOLVER_MAX_DIM if max_dim is None else max_dim
    if dim > budget:
        raise ResourceError("superoperator materialization refused", dim, budget)
    if sys.is_time_dependent:
        hamiltonian = sys.hamiltonian.matrix_at(t)
    else:
        hamiltonian = sys.hamiltonian.matrix
    eye = np.eye(dim)
    # −iKρ + iρK† with K = H + i·decay
    effective = hamiltonian + 1j * sys._decay.toarray()
    liouvillian = -1j * np.kron(effective, eye) + 1j * np.kron(eye, effective.conj())
    for rate, c in sys._jumps:
        dense = c.toarray()
        liouvillian += rate * np.kron(dense, dense.conj())
    return liouvillian


@dataclass(frozen=True)
class EvolutionDiagnostics:
    """Integrator bookkeeping for one evolve call."""

    steps: int
    rejected_steps: int
    max_trace_drift: float
    min_eigenvalue: float
    wall_time: float
    method: str


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Final state, sampled observables and diagnostics of an evolution."""

    final: QState
    times: np.ndarray
    observables: Dict[str, np.ndarray]
    diagnostics: EvolutionDiagnostics

    def rows(self) -> List[Dict[str, Any]]:
        """Observable log as a list of records, one per sampled time."""
        records = []
        for i, t in enumerate(self.times):
            record = {"time": float(t)}
            record.update({name: values[i] for name, values in self.observables.items()})
            records.append(record)
        return records


def _measure(observables: Mapping[str, Observable], rho: np.ndarray) -> Dict[str, Any]:
    values = {}
    for name, observable in observables.items():
        if isinstance(observable, QOperator):
            value = complex(np.einsum("ij,ji->", observable.matrix, rho))
            values[name] = value.real if observable.is_hermitian() else value
        else:
            values[name] = observable(rho)
    return values


class _Integrator:
    """RK4 state machine shared by evolve and the integrating steady-state solver."""

    def __init__(self, sys: OpenSystem, method: str, step: Optional[float], tol: Optional[float]):
        if method not in ("adaptive", "fixed"):
            raise DomainError(f"unknown integration method '{method}'")
        self.sys = sys
        self.method = method
        self.tol = config.ADAPTIVE_TOL if tol is None else tol
        scale = sys.generator_scale()
        h_max = math.inf
        if sys.is_time_dependent and sys.hamiltonian.max_frequency > 0:
            period = 2 * math.pi / sys.hamiltonian.max_frequency
            h_max = period / config.RK4_STEPS_PER_PERIOD
        self.h_max = h_max
        if step is not None:
            if not step > 0:
                raise DomainError(f"integration step must be > 0, got {step}")
            self.h = min(step, h_max)
        elif scale > 0:
            self.h = min(config.RK4_STEP_FACTOR / scale, h_max)
        else:
            self.h = h_max
        self.steps = 0
        self.rejected = 0

    def _rk4(self, t: float, rho: np.ndarray, h: float) -> np.ndarray:
        k1 = _rhs(self.sys, t, rho)
        k2 = _rhs(self.sys, t + h / 2, rho + (h / 2) * k1)
        k3 = _rhs(self.sys, t + h / 2, rho + (h / 2) * k2)
        k4 = _rhs(self.sys, t + h, rho + h * k3)
        return rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    def advance(self, t: float, rho: np.ndarray, t_end: float) -> np.ndarray:
        """Integrate from t to t_end, returning the symmetrized state."""
        while t < t_end:
            remaining = t_end - t
            h = min(self.h, remaining) if math.isfinite(self.h) else remaining
            if self.method == "fixed":
                rho = self._rk4(t, rho, h)
            else:
                full = self._rk4(t, rho, h)
                half = self._rk4(t + h / 2, self._rk4(t, rho, h / 2), h / 2)
                error = float(np.max(np.abs(half - full))) / 15
                if not math.isfinite(error):
                    raise InstabilityError(f"non-finite density matrix at t={t:.6g}")
                if error > self.tol:
                    self.rejected += 1
                    performance_counters.increment("lindblad.rejected_steps")
                    self.h = h * max(0.2, 0.9 * (self.tol / error) ** 0.2)
                    if self.h < config.MIN_STEP:
                        raise IntegrationError(
                            f"step size underflow at t={t:.6g} (h={self.h:.3e})",
                            error_code=ErrorCode.STEP_UNDERFLOW, time=t, step=self.h,
                        )
                    continue
                rho = half + (half - full) / 15
                growth = 4.0 if error == 0 else min(4.0, max(0.2, 0.9 * (self.tol / error) ** 0.2))
                # steps clipped to a sample time do not resize the controller
                if h >= self.h:
                    self.h = min(h * growth, self.h_max)
            rho = 0.5 * (rho + rho.conj().T)
            t += h
            self.steps += 1
            performance_counters.increment("lindblad.steps")
        return rho


def _sample_times(t_final: float, sample_interval: Optional[float],
                  sample_times: Optional[Sequence[float]]) -> np.ndarray:
    if sample_times is not None:
        times = np.unique(np.asarray(sample_times, dtype=float))
        if times.size and (times[0] < 0 or times[-1] > t_final):
            raise DomainError("sample times must lie within [0, t_final]")
    elif sample_interval is not None:
        if not sample_interval > 0:
            raise DomainError(f"sample interval must be > 0, got {sample_interval}")
        count = int(math.floor(t_final / sample_interval + 1e-9))
        times = sample_interval * np.arange(count + 1)
    else:
        times = np.array([0.0])
    return np.unique(np.append(times, t_final))


def _trace_drift(rho: np.ndarray, t: float, warned: List[bool]) -> float:
    drift = abs(complex(np.trace(rho)) - 1.0)
    if drift > config.TRACE_ABORT_TOL:
        raise IntegrationError(
            f"trace drifted by {drift:.3e} at t={t:.6g}",
            error_code=ErrorCode.TRACE_DRIFT, time=t, drift=drift,
        )
    if drift > config.TRACE_WARN_TOL and not warned[0]:
        logger.warning(f"trace drift {drift:.3e} at t={t:.6g} exceeds {config.TRACE_WARN_TOL:.0e}")
        warned[0] = True
    return drift


def _min_eigenvalue(rho: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(rho, subset_by_index=[0, 0])[0])


def evolve(
    sys: OpenSystem,
    rho0: QState,
    t_final: float,
    observables: Optional[Mapping[str, Observable]] = None,
    sample_interval: Optional[float] = None,
    sample_times: Optional[Sequence[float]] = None,
    method: str = "adaptive",
    step: Optional[float] = None,
    tol: Optional[float] = None,
    t0: float = 0.0,
) -> EvolutionResult:
    """Integrate the master equation from ``t0`` to ``t0 + t_final``.

    Args:
        sys: open system; a TimeDependentHamiltonian is evaluated at absolute time
        rho0: initial state (pure states are promoted to density matrices)
        t_final: evolution duration (> 0)
        observables: name → QOperator (expectation value) or callable(ρ)
        sample_interval: cadence of observable samples, relative to ``t0``
        sample_times: explicit sample times relative to ``t0`` (overrides the cadence)
        method: "adaptive" (step doubling) or "fixed"
        step: fixed step override
        tol: adaptive local error tolerance (ADAPTIVE_TOL)
        t0: absolute start time

    Raises:
        IntegrationError: step underflow or trace drift beyond TRACE_ABORT_TOL
        ResourceError: dimension above MAX_DENSITY_DIM
    """
    if not t_final > 0:
        raise DomainError(f"t_final must be > 0, got {t_final}")
    space = sys.space
    if space.dim > config.MAX_DENSITY_DIM:
        raise ResourceError("density matrix too large for evolution", space.dim, config.MAX_DENSITY_DIM)
    rho = _density(rho0, space)
    observables = dict(observables or {})
    times = _sample_times(t_final, sample_interval, sample_times)
    check_positivity = space.dim <= config.POSITIVITY_CHECK_MAX_DIM

    integrator = _Integrator(sys, method, step, tol)
    log: Dict[str, List[Any]] = {name: [] for name in observables}
    warned = [False]
    max_drift = 0.0
    min_eig = math.inf
    t = 0.0
    with monitored_operation("lindblad.evolve", {"dim": space.dim, "t_final": t_final}) as metrics:
        for sample in times:
            rho = integrator.advance(t0 + t, rho, t0 + sample) if sample > t else rho
            t = sample
            max_drift = max(max_drift, _trace_drift(rho, t0 + t, warned))
            if check_positivity:
                min_eig = min(min_eig, _min_eigenvalue(rho))
            for name, value in _measure(observables, rho).items():
                log[name].append(value)
        if not check_positivity:
            min_eig = _min_eigenvalue(rho)

    if min_eig < -config.POSITIVITY_TOL:
        logger.warning(f"density matrix eigenvalue {min_eig:.3e} below -{config.POSITIVITY_TOL:.0e}")
    rho = rho / np.trace(rho).real
    initial_loss = rho0.truncation_loss if isinstance(rho0, QState) else 0.0
    final = QState(space, rho, StateKind.MIXED, initial_loss)
    diagnostics = EvolutionDiagnostics(
        steps=integrator.steps,
        rejected_steps=integrator.rejected,
        max_trace_drift=max_drift,
        min_eigenvalue=min_eig,
        wall_time=metrics.duration_s or 0.0,
        method=method,
    )
    logger.debug(f"evolve: {integrator.steps} steps ({integrator.rejected} rejected) over t={t_final:g}")
    return EvolutionResult(final, times + t0, {k: np.asarray(v) for k, v in log.items()}, diagnostics)


def purity_monitor(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def steady_state(
    sys: OpenSystem,
    rho0: Optional[QState] = None,
    method: str = "auto",
    stability: Optional[StabilityReport] = None,
    monitor: Optional[Callable[[np.ndarray], float]] = None,
    tol: Optional[float] = None,
    max_time: Optional[float] = None,
    check_interval: Optional[float] = None,
) -> QState:
    """Stationary state of a constant-Hamiltonian open system.

    ``method="direct"`` solves the materialized Liouvillian with the first row
    replaced by the trace functional; ``"integrate"`` evolves until the RHS
    norm falls below ``tol·max(‖H‖_F, 1)`` and the monitored scalar (purity by
    default) changes by less than STEADY_MONITOR_TOL between checkpoints.
    ``"auto"`` picks direct up to DIRECT_SOLVER_MAX_DIM.

    Raises:
        InstabilityError: unstable ``stability`` report or non-finite iterates
        ConvergenceError: no convergence within ``max_time``
    """
    if sys.is_time_dependent:
        raise UnsupportedOperationError("steady_state requires a constant Hamiltonian")
    if stability is not None and not stability.stable_eig:
        raise InstabilityError(
            "drift matrix has eigenvalues with non-negative real part",
            detail=f"max real part {stability.max_real_eigenvalue:.3e}",
        )
    if method == "auto":
        method = "direct" if sys.space.dim <= config.DIRECT_SOLVER_MAX_DIM else "integrate"
    with monitored_operation("lindblad.steady_state", {"dim": sys.space.dim, "method": method}):
        if method == "direct":
            rho = _steady_state_direct(sys)
        elif method == "integrate":
            rho = _steady_state_integrate(sys, rho0, monitor, tol, max_time, check_interval)
        else:
            raise DomainError(f"unknown steady-state method '{method}'")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return QState(sys.space, rho, StateKind.MIXED)


def _steady_state_direct(sys: OpenSystem) -> np.ndarray:
    dim = sys.space.dim
    liouvillian = superoperator(sys)
    liouvillian[0, :] = 0.0
    liouvillian[0, np.arange(dim) * (dim + 1)] = 1.0
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    try:
        solution = scipy.linalg.solve(liouvillian, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise ConvergenceError(f"steady state is not unique: {e}", residual=math.inf) from e
    if not np.all(np.isfinite(solution)):
        raise InstabilityError("direct steady-state solve produced non-finite entries")
    rho = solution.reshape(dim, dim)
    residual = float(np.linalg.norm(_rhs(sys, 0.0, 0.5 * (rho + rho.conj().T))))
    if residual > config.STEADY_RHS_TOL:
        logger.warning(f"direct steady state leaves residual {residual:.3e} above {config.STEADY_RHS_TOL:.0e}")
    return rho


def _steady_state_integrate(
    sys: OpenSystem,
    rho0: Optional[QState],
    monitor: Optional[Callable[[np.ndarray], float]],
    tol: Optional[float],
    max_time: Optional[float],
    check_interval: Optional[float],
) -> np.ndarray:
    tol = config.STEADY_RHS_TOL if tol is None else tol
    max_time = config.STEADY_MAX_TIME if max_time is None else max_time
    interval = config.STEADY_CHECK_INTERVAL if check_interval is None else check_interval
    monitor = monitor or purity_monitor
    space = sys.space
    if space.dim > config.MAX_DENSITY_DIM:
        raise ResourceError("density matrix too large for evolution", space.dim, config.MAX_DENSITY_DIM)

    rho = _density(rho0, space) if rho0 is not None else basis_state(space, [0] * space.num_modes).density_matrix()
    threshold = tol * max(np.linalg.norm(sys.hamiltonian.matrix), 1.0)
    # the local error floor settles a few hundred times above the step tolerance
    integrator = _Integrator(sys, "adaptive", None, min(config.ADAPTIVE_TOL, config.STEADY_STEP_TOL_RATIO * threshold))
    warned = [False]
    previous = monitor(rho)
    residual = math.inf
    t = 0.0
    while t < max_time:
        t_next = min(t + interval, max_time)
        rho = integrator.advance(t, rho, t_next)
        t = t_next
        _trace_drift(rho, t, warned)
        if not np.all(np.isfinite(rho)):
            raise InstabilityError(f"non-finite density matrix at t={t:.6g}")
        residual = float(np.linalg.norm(_rhs(sys, t, rho)))
        value = monitor(rho)
        change = abs(value - previous)
        previous = value
        logger.debug(f"steady_state t={t:g}: residual {residual:.3e}, monitor change {change:.3e}")
        if residual < threshold and change < config.STEADY_MONITOR_TOL:
            logger.info(f"steady state reached at t={t:g} after {integrator.steps} steps")
            return rho
    raise ConvergenceError(f"steady state not reached within t={max_time:g}", residual=residual)


def partial_trace(state: QState, keep: Sequence[ModeRef]) -> QState:
    """Reduced state on the modes in ``keep`` (returned in tensor order)."""
    space = state.space
    indices = sorted({space.index(mode) for mode in keep})
    if not indices:
        raise DimensionError("partial_trace needs at least one mode to keep")
    if len(indices) == space.num_modes:
        return state
    traced = [k for k in range(space.num_modes) if k not in indices]
    kept_space = space.subspace(indices)
    traced_dim = math.prod(space.cutoffs[k] for k in traced)
    n = space.num_modes

    if state.is_pure:
        amplitudes = np.transpose(state.tensor(), indices + traced).reshape(kept_space.dim, traced_dim)
        reduced = amplitudes @ amplitudes.conj().T
    else:
        tensor = state.data.reshape(space.cutoffs + space.cutoffs)
        order = indices + traced + [n + k for k in indices] + [n + k for k in traced]
        blocks = np.transpose(tensor, order).reshape(kept_space.dim, traced_dim, kept_space.dim, traced_dim)
        reduced = np.einsum("ajbj->ab", blocks)
    reduced = 0.5 * (reduced + reduced.conj().T)
    return QState(kept_space, reduced / np.trace(reduced).real, StateKind.MIXED, state.truncation_loss)


def expectation(op: QOperator, state: QState) -> complex:
    """Tr(op ρ), or ⟨ψ|op|ψ⟩ for pure states."""
    if not op.space.compatible(state.space):
        raise DimensionError(f"operator on {op.space.cutoffs}, state on {state.space.cutoffs}")
    if state.is_pure:
        return complex(np.vdot(state.data, op.sparse @ state.data))
    return complex(np.einsum("ij,ji->", op.matrix, state.data))
