# experiments/steady_state_experiments.py - Cubic Steady-State Experiments
"""
Handlers for the dissipatively prepared cubic phase state: the cutoff and
initial-state study and the (n̄, Γ_m) noise sweep.
"""

import itertools
from typing import Any, Dict, List, Tuple

from ..core.fock import QState, TensorSpace
from ..models.experiment import CubicDriveFields, CubicNoiseSweepConfig, CubicSteadyConfig
from ..services.analysis import convergence_study, fidelity_pure_target, purity, truncation_report
from ..services.hamiltonians import (
    DriveSet,
    PhysicalParams,
    StabilityReport,
    cubic_drive_couplings,
    drift_matrix,
    rwa_hamiltonian,
    s_of_r,
)
from ..services.lindblad import OpenSystem, partial_trace, steady_state
from ..services.protocols import reduced_fidelity_monitor, thermal_mechanical_state, with_cavity_vacuum
from ..services.states import cubic_phase_state
from .base import BaseExperiment, CheckFinding, PointResult


def cubic_stability_findings(cfg: CubicDriveFields, Gamma: float = 0.0) -> List[CheckFinding]:
    """Drift-matrix pre-check of the linear part g1 b − r g1 b†."""
    report = drift_matrix(DriveSet.single(cfg.g1, -cfg.r * cfg.g1), cfg.kappa, Gamma)
    if report.stable_eig and report.stable_rh:
        message = f"stable: r={cfg.r:g} < 1, Routh-Hurwitz margin {report.rh_margin:.6g}"
        return [CheckFinding("info", "stability", message)]
    return [CheckFinding(
        "error", "stability",
        f"unstable: r={cfg.r:g} >= 1 gives |g2| >= |g1| "
        f"(margin {report.rh_margin:.6g}, max Re λ {report.max_real_eigenvalue:.6g})",
    )]


def cubic_system(
    cfg: CubicDriveFields,
    mechanical_cutoff: int,
    bath_nbar: float = 0.0,
    gamma_m: float = 0.0,
) -> Tuple[OpenSystem, StabilityReport, QState]:
    """Open system, stability report and cubic target for one oscillator."""
    drives = cubic_drive_couplings(cfg.g1, cfg.r, cfg.gamma)
    space = TensorSpace.optomechanical(cfg.cavity_cutoff, [mechanical_cutoff])
    params = PhysicalParams.uniform(1, cfg.kappa, Gamma_m=gamma_m, nbar=bath_nbar)
    system = OpenSystem.optomechanical(rwa_hamiltonian(drives, space), params, space)
    stability = drift_matrix(drives, cfg.kappa, gamma_m)
    target = cubic_phase_state(cfg.gamma, s_of_r(cfg.r), mechanical_cutoff, cfg.truncation_tol)
    return system, stability, target


def solve_cubic_steady_state(
    cfg: CubicDriveFields,
    mechanical_cutoff: int,
    initial_nbar: float = 0.0,
    bath_nbar: float = 0.0,
    gamma_m: float = 0.0,
) -> Tuple[QState, QState]:
    """Mechanical steady state and the cubic target at ``mechanical_cutoff``."""
    system, stability, target = cubic_system(cfg, mechanical_cutoff, bath_nbar, gamma_m)
    initial = with_cavity_vacuum(
        thermal_mechanical_state([initial_nbar], [mechanical_cutoff], cfg.truncation_tol),
        cfg.cavity_cutoff,
    )
    state = steady_state(
        system,
        rho0=initial,
        method=cfg.method,
        stability=stability,
        monitor=reduced_fidelity_monitor(target, system.space),
        max_time=cfg.max_time,
    )
    return partial_trace(state, [1]), target


class CubicSteadyExperiment(BaseExperiment):
    """Fidelity, purity and Fock tail of the steady state per cutoff and start."""

    name = "cubic-steady"

    def grid(self, cfg: CubicSteadyConfig) -> List[Dict[str, Any]]:
        return [
            {"mechanical_cutoff": cutoff, "initial_nbar": nbar}
            for cutoff, nbar in itertools.product(cfg.mechanical_cutoffs, cfg.initial_nbar)
        ]

    def run_point(self, cfg: CubicSteadyConfig, point: Dict[str, Any]) -> PointResult:
        cutoff, nbar = point["mechanical_cutoff"], point["initial_nbar"]
        mechanical, target = solve_cubic_steady_state(cfg, cutoff, initial_nbar=nbar)
        report = truncation_report(mechanical)
        fidelity = fidelity_pure_target(target, mechanical)
        self.logger.info(f"cutoff {cutoff}, initial n̄={nbar:g}: fidelity {fidelity:.8f}")
        row = {
            "mechanical_cutoff": cutoff,
            "initial_nbar": nbar,
            "fidelity": fidelity,
            "purity": purity(mechanical),
            "tail_population": report.max_tail,
        }
        return PointResult([row], truncation=report.to_dict())

    def checks(self, cfg: CubicSteadyConfig) -> List[CheckFinding]:
        return cubic_stability_findings(cfg)

    def cutoffs(self, cfg: CubicSteadyConfig) -> Dict[str, Any]:
        return {"cavity": cfg.cavity_cutoff, "mechanical": list(cfg.mechanical_cutoffs)}

    def summarize(self, cfg: CubicSteadyConfig, rows, points) -> Dict[str, Any]:
        """Cutoff convergence of the fidelity from the first initial state, and spread over initial states."""
        by_cutoff: Dict[int, List[float]] = {}
        for row in rows:
            by_cutoff.setdefault(row["mechanical_cutoff"], []).append(row["fidelity"])
        cutoffs = sorted(by_cutoff)
        summary: Dict[str, Any] = {
            "initial_state_spread": {
                str(c): max(by_cutoff[c]) - min(by_cutoff[c]) for c in cutoffs
            },
        }
        if len(cutoffs) > 1:
            study = convergence_study(lambda c: by_cutoff[c][0], cutoffs)
            if not study.converged:
                self.logger.warning(
                    f"fidelity still changes by {study.deltas[-1]:.3e} at cutoff {cutoffs[-1]}"
                )
            summary["convergence"] = study.to_dict()
        return summary


class CubicNoiseSweepExperiment(BaseExperiment):
    """Steady-state fidelity over the bath occupation and damping axes."""

    name = "cubic-noise-sweep"

    def grid(self, cfg: CubicNoiseSweepConfig) -> List[Dict[str, Any]]:
        return [
            {"nbar": nbar, "gamma_m": gamma_m}
            for nbar, gamma_m in itertools.product(cfg.nbar, cfg.gamma_m)
        ]

    def run_point(self, cfg: CubicNoiseSweepConfig, point: Dict[str, Any]) -> PointResult:
        nbar, gamma_m = point["nbar"], point["gamma_m"]
        mechanical, target = solve_cubic_steady_state(
            cfg, cfg.mechanical_cutoff, bath_nbar=nbar, gamma_m=gamma_m
        )
        fidelity = fidelity_pure_target(target, mechanical)
        self.logger.info(f"n̄={nbar:g}, Γ_m={gamma_m:g}: fidelity {fidelity:.8f}")
        row = {"nbar": nbar, "gamma_m": gamma_m, "fidelity": fidelity}
        return PointResult([row], truncation=truncation_report(mechanical).to_dict())

    def checks(self, cfg: CubicNoiseSweepConfig) -> List[CheckFinding]:
        return cubic_stability_findings(cfg, min(cfg.gamma_m))

    def cutoffs(self, cfg: CubicNoiseSweepConfig) -> Dict[str, Any]:
        return {"cavity": cfg.cavity_cutoff, "mechanical": [cfg.mechanical_cutoff]}

