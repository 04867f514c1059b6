# experiments/model_check_experiments.py - Model Validity Experiments
"""
Handlers checking the effective model: rotating-wave approximation against
the full time-dependent Hamiltonian, and linear stability over the (g1, g2)
plane.
"""

import itertools
import math
from typing import Any, Dict, List

import numpy as np
import scipy.linalg

from ..core.fock import QState, TensorSpace, basis_state
from ..models.experiment import RwaCheckConfig, StabilityScanConfig
from ..services.analysis import fidelity_pure_target, truncation_report
from ..services.hamiltonians import (
    DriveSet,
    PhysicalParams,
    cubic_drive_couplings,
    cubic_rwa_ratio,
    drift_matrix,
    full_hamiltonian,
    rwa_hamiltonian,
    rwa_validity,
    s_of_r,
)
from ..services.lindblad import OpenSystem, evolve, partial_trace
from ..services.protocols import reduced_fidelity_monitor
from ..services.states import cubic_phase_state
from .base import BaseExperiment, CheckFinding, PointResult
from .steady_state_experiments import cubic_stability_findings


def principal_state(state: QState) -> QState:
    """Eigenvector of the largest eigenvalue of a density matrix."""
    dim = state.dim
    _, vectors = scipy.linalg.eigh(state.density_matrix(), subset_by_index=[dim - 1, dim - 1])
    return QState.pure(state.space, vectors[:, 0], state.truncation_loss, normalize=True)


class RwaCheckExperiment(BaseExperiment):
    """Evolve from the ground state with and without counter-rotating terms."""

    name = "rwa-check"

    def run_point(self, cfg: RwaCheckConfig, point: Dict[str, Any]) -> PointResult:
        drives = cubic_drive_couplings(cfg.g1, cfg.r, cfg.gamma)
        space = TensorSpace.optomechanical(cfg.cavity_cutoff, [cfg.mechanical_cutoff])
        params = PhysicalParams.uniform(1, cfg.kappa, Omega=cfg.Omega)
        target = cubic_phase_state(cfg.gamma, s_of_r(cfg.r), cfg.mechanical_cutoff, cfg.truncation_tol)
        observables = {"fidelity": reduced_fidelity_monitor(target, space)}
        initial = basis_state(space, [0, 0])

        runs = {}
        for label, hamiltonian in (
            ("rwa", rwa_hamiltonian(drives, space)),
            ("full", full_hamiltonian(drives, cfg.R, cfg.Omega, space)),
        ):
            system = OpenSystem.optomechanical(hamiltonian, params, space)
            runs[label] = evolve(
                system, initial, cfg.duration, observables=observables, sample_interval=cfg.sample_interval
            )
            self.logger.info(
                f"{label}: fidelity {runs[label].observables['fidelity'][-1]:.6f} "
                f"after {runs[label].diagnostics.steps} steps"
            )

        rwa_final = partial_trace(runs["rwa"].final, [1])
        full_final = partial_trace(runs["full"].final, [1])
        rows = [
            {"time": float(t), "fidelity_rwa": float(f_rwa), "fidelity_full": float(f_full)}
            for t, f_rwa, f_full in zip(
                runs["rwa"].times, runs["rwa"].observables["fidelity"], runs["full"].observables["fidelity"]
            )
        ]
        metadata = {
            "rwa_vs_full": fidelity_pure_target(principal_state(rwa_final), full_final),
            "rwa_ratio": cubic_rwa_ratio(cfg.g1, cfg.R, cfg.Omega),
            "steps": {label: run.diagnostics.steps for label, run in runs.items()},
        }
        return PointResult(rows, truncation=truncation_report(full_final).to_dict(), metadata=metadata)

    def checks(self, cfg: RwaCheckConfig) -> List[CheckFinding]:
        findings = cubic_stability_findings(cfg)
        if cfg.r >= 1:
            return findings
        drives = cubic_drive_couplings(cfg.g1, cfg.r, cfg.gamma)
        report = rwa_validity(drives, cfg.R, cfg.Omega, condition="cubic")
        level = "info" if report.passed else "warning"
        findings.append(CheckFinding(
            level, "rwa_margin",
            f"coupling ratio {report.ratio:.4g} vs margin {report.margin:g} (dominant {report.dominant_term})",
        ))
        return findings

    def cutoffs(self, cfg: RwaCheckConfig) -> Dict[str, Any]:
        return {"cavity": cfg.cavity_cutoff, "mechanical": [cfg.mechanical_cutoff]}

    def summarize(self, cfg, rows, points) -> Dict[str, Any]:
        return dict(points[0].metadata)


class StabilityScanExperiment(BaseExperiment):
    """Routh-Hurwitz margin and drift-matrix eigenvalues over |g2|/|g1| and arg g2."""

    name = "stability-scan"

    def grid(self, cfg: StabilityScanConfig) -> List[Dict[str, Any]]:
        return [
            {"g2_over_g1": ratio, "phase": phase}
            for ratio, phase in itertools.product(cfg.g2_over_g1, cfg.phases)
        ]

    def run_point(self, cfg: StabilityScanConfig, point: Dict[str, Any]) -> PointResult:
        ratio, phase = point["g2_over_g1"], point["phase"]
        g2 = cfg.g1 * ratio * complex(math.cos(phase), math.sin(phase))
        report = drift_matrix(DriveSet.single(cfg.g1, g2), cfg.kappa, cfg.Gamma)
        row = {
            "g2_over_g1": ratio,
            "phase": phase,
            "rh_margin": report.rh_margin,
            "stable_rh": report.stable_rh,
            "stable_eig": report.stable_eig,
            "max_real_eigenvalue": report.max_real_eigenvalue,
        }
        return PointResult([row])

    def summarize(self, cfg: StabilityScanConfig, rows, points) -> Dict[str, Any]:
        """Agreement of the two criteria away from the marginal line."""
        decided = [row for row in rows if abs(row["rh_margin"]) > 1e-9]
        agree = sum(1 for row in decided if row["stable_rh"] == row["stable_eig"])
        return {
            "non_marginal_points": len(decided),
            "criteria_agree": agree,
            "agreement": agree / len(decided) if decided else None,
            "stable_fraction": float(np.mean([row["stable_eig"] for row in rows])),
        }
