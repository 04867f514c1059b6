# experiments/protocol_experiments.py - Cluster Preparation and Gate Experiments
"""
Handlers for Hamiltonian-switching cluster preparation and the
measurement-based cubic phase gate.
"""

import itertools
from typing import Any, Dict, List

from ..core.errors import SimulationError
from ..models.experiment import CubicGateConfig, TwoNodeClusterConfig
from ..services.analysis import truncation_report
from ..services.hamiltonians import DriveSet, PhysicalParams, drift_matrix
from ..services.protocols import (
    SwitchingPlan,
    cubic_gate_pipeline,
    run_switching,
    step_drives,
    thermal_mechanical_state,
    two_node_cluster,
)
from ..services.states import ClusterSpec, cluster_state
from .base import BaseExperiment, CheckFinding, PointResult


def switching_findings(plan: SwitchingPlan, kappa: float) -> List[CheckFinding]:
    """Stability of the linear part of every switching step."""
    findings = []
    for step in range(1, plan.num_steps + 1):
        drives = step_drives(plan, step)
        linear = DriveSet.single(drives.g1[step - 1], drives.g2[step - 1])
        report = drift_matrix(linear, kappa)
        if report.stable_rh:
            findings.append(CheckFinding(
                "info", "stability", f"step {step}: Routh-Hurwitz margin {report.rh_margin:.6g}"
            ))
        else:
            findings.append(CheckFinding(
                "error", "stability", f"step {step}: unstable linear part (margin {report.rh_margin:.6g})"
            ))
    return findings


class TwoNodeClusterExperiment(BaseExperiment):
    """Fidelity with the target cluster during (pre-cooling and) switching."""

    name = "two-node-cluster"

    def _plan(self, cfg: TwoNodeClusterConfig) -> SwitchingPlan:
        spec = ClusterSpec(cfg.adjacency_matrix(), cfg.squeezing, cfg.cubic)
        return SwitchingPlan(
            spec,
            cfg.beta,
            step_duration=cfg.step_duration,
            precool=cfg.precool,
            cooling_duration=cfg.cooling_duration,
        )

    def run_point(self, cfg: TwoNodeClusterConfig, point: Dict[str, Any]) -> PointResult:
        plan = self._plan(cfg)
        n = plan.num_steps
        params = PhysicalParams.uniform(n, cfg.kappa, Gamma_m=cfg.gamma_m, nbar=cfg.nbar)
        start_nbar = cfg.nbar if cfg.initial == "thermal" else [0.0] * n
        initial = thermal_mechanical_state(start_nbar, cfg.mechanical_cutoffs, cfg.truncation_tol)
        target = cluster_state(plan.spec, cfg.mechanical_cutoffs, cfg.truncation_tol)
        result = run_switching(
            plan, initial, params, cfg.cavity_cutoff, sample_interval=cfg.sample_interval, target=target
        )
        report = truncation_report(result.final_mechanical)
        metadata = {
            "peak_fidelity": result.peak_fidelity,
            "final_fidelity": result.final_fidelity,
            "stages": [
                {"stage": label, "start": start, "end": end} for label, start, end in result.boundaries
            ],
            "final_collective_occupation": float(result.collective_occupation[-1]),
        }
        return PointResult(result.rows(), truncation=report.to_dict(), metadata=metadata)

    def checks(self, cfg: TwoNodeClusterConfig) -> List[CheckFinding]:
        try:
            plan = self._plan(cfg)
        except SimulationError as e:
            return [CheckFinding("error", "cluster", e.message)]
        return switching_findings(plan, cfg.kappa)

    def cutoffs(self, cfg: TwoNodeClusterConfig) -> Dict[str, Any]:
        return {"cavity": cfg.cavity_cutoff, "mechanical": list(cfg.mechanical_cutoffs)}

    def summarize(self, cfg, rows, points) -> Dict[str, Any]:
        return dict(points[0].metadata)


class CubicGateExperiment(BaseExperiment):
    """Outcome-averaged gate fidelity per (n̄, Γ_m) grid point."""

    name = "cubic-gate"

    def grid(self, cfg: CubicGateConfig) -> List[Dict[str, Any]]:
        return [
            {"nbar": nbar, "gamma_m": gamma_m}
            for nbar, gamma_m in itertools.product(cfg.nbar, cfg.gamma_m)
        ]

    def run_point(self, cfg: CubicGateConfig, point: Dict[str, Any]) -> PointResult:
        nbar, gamma_m = point["nbar"], point["gamma_m"]
        params = None
        if cfg.preparation == "switching":
            params = PhysicalParams.uniform(2, cfg.kappa, Gamma_m=gamma_m, nbar=nbar)
        result = cubic_gate_pipeline(
            cfg.input_s,
            cfg.gamma,
            cfg.n_samples,
            cfg.seed,
            cfg.mechanical_cutoffs,
            output_s=cfg.output_s,
            params=params,
            beta=cfg.beta,
            precool_modes=cfg.precool,
            cavity_cutoff=cfg.cavity_cutoff,
            tol=cfg.truncation_tol,
        )
        row = {
            "nbar": nbar,
            "gamma_m": gamma_m,
            "average_fidelity": result.average_fidelity,
            "std_fidelity": result.std_fidelity,
            "n_samples": result.n_samples,
        }
        samples = [
            {
                "nbar": nbar,
                "gamma_m": gamma_m,
                "sample": sample.index,
                "outcome": sample.outcome,
                "density": sample.density,
                "fidelity": sample.fidelity,
            }
            for sample in result.samples
        ]
        return PointResult([row], extra_rows=samples)

    def checks(self, cfg: CubicGateConfig) -> List[CheckFinding]:
        output_s = cfg.input_s if cfg.output_s is None else cfg.output_s
        try:
            spec = two_node_cluster(cfg.input_s, output_s, cfg.gamma)
            plan = SwitchingPlan(spec, cfg.beta, precool=cfg.precool)
        except SimulationError as e:
            return [CheckFinding("error", "cluster", e.message)]
        if cfg.preparation == "direct":
            return [CheckFinding("info", "preparation", "cluster built directly, no dynamics")]
        return switching_findings(plan, cfg.kappa)

    def cutoffs(self, cfg: CubicGateConfig) -> Dict[str, Any]:
        cutoffs = {"mechanical": list(cfg.mechanical_cutoffs)}
        if cfg.preparation == "switching":
            cutoffs["cavity"] = cfg.cavity_cutoff
        return cutoffs
