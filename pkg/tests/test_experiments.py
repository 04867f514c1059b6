#!/usr/bin/env python3
"""
Tests for the experiment registry, executor and output files.
"""

import csv
import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Add the project root to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from optomech.core.errors import ConfigError, InstabilityError
from optomech.experiments import (
    ExperimentCategory,
    ExperimentExecutor,
    ExperimentResult,
    execute_experiment,
    get_experiment_registry,
    output_paths,
    write_outputs,
)
from optomech.experiments.executor import HANDLER_TYPES, format_value
from optomech.models.experiment import EXPERIMENT_NAMES, parse_config


def stability_config(**overrides):
    data = {
        "experiment": "stability-scan", "kappa": 10.0,
        "g2_over_g1": [0.5, 2.0], "phases": [0.0, 1.0],
    }
    data.update(overrides)
    return parse_config(data)


def cubic_steady_config(**overrides):
    data = {
        "experiment": "cubic-steady", "r": 0.33, "gamma": 0.05, "kappa": 10.0,
        "cavity_cutoff": 2, "mechanical_cutoffs": [24], "method": "direct",
    }
    data.update(overrides)
    return parse_config(data)


class RegistryTestCase(unittest.TestCase):
    """Experiment definitions and handler wiring."""

    def setUp(self):
        self.registry = get_experiment_registry()

    def test_every_experiment_registered(self):
        names = {definition.name for definition in self.registry.get_all()}
        self.assertEqual(names, set(EXPERIMENT_NAMES))
        self.assertEqual(set(HANDLER_TYPES), set(EXPERIMENT_NAMES))

    def test_unknown_name(self):
        self.assertIsNone(self.registry.get("teleportation"))
        with self.assertRaises(ConfigError):
            ExperimentExecutor(workers=1).get_handler("teleportation")

    def test_categories(self):
        protocols = {d.name for d in self.registry.get_by_category(ExperimentCategory.PROTOCOL)}
        self.assertEqual(protocols, {"two-node-cluster", "cubic-gate"})
        self.assertIn("sample_columns", self.registry.get("cubic-gate").to_dict())


class ValidationTestCase(unittest.TestCase):
    """Physics pre-checks without time evolution."""

    def setUp(self):
        self.executor = ExperimentExecutor(workers=1)

    def test_unstable_cubic_recipe(self):
        report = self.executor.validate(cubic_steady_config(r=1.2))
        self.assertFalse(report.valid)
        self.assertTrue(any(f.check == "stability" and f.level == "error" for f in report.findings))

    def test_unstable_run_refused(self):
        with self.assertRaises(InstabilityError):
            self.executor.run(cubic_steady_config(r=1.2))

    def test_rwa_margin_warning(self):
        cfg = parse_config({
            "experiment": "rwa-check", "g1": 0.03, "r": 0.33, "gamma": 0.1414, "kappa": 0.3,
            "R": 100.0, "mechanical_cutoff": 10, "duration": 1.0, "sample_interval": 0.5,
        })
        report = self.executor.validate(cfg)
        self.assertTrue(report.valid)
        self.assertEqual([f.check for f in report.warnings], ["rwa_margin"])
        self.assertEqual(report.to_dict()["experiment"], "rwa-check")

    def test_direct_gate_has_no_dynamics_checks(self):
        cfg = parse_config({
            "experiment": "cubic-gate", "input_s": 1.5, "gamma": 0.1, "mechanical_cutoffs": [20, 20],
        })
        report = self.executor.validate(cfg)
        self.assertTrue(report.valid)
        self.assertEqual(report.findings[0].check, "preparation")


class ExecutorRunTestCase(unittest.TestCase):
    """Grid expansion, row assembly and metadata."""

    def test_stability_scan(self):
        result = ExperimentExecutor(workers=1).run(stability_config())
        self.assertEqual(result.row_count, 4)
        self.assertEqual([row["g2_over_g1"] for row in result.rows], [0.5, 0.5, 2.0, 2.0])
        self.assertEqual([row["stable_eig"] for row in result.rows], [True, True, False, False])
        summary = result.metadata["summary"]
        self.assertEqual(summary["agreement"], 1.0)
        self.assertEqual(result.metadata["grid_points"], 4)
        self.assertEqual(result.metadata["config_hash"], stability_config().config_hash())

    def test_rows_do_not_depend_on_worker_count(self):
        serial = ExperimentExecutor(workers=1).run(stability_config())
        parallel = ExperimentExecutor(workers=2).run(stability_config())
        self.assertEqual(serial.rows, parallel.rows)
        self.assertEqual(parallel.metadata["workers"], 2)

    def test_cubic_steady_state(self):
        result = ExperimentExecutor(workers=1).run(cubic_steady_config())
        self.assertEqual(result.row_count, 1)
        row = result.rows[0]
        self.assertGreater(row["fidelity"], 0.97)
        self.assertLessEqual(row["purity"], 1.0 + 1e-9)
        self.assertEqual(result.metadata["cutoffs"], {"cavity": 2, "mechanical": [24]})
        self.assertIsNotNone(result.metadata["truncation"])
        self.assertNotIn("convergence", result.metadata["summary"])
        diagnostics = result.metadata["diagnostics"]
        self.assertGreater(diagnostics["counters"]["lindblad.rhs"], 0)
        operations = diagnostics["operations"]["operation_stats"]
        self.assertEqual(operations["experiment.cubic-steady"]["count"], 1)
        self.assertEqual(operations["lindblad.steady_state"]["count"], 1)
        self.assertGreater(diagnostics["operator_cache"]["total_requests"], 0)

    def test_cubic_steady_cutoff_convergence_in_summary(self):
        result = ExperimentExecutor(workers=1).run(cubic_steady_config(mechanical_cutoffs=[20, 24]))
        study = result.metadata["summary"]["convergence"]
        self.assertEqual(study["cutoffs"], [20, 24])
        self.assertEqual(study["values"], [row["fidelity"] for row in result.rows])
        self.assertAlmostEqual(study["deltas"][0], abs(study["values"][1] - study["values"][0]), places=15)
        self.assertEqual(study["converged"], study["deltas"][0] < study["threshold"])

    def test_cubic_gate_samples(self):
        cfg = parse_config({
            "experiment": "cubic-gate", "input_s": 1.2, "gamma": 0.05,
            "mechanical_cutoffs": [20, 20], "n_samples": 5, "seed": 3,
        })
        result = ExperimentExecutor(workers=1).run(cfg)
        self.assertEqual(result.row_count, 1)
        self.assertEqual(len(result.extra_rows), 5)
        self.assertEqual(result.rows[0]["n_samples"], 5)
        self.assertEqual([row["sample"] for row in result.extra_rows], [0, 1, 2, 3, 4])
        self.assertEqual(result.metadata["sample_count"], 5)

    def test_two_node_cluster(self):
        cfg = parse_config({
            "experiment": "two-node-cluster", "kappa": 10.0, "squeezing": [1.1, 1.1], "cubic": [0.0, 0.0],
            "mechanical_cutoffs": [6, 6], "cavity_cutoff": 2, "step_duration": 2.0, "sample_interval": 1.0,
        })
        result = ExperimentExecutor(workers=1).run(cfg)
        self.assertEqual([row["time"] for row in result.rows], [0.0, 1.0, 2.0, 3.0, 4.0])
        self.assertEqual([row["step"] for row in result.rows], ["step1"] * 3 + ["step2"] * 2)
        self.assertEqual(len(result.metadata["summary"]["stages"]), 2)


class OutputTestCase(unittest.TestCase):
    """CSV tables and JSON sidecars."""

    def test_format_value(self):
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(3), "3")
        self.assertEqual(format_value(0.1), "0.10000000000000001")
        self.assertEqual(format_value("step1"), "step1")

    def test_output_paths(self):
        paths = output_paths("out/scan")
        self.assertEqual(paths["csv"], Path("out/scan.csv"))
        self.assertEqual(paths["metadata"], Path("out/scan.json"))
        self.assertEqual(paths["samples"], Path("out/scan_samples.csv"))

    def test_write_outputs(self):
        result = ExperimentExecutor(workers=1).run(stability_config())
        with tempfile.TemporaryDirectory() as tmp:
            written = write_outputs(result, Path(tmp) / "nested" / "scan.csv")
            self.assertEqual(set(written), {"csv", "metadata"})
            with open(written["csv"], newline="", encoding="utf-8") as handle:
                table = list(csv.reader(handle))
            self.assertEqual(table[0], result.columns)
            self.assertEqual(len(table), 5)
            self.assertEqual(table[1][3], "true")
            with open(written["metadata"], encoding="utf-8") as handle:
                metadata = json.load(handle)
            for key in ("experiment", "config_hash", "config", "columns", "row_count", "version", "seed", "diagnostics"):
                self.assertIn(key, metadata)

    def test_sample_table_written(self):
        result = ExperimentResult(
            True, "cubic-gate", columns=["a"], rows=[{"a": 1}],
            extra_columns=["b"], extra_rows=[{"b": 0.5}], metadata={"experiment": "cubic-gate"},
        )
        with tempfile.TemporaryDirectory() as tmp:
            written = write_outputs(result, Path(tmp) / "gate.csv")
            self.assertTrue(written["samples"].exists())
            self.assertEqual(written["samples"].read_text(encoding="utf-8"), "b\n0.5\n")

    def test_execute_experiment(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = execute_experiment(stability_config(), Path(tmp) / "scan.csv", workers=1)
            self.assertTrue((Path(tmp) / "scan.json").exists())
            self.assertTrue(result.success)


if __name__ == "__main__":
    unittest.main()
