#!/usr/bin/env python3
"""
Tests for Hamiltonian switching, homodyne measurement and the cubic phase gate.
"""

import math
import os
import sys
import unittest

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import chisquare

# Add the project root to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from optomech.core.errors import DimensionError, DomainError, GridError, RareOutcomeError
from optomech.core.fock import TensorSpace, annihilation, embed, quadratures, tensor_states
from optomech.services.analysis import fidelity_pure_target, mean_occupation
from optomech.services.hamiltonians import PhysicalParams, cubic_drive_couplings
from optomech.services.lindblad import expectation
from optomech.services.protocols import (
    SwitchingPlan,
    collective_mode,
    cubic_gate_pipeline,
    cubic_gate_target,
    f_gate,
    homodyne_grid,
    homodyne_project,
    marginal_density,
    precool,
    run_switching,
    sample_generators,
    sample_homodyne,
    sample_homodyne_outcomes,
    step_drives,
    switching_matrices,
    thermal_mechanical_state,
    two_node_cluster,
    with_cavity_vacuum,
    x_gate,
)
from optomech.services.states import (
    ClusterSpec,
    cluster_state,
    cubic_phase_state,
    r_of_s,
    squeezed_vacuum,
    thermal_state,
    vacuum,
)


class SwitchingMatricesTestCase(unittest.TestCase):
    """Collective-mode coefficients and switching schedules."""

    def test_unsqueezed_pair(self):
        spec = ClusterSpec([[0, 1], [1, 0]], [1.0, 1.0], [0.0, 0.0])
        U, V, W = switching_matrices(spec)
        np.testing.assert_allclose(U, [[1, -0.5j], [-0.5j, 1]])
        np.testing.assert_allclose(V, [[0, -0.5j], [-0.5j, 0]])
        np.testing.assert_allclose(W, np.zeros((2, 2)))

    def test_bogoliubov_normalization_on_random_graphs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            upper = np.triu(rng.integers(0, 2, size=(n, n)), 1)
            spec = ClusterSpec(upper + upper.T, rng.uniform(0.5, 3.0, n), rng.normal(size=n))
            U, V, W = switching_matrices(spec)
            np.testing.assert_allclose(np.diag(np.diag(W)), W, atol=0)
            gaussian = ClusterSpec(spec.adjacency, spec.squeezing, np.zeros(n))
            U, V, _ = switching_matrices(gaussian)
            np.testing.assert_allclose(U @ U.conj().T - V @ V.conj().T, np.eye(n), atol=1e-10)

    def test_single_node_reduces_to_cubic_recipe(self):
        s, gamma, beta = 1.5, 0.1, 0.7
        plan = SwitchingPlan(ClusterSpec([[0]], [s], [gamma]), beta=beta)
        drives = step_drives(plan, 1)
        recipe = cubic_drive_couplings(beta * plan.U[0, 0].real, r_of_s(s), gamma)
        np.testing.assert_allclose(drives.couplings, recipe.couplings, atol=1e-10)

    def test_cluster_is_dark_state_of_collective_modes(self):
        spec = ClusterSpec([[0, 1], [1, 0]], [1.2, 1.2], [0.0, 0.0])
        cutoffs = [30, 30]
        plan = SwitchingPlan(spec, beta=1.0)
        state = cluster_state(spec, cutoffs)
        space = TensorSpace.optomechanical(1, cutoffs)
        for step in (1, 2):
            d = collective_mode(plan, step, space).matrix
            self.assertLess(np.linalg.norm(d @ state.data), 1e-3)

    def test_default_durations(self):
        spec = two_node_cluster(1.2, 1.2, 0.0)
        plan = SwitchingPlan(spec, beta=0.5)
        self.assertAlmostEqual(plan.step_duration, 20.0)
        self.assertAlmostEqual(plan.cooling_duration, 20.0)
        self.assertEqual(plan.num_steps, 2)

    def test_plan_validation(self):
        spec = two_node_cluster(1.2, 1.2, 0.0)
        with self.assertRaises(DomainError):
            SwitchingPlan(spec, beta=0.0)
        with self.assertRaises(DomainError):
            SwitchingPlan(spec, beta=1.0, step_duration=-1.0)
        with self.assertRaises(DimensionError):
            step_drives(SwitchingPlan(spec, beta=1.0), 3)

    def test_step_drives_use_matrix_rows(self):
        spec = two_node_cluster(1.3, 1.1, 0.2)
        plan = SwitchingPlan(spec, beta=2.0)
        drives = step_drives(plan, 2)
        np.testing.assert_allclose(drives.g1, 2.0 * plan.U[1])
        np.testing.assert_allclose(drives.g2, 2.0 * plan.V[1])
        np.testing.assert_allclose(drives.g3, 2.0 * plan.W[1])


class SwitchingRunTestCase(unittest.TestCase):
    """Dissipative preparation of a two-node cluster."""

    def setUp(self):
        self.spec = ClusterSpec([[0, 1], [1, 0]], [1.1, 1.1], [0.0, 0.0])
        self.params = PhysicalParams.uniform(2, kappa=10.0)
        self.initial = thermal_mechanical_state([0.0, 0.0], [8, 8])

    def test_fidelity_improves(self):
        plan = SwitchingPlan(self.spec, beta=1.0)
        result = run_switching(plan, self.initial, self.params, cavity_cutoff=2, sample_interval=1.0)
        self.assertGreater(result.final_fidelity, result.fidelities[0])
        self.assertEqual(sorted(set(result.stages)), ["step1", "step2"])
        self.assertEqual(result.final_mechanical.space.cutoffs, (8, 8))
        self.assertAlmostEqual(result.times[-1], 20.0)
        self.assertEqual(len(result.rows()), len(result.times))

    def test_precool_stages(self):
        plan = SwitchingPlan(self.spec, beta=1.0, step_duration=2.0, precool=True, cooling_duration=1.0)
        result = run_switching(plan, self.initial, self.params, cavity_cutoff=2)
        self.assertEqual([label for label, _, _ in result.boundaries], ["cool1", "cool2", "step1", "step2"])
        self.assertAlmostEqual(result.boundaries[-1][2], 6.0)

    def test_mode_count_checked(self):
        plan = SwitchingPlan(self.spec, beta=1.0)
        with self.assertRaises(DimensionError):
            run_switching(plan, self.initial, PhysicalParams.uniform(1, kappa=10.0))

    def test_precool_single_oscillator(self):
        params = PhysicalParams.uniform(1, kappa=10.0)
        rho = with_cavity_vacuum(thermal_state(1.0, 8, tol=0.01), 3)
        cooled = precool(params, 1, 1.0, 20.0, rho)
        self.assertLess(mean_occupation(cooled, 1), 0.1)


class HomodyneTestCase(unittest.TestCase):
    """Projective quadrature measurement."""

    def setUp(self):
        self.pair = tensor_states([vacuum(20), squeezed_vacuum(1.3, 20)])

    def test_vacuum_outcome_density(self):
        posterior, density = homodyne_project(self.pair, 0, 0.0, 0.0)
        self.assertAlmostEqual(density, 1 / math.sqrt(math.pi), places=10)
        self.assertEqual(posterior.space.cutoffs, (20,))
        self.assertAlmostEqual(fidelity_pure_target(squeezed_vacuum(1.3, 20), posterior), 1.0, places=10)

    def test_mixed_input_matches_pure_input(self):
        pure_posterior, pure_density = homodyne_project(self.pair, 1, math.pi / 2, 0.4)
        mixed_posterior, mixed_density = homodyne_project(self.pair.to_mixed(), 1, math.pi / 2, 0.4)
        self.assertAlmostEqual(pure_density, mixed_density, places=12)
        np.testing.assert_allclose(mixed_posterior.data, pure_posterior.density_matrix(), atol=1e-12)

    def test_rare_outcome(self):
        with self.assertRaises(RareOutcomeError):
            homodyne_project(self.pair, 0, 0.0, 8.0)
        with self.assertRaises(DomainError):
            homodyne_project(self.pair, 0, 0.0, 60.0)

    def test_marginal_of_squeezed_state(self):
        s = 1.5
        grid = np.linspace(-4, 4, 41)
        density = marginal_density(squeezed_vacuum(s, 40), 0, 0.0, grid)
        expected = np.exp(-grid ** 2 / s ** 2) / math.sqrt(math.pi * s ** 2)
        np.testing.assert_allclose(density, expected, atol=1e-8)

    def test_grid_covers_marginal(self):
        grid = homodyne_grid(vacuum(20), 0, 0.0)
        self.assertEqual(grid.size, 1001)
        self.assertAlmostEqual(grid[-1], 8 / math.sqrt(2), places=10)
        with self.assertRaises(GridError):
            homodyne_grid(vacuum(20), 0, 0.0, width=1.0)

    def test_sampled_statistics(self):
        outcomes = sample_homodyne_outcomes(vacuum(20), 0, 0.0, 10000, rng_seed=3)
        self.assertLess(abs(np.mean(outcomes)), 0.03)
        self.assertLess(abs(np.var(outcomes) - 0.5) / 0.5, 0.05)

    def test_sampled_cubic_marginal_passes_chi_square(self):
        state = cubic_phase_state(0.2, 1.3, 30)
        grid = homodyne_grid(state, 0, math.pi / 2)
        outcomes = sample_homodyne_outcomes(state, 0, math.pi / 2, 10000, rng_seed=11, grid=grid)
        cdf = cumulative_trapezoid(marginal_density(state, 0, math.pi / 2, grid), grid, initial=0.0)
        # 25 bins of equal probability under the marginal
        edges = np.interp(np.linspace(0.0, 1.0, 26), cdf / cdf[-1], grid)
        counts, _ = np.histogram(outcomes, bins=edges)
        self.assertEqual(counts.sum(), 10000)
        self.assertGreater(chisquare(counts).pvalue, 0.01)

    def test_sample_is_reproducible(self):
        first = sample_homodyne(self.pair, 1, 0.0, rng_seed=42)
        second = sample_homodyne(self.pair, 1, 0.0, rng_seed=42)
        self.assertEqual(first, second)
        self.assertEqual(first.mode, 1)
        self.assertGreater(first.density, 0.0)


class GateTestCase(unittest.TestCase):
    """Single-mode gates and the gate-teleportation target."""

    def test_x_gate_displaces_position(self):
        cutoff = 40
        q, _ = quadratures(cutoff)
        shifted = x_gate(1.0, cutoff).matrix @ vacuum(cutoff).data
        self.assertAlmostEqual(np.real(np.vdot(shifted, q.matrix @ shifted)), 1.0, places=6)

    def test_fourier_squared_is_parity(self):
        square = f_gate(10).matrix @ f_gate(10).matrix
        np.testing.assert_allclose(square, np.diag((-1.0) ** np.arange(10)), atol=1e-12)

    def test_trivial_target_is_fourier_transform(self):
        phi = squeezed_vacuum(1.4, 30)
        target = cubic_gate_target(phi, 0.0, 0.0)
        np.testing.assert_allclose(target.data, f_gate(30).matrix @ phi.data, atol=1e-12)

    def test_target_needs_pure_single_mode(self):
        with self.assertRaises(DimensionError):
            cubic_gate_target(thermal_state(0.1, 10), 0.1, 0.0)

    def test_target_position_mean_follows_outcome(self):
        cutoff = 60
        phi = squeezed_vacuum(1.2, cutoff)
        target = cubic_gate_target(phi, 0.0, 0.8)
        q, _ = quadratures(cutoff)
        self.assertAlmostEqual(expectation(q, target).real, 0.8, places=5)


class CubicGatePipelineTestCase(unittest.TestCase):
    """Outcome-averaged gate fidelity."""

    def test_generators_independent_of_sample_count(self):
        self.assertEqual(sample_generators(7, 3)[1].random(), sample_generators(7, 5)[1].random())

    def test_two_node_cluster(self):
        spec = two_node_cluster(1.5, 2.0, 0.1)
        np.testing.assert_allclose(spec.squeezing, [1.5, 2.0])
        np.testing.assert_allclose(spec.cubic, [0.0, 0.1])

    def test_direct_pipeline_is_reproducible(self):
        kwargs = dict(input_s=1.2, gamma=0.05, n_samples=4, rng_seed=5, cutoffs=[20, 20])
        first = cubic_gate_pipeline(**kwargs)
        second = cubic_gate_pipeline(**kwargs)
        self.assertEqual(first.n_samples, 4)
        self.assertEqual([s.outcome for s in first.samples], [s.outcome for s in second.samples])
        self.assertAlmostEqual(first.average_fidelity, second.average_fidelity, places=14)
        for sample in first.samples:
            self.assertGreater(sample.fidelity, 0.0)
            self.assertLessEqual(sample.fidelity, 1.0 + 1e-12)
            self.assertGreater(sample.density, 0.0)

    def test_gaussian_gate_fidelity_at_desk_cutoff(self):
        result = cubic_gate_pipeline(2.5, 0.0, 10, 2024, [40, 40])
        self.assertEqual(result.n_samples, 10)
        self.assertGreaterEqual(result.average_fidelity, 0.99)

    def test_sample_count_validated(self):
        with self.assertRaises(DomainError):
            cubic_gate_pipeline(1.2, 0.05, 0, 1, [10, 10])


if __name__ == "__main__":
    unittest.main()
