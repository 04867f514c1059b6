#!/usr/bin/env python3
"""
Tests for drive couplings, effective Hamiltonians and stability analysis.
"""

import math
import os
import sys
import unittest

import numpy as np

# Add the project root to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from optomech.core.errors import DimensionError, DomainError, InstabilityError
from optomech.core.fock import TensorSpace, annihilation, embed
from optomech.services.hamiltonians import (
    DriveSet,
    PhysicalParams,
    classical_steady_state,
    cooling_drives,
    counter_rotating_blocks,
    counter_rotating_hamiltonian,
    cubic_drive_couplings,
    cubic_rwa_ratio,
    drift_matrix,
    drive_couplings_from_amplitudes,
    full_hamiltonian,
    measurement_drives,
    measurement_hamiltonian,
    rwa_hamiltonian,
    rwa_validity,
    s_of_r,
)
from optomech.services.states import cubic_phase_state


class DriveSetTestCase(unittest.TestCase):
    """Coupling containers and physical parameters."""

    def test_shape_checked(self):
        with self.assertRaises(DimensionError):
            DriveSet(np.zeros((2, 4)))

    def test_non_finite_rejected(self):
        with self.assertRaises(DomainError):
            DriveSet.single(np.nan)

    def test_uniform_params(self):
        params = PhysicalParams.uniform(2, kappa=10.0, Gamma_m=0.1, nbar=[1.0, 0.5])
        self.assertEqual(params.num_modes, 2)
        np.testing.assert_allclose(params.nbar, [1.0, 0.5])
        self.assertTrue(np.all(np.isnan(params.R)))

    def test_negative_bath_rejected(self):
        with self.assertRaises(DomainError):
            PhysicalParams.uniform(1, kappa=1.0, nbar=-1.0)

    def test_couplings_from_amplitudes(self):
        params = PhysicalParams(kappa=1.0, Omega=[1.0], G_L=[2.0], G_Q=[3.0])
        drives = drive_couplings_from_amplitudes([[1, 1j, 2, 0, 1]], params)
        np.testing.assert_allclose(drives.couplings[0], [2, 2j, 6, 0, 3])


class RwaHamiltonianTestCase(unittest.TestCase):
    """H = a† Σ L_j + H.c."""

    def test_beam_splitter(self):
        space = TensorSpace.optomechanical(3, [4])
        beta = 0.7
        a = embed(annihilation(3), 0, space)
        b = embed(annihilation(4), 1, space)
        expected = beta * (a.dag() @ b + a @ b.dag())
        np.testing.assert_allclose(rwa_hamiltonian(cooling_drives(beta, 1, 1), space).matrix, expected.matrix)

    def test_hermitian_for_cubic_recipe(self):
        space = TensorSpace.optomechanical(3, [10])
        hamiltonian = rwa_hamiltonian(cubic_drive_couplings(1.0, 0.33, 0.1), space)
        self.assertTrue(hamiltonian.is_hermitian())

    def test_mode_count_checked(self):
        with self.assertRaises(DimensionError):
            rwa_hamiltonian(DriveSet.zeros(2), TensorSpace.optomechanical(3, [4]))

    def test_measurement_hamiltonian_matches_drives(self):
        space = TensorSpace.optomechanical(3, [5, 4])
        for phi in (0.0, 0.6, math.pi / 2):
            direct = measurement_hamiltonian(0.8, phi, 2, space)
            from_drives = rwa_hamiltonian(measurement_drives(0.8, phi, 2, 2), space)
            np.testing.assert_allclose(direct.matrix, from_drives.matrix, atol=1e-12)

    def test_measured_mode_must_be_mechanical(self):
        with self.assertRaises(DimensionError):
            measurement_hamiltonian(1.0, 0.0, 0, TensorSpace.optomechanical(3, [4]))


class CubicRecipeTestCase(unittest.TestCase):
    """Drive recipe of the dissipative cubic phase state."""

    def test_coupling_values(self):
        g1, r, gamma = 1.0, 0.33, 0.1
        drives = cubic_drive_couplings(g1, r, gamma)
        quadratic = -3j / (2 * math.sqrt(2)) * gamma * (1 + r) * g1
        np.testing.assert_allclose(drives.couplings[0], [g1, -r * g1, quadratic, quadratic, quadratic])

    def test_target_is_dark_state_of_jump_operator(self):
        cutoff = 60
        r, gamma = 0.33, 0.05
        drives = cubic_drive_couplings(1.0, r, gamma)
        b = annihilation(cutoff).matrix
        bd = b.conj().T
        g1, g2, g3, g4, g5 = drives.couplings[0]
        jump = g1 * b + g2 * bd + g3 * (b @ b) + g4 * (bd @ bd) + g5 * (b @ bd + bd @ b)
        target = cubic_phase_state(gamma, s_of_r(r), cutoff)
        self.assertLess(np.linalg.norm(jump @ target.data), 1e-3)

    def test_unstable_ratio_rejected(self):
        with self.assertRaises(InstabilityError):
            cubic_drive_couplings(1.0, 1.0, 0.1)
        with self.assertRaises(DomainError):
            cubic_drive_couplings(0.0, 0.3, 0.1)

    def test_s_of_r_domain(self):
        self.assertAlmostEqual(s_of_r(0.0), 1.0)
        with self.assertRaises(DomainError):
            s_of_r(1.0)


class StabilityTestCase(unittest.TestCase):
    """Drift matrix and the Routh-Hurwitz criterion."""

    def test_margin_is_coupling_difference(self):
        g1, g2 = 1.0, 0.4 * np.exp(0.9j)
        report = drift_matrix(DriveSet.single(g1, g2), kappa=2.0)
        self.assertAlmostEqual(report.rh_margin, abs(g1) ** 2 - abs(g2) ** 2, places=12)

    def test_stable_and_unstable_sides(self):
        stable = drift_matrix(DriveSet.single(1.0, -0.33), kappa=10.0)
        self.assertTrue(stable.stable_rh)
        self.assertTrue(stable.stable_eig)
        unstable = drift_matrix(DriveSet.single(1.0, -1.2), kappa=10.0)
        self.assertFalse(unstable.stable_rh)
        self.assertFalse(unstable.stable_eig)
        self.assertGreater(unstable.max_real_eigenvalue, 0.0)

    def test_criteria_agree_on_random_drives(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(500):
            g1 = complex(*rng.normal(size=2))
            g2 = complex(*rng.normal(size=2))
            report = drift_matrix(DriveSet.single(g1, g2), kappa=float(rng.uniform(0.5, 5)))
            if abs(report.rh_margin) < 1e-3:
                continue
            checked += 1
            self.assertEqual(report.stable_rh, report.stable_eig)
        self.assertGreater(checked, 490)

    def test_single_mode_only(self):
        with self.assertRaises(DimensionError):
            drift_matrix(DriveSet.zeros(2), kappa=1.0)


class RwaValidityTestCase(unittest.TestCase):
    """Counter-rotating margins."""

    def test_cubic_condition(self):
        drives = cubic_drive_couplings(0.01, 0.33, 0.1414)
        report = rwa_validity(drives, 7.0, 1.0, condition="cubic")
        self.assertAlmostEqual(report.ratio, 0.07)
        self.assertTrue(report.passed)
        self.assertEqual(report.dominant_term, "|R g1|")
        self.assertAlmostEqual(cubic_rwa_ratio(0.01, 7.0, 1.0), 0.07)

    def test_large_ratio_fails(self):
        drives = cubic_drive_couplings(0.03, 0.33, 0.1414)
        report = rwa_validity(drives, 100.0, 1.0, condition="cubic")
        self.assertFalse(report.passed)

    def test_unknown_condition_rejected(self):
        with self.assertRaises(DomainError):
            rwa_validity(DriveSet.single(0.1), 1.0, 1.0, condition="other")

    def test_scalar_ratio_matches_report(self):
        for g1, R, Omega in ((0.01, 7.0, 1.0), (0.2, 0.5, 2.0), (0.05, 1.0, 0.3), (0.4, 3.0, 1.0)):
            with self.subTest(g1=g1, R=R, Omega=Omega):
                report = rwa_validity(cubic_drive_couplings(g1, 0.33, 0.1), R, Omega, condition="cubic")
                self.assertAlmostEqual(cubic_rwa_ratio(g1, R, Omega), report.ratio, places=15)
        with self.assertRaises(DomainError):
            cubic_rwa_ratio(0.01, 0.0, 1.0)


class CounterRotatingTestCase(unittest.TestCase):
    """Time-dependent corrections beyond the rotating-wave approximation."""

    def setUp(self):
        self.space = TensorSpace.optomechanical(2, [5])
        self.drives = cubic_drive_couplings(0.05, 0.33, 0.1)
        self.R, self.Omega = 7.0, 1.0

    def test_full_hamiltonian_is_hermitian(self):
        hamiltonian = full_hamiltonian(self.drives, self.R, self.Omega, self.space)
        for t in (0.0, 0.3, 2.1):
            self.assertTrue(hamiltonian(t).is_hermitian())

    def test_period_start_sums_blocks(self):
        blocks = counter_rotating_blocks(self.drives, self.R, self.space)
        expected = sum(block.matrix + block.matrix.conj().T for block in blocks)
        period = 2 * math.pi / self.Omega
        np.testing.assert_allclose(
            counter_rotating_hamiltonian(self.drives, self.R, self.Omega, period, self.space).matrix,
            expected, atol=1e-12,
        )

    def test_period_average_vanishes(self):
        times = np.linspace(0.0, 2 * math.pi / self.Omega, 64, endpoint=False)
        average = np.mean([
            counter_rotating_hamiltonian(self.drives, self.R, self.Omega, t, self.space).matrix for t in times
        ], axis=0)
        scale = np.linalg.norm(counter_rotating_blocks(self.drives, self.R, self.space)[0].matrix)
        self.assertLess(np.linalg.norm(average), 1e-10 * scale)

    def test_norm_bound_covers_instantaneous_norm(self):
        hamiltonian = full_hamiltonian(self.drives, self.R, self.Omega, self.space)
        instantaneous = np.max(np.sum(np.abs(hamiltonian.matrix_at(0.7)), axis=1))
        self.assertLessEqual(instantaneous, hamiltonian.norm_bound() + 1e-12)


class ClassicalSteadyStateTestCase(unittest.TestCase):
    """Fixed-point solution of the classical displacement equations."""

    def test_linear_coupling_closed_form(self):
        params = PhysicalParams(kappa=1.0, Omega=[1.0], G_L=[1e-3], G_Q=[0.0])
        result = classical_steady_state([0.5, 0.2], [0.1, -0.2], params)
        intensity = float(np.sum(np.abs(result.alpha) ** 2))
        self.assertAlmostEqual(result.Q0[0], -1e-3 * intensity / 1.0, places=9)

    def test_uncoupled_amplitudes(self):
        params = PhysicalParams(kappa=2.0, Omega=[1.0])
        result = classical_steady_state([1.0], [0.5], params)
        self.assertAlmostEqual(complex(result.alpha[0]), -1j / (1.0 - 0.5j), places=12)

    def test_detuning_count_checked(self):
        params = PhysicalParams(kappa=1.0, Omega=[1.0])
        with self.assertRaises(DimensionError):
            classical_steady_state([1.0, 1.0, 1.0], [0.1, 0.2], params)


if __name__ == "__main__":
    unittest.main()
