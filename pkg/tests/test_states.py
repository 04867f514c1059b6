#!/usr/bin/env python3
"""
Tests for squeezed, cubic-phase, thermal and cluster state constructors.
"""

import os
import sys
import unittest

import numpy as np

# Add the project root to Python path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from optomech.core.errors import DimensionError, DomainError, ResourceError, TruncationError
from optomech.core.fock import QState, TensorSpace, embed, matrix_exp, number, quadratures
from optomech.services.hamiltonians import s_of_r
from optomech.services.states import (
    ClusterSpec,
    cluster_state,
    cubic_phase_state,
    default_mechanical_cutoff,
    r_of_s,
    squeezed_vacuum,
    thermal_state,
    vacuum,
)


def moment(state: QState, matrix: np.ndarray) -> float:
    return float(np.real(np.vdot(state.data, matrix @ state.data)))


class SqueezedVacuumTestCase(unittest.TestCase):
    """S(s)|0⟩ from the even-Fock expansion."""

    def test_quadrature_variances(self):
        s = 2.0
        state = squeezed_vacuum(s, 80)
        q, p = quadratures(80)
        self.assertAlmostEqual(moment(state, (q @ q).matrix), s * s / 2, places=6)
        self.assertAlmostEqual(moment(state, (p @ p).matrix), 1 / (2 * s * s), places=6)

    def test_unit_squeezing_is_vacuum(self):
        np.testing.assert_allclose(squeezed_vacuum(1.0, 5).data, vacuum(5).data, atol=1e-15)

    def test_only_even_levels_populated(self):
        state = squeezed_vacuum(1.5, 20)
        np.testing.assert_allclose(state.data[1::2], np.zeros(10), atol=0)

    def test_truncation_loss_reported_and_enforced(self):
        state = squeezed_vacuum(1.5, 30)
        self.assertGreaterEqual(state.truncation_loss, 0.0)
        self.assertLess(state.truncation_loss, 1e-6)
        with self.assertRaises(TruncationError):
            squeezed_vacuum(3.0, 10)

    def test_non_positive_squeezing_rejected(self):
        with self.assertRaises(DomainError):
            squeezed_vacuum(0.0, 10)


class CubicPhaseStateTestCase(unittest.TestCase):
    """e^{iγq³} S(s)|0⟩."""

    def test_zero_cubicity_is_squeezed_vacuum(self):
        np.testing.assert_allclose(cubic_phase_state(0.0, 1.4, 30).data, squeezed_vacuum(1.4, 30).data)

    def test_position_statistics_unchanged(self):
        cutoff = 40
        squeezed = squeezed_vacuum(1.4, cutoff)
        cubic = cubic_phase_state(0.2, 1.4, cutoff)
        q, _ = quadratures(cutoff)
        for power in (q, q @ q, q @ q @ q):
            self.assertAlmostEqual(moment(cubic, power.matrix), moment(squeezed, power.matrix), places=10)

    def test_momentum_shifted_by_cubic_phase(self):
        cutoff = 60
        gamma, s = 0.1, 1.2
        squeezed = squeezed_vacuum(s, cutoff)
        cubic = cubic_phase_state(gamma, s, cutoff)
        q, p = quadratures(cutoff)
        # ⟨p⟩ = 3γ⟨q²⟩ for a state with ⟨p⟩ = 0 before the phase
        expected = 3 * gamma * moment(squeezed, (q @ q).matrix)
        self.assertAlmostEqual(moment(cubic, p.matrix), expected, places=4)


class ThermalStateTestCase(unittest.TestCase):
    """Truncated Bose-Einstein populations."""

    def test_mean_occupation(self):
        state = thermal_state(1.0, 30, tol=1e-6)
        mean = float(np.real(np.trace(number(30).matrix @ state.data)))
        self.assertAlmostEqual(mean, 1.0, places=6)

    def test_zero_occupation_is_vacuum(self):
        state = thermal_state(0.0, 4)
        np.testing.assert_allclose(np.diag(state.data).real, [1, 0, 0, 0])

    def test_tail_beyond_tolerance_rejected(self):
        with self.assertRaises(TruncationError):
            thermal_state(10.0, 10)

    def test_negative_occupation_rejected(self):
        with self.assertRaises(DomainError):
            thermal_state(-0.1, 10)


class ClusterStateTestCase(unittest.TestCase):
    """E(A) Γ(γ) S(s)|0⟩ through the position eigenbasis."""

    def _reference(self, spec: ClusterSpec, cutoffs):
        """Brute-force product state followed by explicit gate exponentials."""
        space = TensorSpace.mechanical(cutoffs)
        vector = np.ones(1, dtype=complex)
        for s, cutoff in zip(spec.squeezing, cutoffs):
            vector = np.kron(vector, squeezed_vacuum(float(s), cutoff).data)
        positions = [embed(quadratures(c)[0], j, space) for j, c in enumerate(cutoffs)]
        for j, qj in enumerate(positions):
            if spec.cubic[j]:
                vector = matrix_exp(qj @ qj @ qj, 1j * spec.cubic[j]).matrix @ vector
            for k in range(j + 1, len(cutoffs)):
                if spec.adjacency[j, k]:
                    vector = matrix_exp(qj @ positions[k], 1j).matrix @ vector
        return vector

    def test_matches_explicit_gates(self):
        spec = ClusterSpec([[0, 1], [1, 0]], [1.2, 1.3], [0.0, 0.1])
        cutoffs = [14, 14]
        state = cluster_state(spec, cutoffs)
        overlap = abs(np.vdot(self._reference(spec, cutoffs), state.data))
        self.assertAlmostEqual(overlap, 1.0, places=9)

    def test_no_edges_is_product_of_factors(self):
        spec = ClusterSpec(np.zeros((2, 2)), [1.2, 1.0], [0.0, 0.0])
        state = cluster_state(spec, 12)
        expected = np.kron(squeezed_vacuum(1.2, 12).data, vacuum(12).data)
        self.assertAlmostEqual(abs(np.vdot(expected, state.data)), 1.0, places=10)

    def test_dimension_budget(self):
        spec = ClusterSpec([[0, 1], [1, 0]], [1.1, 1.1], [0.0, 0.0])
        with self.assertRaises(ResourceError):
            cluster_state(spec, [20, 20], max_dim=100)

    def test_spec_validation(self):
        with self.assertRaises(DomainError):
            ClusterSpec([[0, 1], [0, 0]], [1.0, 1.0], [0.0, 0.0])
        with self.assertRaises(DomainError):
            ClusterSpec([[0, 2], [2, 0]], [1.0, 1.0], [0.0, 0.0])
        with self.assertRaises(DomainError):
            ClusterSpec([[1, 0], [0, 0]], [1.0, 1.0], [0.0, 0.0])
        with self.assertRaises(DimensionError):
            ClusterSpec([[0, 1], [1, 0]], [1.0], [0.0, 0.0])

    def test_permuted_relabels_modes(self):
        spec = ClusterSpec([[0, 1], [1, 0]], [1.2, 1.5], [0.0, 0.1])
        swapped = spec.permuted([1, 0])
        np.testing.assert_allclose(swapped.squeezing, [1.5, 1.2])
        np.testing.assert_allclose(swapped.cubic, [0.1, 0.0])


class SqueezingParameterTestCase(unittest.TestCase):
    """s(r) and its inverse."""

    def test_round_trip(self):
        for r in (0.0, 0.33, 0.52, 0.9):
            self.assertAlmostEqual(r_of_s(s_of_r(r)), r, places=12)

    def test_default_cutoff_floor(self):
        self.assertEqual(default_mechanical_cutoff(1.0), 20)
        self.assertEqual(default_mechanical_cutoff(2.0, 0.5), 90)


if __name__ == "__main__":
    unittest.main()
