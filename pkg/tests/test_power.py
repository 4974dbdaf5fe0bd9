#!/usr/bin/env python3
"""
Tests for power iteration, Kostlan's bounds and the GUE experiments.
"""

import math
import unittest
import sys
from pathlib import Path

import numpy as np

# Add the parent directory to the path so we can import the module
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from wacc.errors import DegenerateSpectrum, OrthogonalStart, PreconditionViolated, ZeroIterate
from wacc.power import (
    expected_rho_bounds,
    gue_spectral_facts,
    gue_weak_experiment,
    kostlan_bounds,
    mc_rho,
    power_iterate,
    power_iterate_batch,
    summarize_rho_samples,
)
from wacc.sampling import RngStream, gue_matrix, uniform_projective

DIAG_2_1 = np.diag([2.0, 1.0])
DIAGONAL_START = np.array([1.0, 1.0]) / math.sqrt(2)


class TestPowerIterate(unittest.TestCase):
    """Test cases for a single power iteration run"""

    def test_start_on_boundary_needs_no_step(self):
        """At alpha = pi/4 the start (1,1)/sqrt(2) already qualifies"""
        result = power_iterate(DIAG_2_1, DIAGONAL_START, math.pi / 4, 100)
        self.assertTrue(result.converged)
        self.assertEqual(result.iterations, 0)

    def test_two_steps_at_pi_over_8(self):
        """The k-th iterate is parallel to (2^k, 1); tan(pi/8) is about 0.414"""
        result = power_iterate(DIAG_2_1, DIAGONAL_START, math.pi / 8, 100)
        self.assertTrue(result.converged)
        self.assertEqual(result.iterations, 2)
        self.assertAlmostEqual(result.final_distance, math.atan(0.25), places=10)
        self.assertAlmostEqual(result.lower_bound, 1.2716, places=4)
        self.assertAlmostEqual(result.upper_bound, 1.2716, places=4)
        self.assertTrue(result.within_bounds())

    def test_orthogonal_start_never_converges(self):
        result = power_iterate(DIAG_2_1, np.array([0.0, 1.0]), math.pi / 8, 50)
        self.assertFalse(result.converged)
        self.assertEqual(result.iterations, 50)
        self.assertTrue(math.isnan(result.lower_bound))
        self.assertIsNone(result.within_bounds())

    def test_start_in_kernel(self):
        with self.assertRaises(ZeroIterate):
            power_iterate(np.diag([1.0, 0.0]), np.array([0.0, 1.0]), math.pi / 8, 10)

    def test_rejects_bad_alpha(self):
        for alpha in (0.0, math.pi / 2, -1.0):
            with self.assertRaises(PreconditionViolated):
                power_iterate(DIAG_2_1, DIAGONAL_START, alpha, 10)

    def test_scaling_does_not_change_counts(self):
        """c A and A give the same counts and the same iterates for c > 0"""
        A = gue_matrix(RngStream(40), 6)
        starts = uniform_projective(RngStream(41), 6, size=20)
        counts, converged, iterates = power_iterate_batch(A, starts, math.pi / 8, 10_000)
        for c in (1e-3, 7.5, 1e4):
            scaled_counts, scaled_converged, scaled_iterates = power_iterate_batch(c * A, starts, math.pi / 8, 10_000)
            np.testing.assert_array_equal(scaled_counts, counts)
            np.testing.assert_array_equal(scaled_converged, converged)
            np.testing.assert_allclose(scaled_iterates, iterates, atol=1e-10)

    def test_counts_non_increasing_in_alpha(self):
        """A wider target angle is never reached later"""
        A = gue_matrix(RngStream(42), 8)
        starts = uniform_projective(RngStream(43), 8, size=50)
        alphas = [math.pi / 64, math.pi / 16, math.pi / 8, math.pi / 4, 3 * math.pi / 8]
        counts = np.array([power_iterate_batch(A, starts, alpha, 100_000)[0] for alpha in alphas])
        self.assertTrue(np.all(np.diff(counts, axis=0) <= 0))

    def test_complex_start(self):
        """A global phase on the start does not change the count"""
        plain = power_iterate(DIAG_2_1, DIAGONAL_START, math.pi / 8, 100)
        rotated = power_iterate(DIAG_2_1, 1j * DIAGONAL_START, math.pi / 8, 100)
        self.assertEqual(plain.iterations, rotated.iterations)


class TestKostlanBounds(unittest.TestCase):
    """Test cases for the per-start and expected bounds"""

    def test_degenerate_spectrum(self):
        with self.assertRaises(DegenerateSpectrum):
            kostlan_bounds(np.diag([1.0, -1.0]), DIAGONAL_START, math.pi / 8)

    def test_orthogonal_start(self):
        with self.assertRaises(OrthogonalStart):
            kostlan_bounds(DIAG_2_1, np.array([0.0, 1.0]), math.pi / 8)

    def test_bounds_bracket_random_starts(self):
        """lower <= rho <= upper + 1 for every converged start"""
        A = np.diag([3.0, -2.0, 1.0, 0.5])
        rng = RngStream(21).generator()
        for _ in range(50):
            x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            result = power_iterate(A, x, math.pi / 8, 10_000)
            self.assertTrue(result.within_bounds())

    def test_mc_rho_within_expected_bounds(self):
        A = np.diag([3.0, 1.0, 0.5])
        alpha = math.pi / 8
        estimate = mc_rho(A, alpha, 4000, 10_000, RngStream(4))
        lower, upper = expected_rho_bounds(A, alpha)
        self.assertEqual(estimate.non_converged, 0)
        self.assertGreaterEqual(estimate.mean, lower - 3 * estimate.standard_error)
        self.assertLessEqual(estimate.mean, upper + 1)
        self.assertEqual(len(estimate.iterations), 4000)

    def test_mc_rho_per_start_sandwich_on_diag_4_1(self):
        """Every start of mc_rho on diag(4, 1) lies in its own Kostlan bracket, and so does the mean"""
        A = np.diag([4.0, 1.0])
        alpha = math.pi / 8
        estimate = mc_rho(A, alpha, 2000, 10_000, RngStream(44))
        starts = uniform_projective(RngStream(44), 2, size=2000)
        bounds = np.array([kostlan_bounds(A, x, alpha) for x in starts])
        self.assertEqual(estimate.non_converged, 0)
        self.assertTrue(np.all(bounds[:, 0] <= estimate.iterations))
        self.assertTrue(np.all(estimate.iterations <= bounds[:, 1] + 1))
        self.assertGreaterEqual(estimate.mean, float(np.mean(bounds[:, 0])))
        self.assertLessEqual(estimate.mean, float(np.mean(bounds[:, 1])) + 1)

    def test_mc_rho_standard_error_shrinks_like_root_n(self):
        """Over 10 repetitions, 2x the starts divides the SE by about sqrt(2), 4x halves it"""
        A = np.diag([3.0, 1.0, 0.5])
        alpha = math.pi / 8

        def mean_se(trials, offset):
            errors = [mc_rho(A, alpha, trials, 10_000, RngStream(45, offset + r)).standard_error for r in range(10)]
            return float(np.mean(errors))

        base, doubled, quadrupled = mean_se(500, 0), mean_se(1000, 100), mean_se(2000, 200)
        self.assertAlmostEqual(base / doubled, math.sqrt(2), delta=0.2 * math.sqrt(2))
        self.assertAlmostEqual(base / quadrupled, 2.0, delta=0.4)


class TestGueExperiments(unittest.TestCase):
    """Test cases for the GUE weak average-case driver and spectral facts"""

    def test_summarize_drops_largest(self):
        report = summarize_rho_samples(5, math.pi / 8, 0.01, np.arange(1.0, 101.0))
        self.assertEqual(report.exceptional_count, 1)
        self.assertEqual(report.threshold, 100.0)
        self.assertAlmostEqual(report.conditional_mean_rho, 50.0)
        self.assertAlmostEqual(report.raw_mean, 50.5)

    def test_small_experiment(self):
        args = (5, math.pi / 8, 0.05, 100, 10_000, RngStream(9))
        report = gue_weak_experiment(*args, starts=8)
        self.assertEqual(report.trials, 100)
        self.assertEqual(report.exceptional_count, 5)
        self.assertEqual(len(report.samples), 100)
        self.assertLessEqual(report.conditional_mean_rho, report.raw_mean)
        self.assertGreaterEqual(report.threshold, report.conditional_mean_rho)
        self.assertGreater(report.mean_log_eigenratio, 0.0)

        again = gue_weak_experiment(*args, starts=8)
        self.assertEqual(report.conditional_mean_rho, again.conditional_mean_rho)

    def test_experiment_preconditions(self):
        with self.assertRaises(PreconditionViolated):
            gue_weak_experiment(5, math.pi / 4, 0.05, 100, 100, RngStream(0))
        with self.assertRaises(PreconditionViolated):
            gue_weak_experiment(5, math.pi / 8, 0.05, 99, 100, RngStream(0))
        with self.assertRaises(PreconditionViolated):
            gue_weak_experiment(5, math.pi / 8, 0.0, 100, 100, RngStream(0))

    def test_spectral_facts(self):
        facts = gue_spectral_facts(10, 500, RngStream(2), deltas=(0.05, 0.2, 1.0))
        self.assertEqual(facts.all_positive, 0)
        self.assertEqual(facts.all_negative, 0)
        self.assertEqual(facts.edge_exceedances, 0)
        self.assertLess(facts.symmetry_ks, 0.15)
        probabilities = [facts.gap_probabilities[d] for d in (0.05, 0.2, 1.0)]
        self.assertEqual(probabilities, sorted(probabilities))
        self.assertTrue(all(0.0 <= p <= 1.0 for p in probabilities))

    def test_extreme_eigenvalues_symmetric(self):
        """lambda_max and -lambda_min share a law: KS below 0.02 at n=20 over 10^4 matrices"""
        facts = gue_spectral_facts(20, 10_000, RngStream(46), deltas=(0.1,))
        self.assertLess(facts.symmetry_ks, 0.02)


if __name__ == "__main__":
    unittest.main()
