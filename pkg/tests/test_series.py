import math
import unittest

import numpy as np

from src.series import Growth, TailModel, log_sum_series, sum_series


class TestTailModel(unittest.TestCase):
    """Test suite for envelope classes and their tail bounds"""

    def test_summability_classes(self):
        """Test the comparison classes: ratio, power and the log-power boundary"""
        self.assertTrue(TailModel(power=0.0, ratio=0.5).summable())
        self.assertFalse(TailModel(power=5.0, ratio=1.5).summable())
        self.assertTrue(TailModel(power=1.5).summable())
        self.assertFalse(TailModel(power=1.0).summable())
        self.assertFalse(TailModel(power=1.0, log_power=1.0).summable())
        self.assertTrue(TailModel(power=1.0, log_power=2.0).summable())
        self.assertFalse(TailModel(power=0.9, log_power=10.0).summable())

    def test_times_growth(self):
        """Test that multiplying by a growing factor shifts the class"""
        model = TailModel(power=2.0).times(Growth(log_power=1.0))
        self.assertEqual(model, TailModel(power=2.0, log_power=-1.0))
        self.assertTrue(model.summable())
        model = TailModel(power=2.0).times(Growth(power=1.0))
        self.assertFalse(model.summable())

    def test_tail_bounds_dominate_true_tails(self):
        """Test envelope_tail against long explicit sums"""
        cases = [
            (TailModel(power=2.0), 1000),
            (TailModel(power=1.5, log_power=0.5), 1000),
            (TailModel(power=0.0, ratio=0.9), 50),
            (TailModel(power=1.0, log_power=2.0), 1000),
        ]
        for model, start in cases:
            ranks = np.arange(start, start + 2_000_000, dtype=float)
            explicit = float(np.exp(model.log_envelope(ranks)).sum())
            self.assertGreaterEqual(model.envelope_tail(start) * (1 + 1e-9), explicit, msg=str(model))

    def test_tail_bound_is_tight_for_power_two(self):
        """Test that the k^-2 bound is within a few percent of 1/K"""
        bound = TailModel(power=2.0).envelope_tail(10_000)
        self.assertLess(bound, 1.05 / 9_999)

    def test_non_summable_tail_is_infinite(self):
        """Test that non-summable classes have no finite tail"""
        self.assertEqual(TailModel(power=1.0).envelope_tail(100), math.inf)


class TestSeriesSums(unittest.TestCase):
    """Test suite for certified partial sums"""

    def test_convergent_series_bracket_the_limit(self):
        """Test that sum 1/k^2 lies between the partial sum and the upper bound"""
        ranks = np.arange(1, 10_001)
        result = sum_series(1.0 / ranks.astype(float) ** 2, ranks, TailModel(power=2.0))
        limit = math.pi ** 2 / 6
        self.assertFalse(result.divergent)
        self.assertLess(result.partial, limit)
        self.assertGreaterEqual(result.upper, limit)
        self.assertLess(result.tail_bound, 1e-3)

    def test_divergent_series_gets_certificate(self):
        """Test that the harmonic series is flagged with a positive floor"""
        ranks = np.arange(1, 10_001)
        result = sum_series(1.0 / ranks, ranks, TailModel(power=1.0))
        self.assertTrue(result.divergent)
        self.assertEqual(result.upper, math.inf)
        self.assertGreater(result.certificate.floor, 0.0)
        self.assertFalse(result.certificate.summable)

    def test_threshold_marks_divergence(self):
        """Test that partial sums above the threshold count as divergent"""
        ranks = np.arange(1, 101)
        result = sum_series(np.full(100, 10.0), ranks, TailModel(power=0.0, ratio=0.5), threshold=50.0)
        self.assertTrue(result.divergent)

    def test_finite_sum_without_model(self):
        """Test that a complete finite sum has no tail"""
        result = sum_series(np.array([0.25, 0.75]), np.array([1, 2]), None)
        self.assertEqual(result.partial, 1.0)
        self.assertEqual(result.tail_bound, 0.0)
        self.assertFalse(result.divergent)

    def test_log_sum_matches_linear_sum(self):
        """Test log_sum_series on terms far below the float range"""
        ranks = np.arange(1, 1001)
        log_terms = -2000.0 - 2.0 * np.log(ranks)
        result = log_sum_series(log_terms, ranks, TailModel(power=2.0))
        self.assertAlmostEqual(result.log_partial, -2000.0 + math.log(np.sum(1.0 / ranks.astype(float) ** 2)), places=10)
        self.assertGreater(result.log_upper, result.log_partial)
        self.assertLess(result.log_upper, -2000.0 + math.log(math.pi ** 2 / 6) + 1e-3)

    def test_negative_terms_rejected(self):
        """Test that sum_series refuses negative terms"""
        with self.assertRaises(ValueError):
            sum_series(np.array([1.0, -1.0]), np.array([1, 2]), None)


if __name__ == '__main__':
    unittest.main()
