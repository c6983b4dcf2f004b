import unittest
from unittest.mock import patch

from src import console
from src.main import REGRESSION_FAILURE_EXIT, determine_exit_code
from src.regression import (
    RegressionResult,
    check_geometric_entropy,
    check_inverse_square_diagonal,
    check_log_squared_diagonal,
    check_log_squared_entropy,
    check_two_similarity,
    run_regressions,
)


def passing_check() -> RegressionResult:
    return RegressionResult(name="passing", passed=True, expected="1", observed="1")


def failing_check() -> RegressionResult:
    return RegressionResult(name="failing", passed=False, expected="1", observed="2")


def raising_check() -> RegressionResult:
    raise RuntimeError("boom")


class TestRegressionChecks(unittest.TestCase):
    """Test suite for the built-in worked systems"""

    def test_geometric_entropy(self):
        """Test h = 2 log 2 for p_i = 2^-i"""
        result = check_geometric_entropy()
        self.assertTrue(result.passed, msg=result.observed)

    def test_log_squared_entropy(self):
        """Test that the log-squared weights are certified infinite"""
        result = check_log_squared_entropy()
        self.assertTrue(result.passed, msg=result.observed)

    def test_inverse_square_diagonal(self):
        """Test lambda_2 = -inf and dim_LY = 1 at the jump"""
        result = check_inverse_square_diagonal()
        self.assertTrue(result.passed, msg=f"{result.observed} {result.notes}")
        self.assertIn("norm_sup", result.notes)

    def test_log_squared_diagonal(self):
        """Test P(3/2) < 0 with +inf below and the s_infinity bracket"""
        result = check_log_squared_diagonal()
        self.assertTrue(result.passed, msg=result.observed)

    def test_two_similarity(self):
        """Test dim_LY and the pressure zero of two maps of ratio 1/3"""
        result = check_two_similarity()
        self.assertTrue(result.passed, msg=result.observed)


class TestRunRegressions(unittest.TestCase):
    """Test suite for batching regression checks"""

    def test_counts(self):
        """Test pass and fail counts and the exit code"""
        batch = run_regressions([passing_check, failing_check])
        self.assertEqual(batch.total, 2)
        self.assertEqual(batch.passed, 1)
        self.assertEqual(batch.failed, 1)
        self.assertEqual(determine_exit_code(batch), REGRESSION_FAILURE_EXIT)
        self.assertEqual(determine_exit_code(run_regressions([passing_check])), 0)

    def test_exception_marks_check_failed(self):
        """Test that a raising check fails without stopping the run"""
        batch = run_regressions([raising_check, passing_check])
        self.assertFalse(batch.results[0].passed)
        self.assertEqual(batch.results[0].name, "raising")
        self.assertEqual(batch.results[0].error_message, "boom")
        self.assertTrue(batch.results[1].passed)
        self.assertGreaterEqual(batch.results[0].elapsed, 0.0)

    def test_print_summary_respects_quiet(self):
        """Test that the summary table is silent in quiet mode"""
        batch = run_regressions([failing_check])
        try:
            console.configure(quiet=True)
            with patch('builtins.print') as mock_print:
                batch.print_summary()
            mock_print.assert_not_called()
            console.configure()
            with patch('builtins.print') as mock_print:
                batch.print_summary()
            self.assertTrue(mock_print.called)
        finally:
            console.configure()


if __name__ == '__main__':
    unittest.main()
