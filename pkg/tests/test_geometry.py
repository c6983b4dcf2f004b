import math
import unittest

import numpy as np
import pytest
from scipy import stats

from src.errors import DegenerateFit, InsufficientSamples, IntegrabilityFailure
from src.geometry import (
    BallCounter,
    TranslationMode,
    feng_bounds,
    generate_cloud,
    local_dimension,
    project,
    projection_entropy_estimate,
    sample_translations,
    similarity_dimension,
    truncation_error,
)
from src.ifs import AffineIFS
from src.regression import inverse_square_system
from src.rng import STREAM_DRAWS, derive_seed
from src.spectrum import exponents_exact_diagonal, lyapunov_dimension, lyapunov_dimension_bisect
from src.symbolic_measure import MeasureSpec, Word

CANTOR_DIMENSION = math.log(2) / math.log(3)


def cantor_system() -> AffineIFS:
    return AffineIFS.from_matrices([[[1 / 3]], [[1 / 3]]], translations=[[-1 / 3], [1 / 3]])


class TestTranslations(unittest.TestCase):
    """Test suite for translation draws"""

    def setUp(self):
        self.ifs = AffineIFS.from_matrices([np.diag([0.45, 0.2]), np.diag([0.2, 0.45])])

    def test_random_draw_is_deterministic_and_lazy(self):
        """Test that a symbol's vector does not depend on the query order"""
        first = sample_translations(self.ifs, seed=4, draw=2)
        second = sample_translations(self.ifs, seed=4, draw=2)
        v1 = first.vector(1)
        second.vector(0)
        np.testing.assert_array_equal(v1, second.vector(1))
        self.assertTrue(np.all(np.abs(v1) <= 0.5))

    def test_draws_differ(self):
        """Test that different draw indices give different vectors"""
        a = sample_translations(self.ifs, seed=4, draw=0).vector(0)
        b = sample_translations(self.ifs, seed=4, draw=1).vector(0)
        self.assertFalse(np.array_equal(a, b))

    def test_zero_and_fixed_modes(self):
        """Test the all-zero draw and the system's own vectors"""
        zero = sample_translations(self.ifs, seed=0, mode=TranslationMode.ZERO)
        np.testing.assert_array_equal(zero.vectors([0, 1]), np.zeros((2, 2)))
        fixed = sample_translations(cantor_system(), seed=0, mode=TranslationMode.FIXED)
        np.testing.assert_allclose(fixed.vectors([0, 1]), [[-1 / 3], [1 / 3]])

    def test_random_coordinates_are_uniform(self):
        """Test each coordinate of many random vectors against U[-1/2, 1/2] with a KS test"""
        vectors = sample_translations(self.ifs, seed=31, draw=0).vectors(range(2000))
        for k in range(self.ifs.dim):
            result = stats.kstest(vectors[:, k], stats.uniform(loc=-0.5, scale=1.0).cdf)
            self.assertGreater(result.pvalue, 1e-3, msg=f"coordinate {k}")


class TestProjection(unittest.TestCase):
    """Test suite for the canonical projection"""

    def setUp(self):
        self.ifs = cantor_system()
        self.a = sample_translations(self.ifs, seed=0, mode=TranslationMode.FIXED)

    def test_composition_order(self):
        """Test f_1(f_0(0)) = (1/3)(-1/3) + 1/3"""
        np.testing.assert_allclose(project(self.ifs, self.a, Word([1, 0])), [2 / 9], atol=1e-15)

    def test_against_explicit_maps(self):
        """Test a non-diagonal word against a direct fold of the maps"""
        theta = 0.5
        rotation = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        matrices = [0.5 * rotation, np.diag([0.3, 0.6])]
        translations = [[0.1, -0.2], [-0.4, 0.3]]
        ifs = AffineIFS.from_matrices(matrices, translations=translations)
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        word = [0, 1, 1, 0, 1]
        x = np.zeros(2)
        for letter in reversed(word):
            x = matrices[letter] @ x + np.asarray(translations[letter])
        np.testing.assert_allclose(project(ifs, a, Word(word)), x, atol=1e-15)

    def test_truncation_error_bounds_deeper_words(self):
        """Test that extending a word moves its image by at most the truncation error"""
        rng = np.random.default_rng(0)
        for _ in range(20):
            word = rng.integers(0, 2, size=30)
            short = project(self.ifs, self.a, Word(word[:8]))
            long = project(self.ifs, self.a, Word(word))
            self.assertLessEqual(abs(float(long[0] - short[0])), truncation_error(self.ifs, 8) + 1e-15)

    def test_empty_word(self):
        """Test that the empty word has no projection"""
        with self.assertRaises(ValueError):
            project(self.ifs, self.a, Word([]))


class TestPointCloud(unittest.TestCase):
    """Test suite for cloud generation"""

    def test_cloud_is_seeded(self):
        """Test identical clouds for identical seeds, inside [-1/2, 1/2]"""
        ifs = cantor_system()
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        mu = MeasureSpec.uniform(2)
        first = generate_cloud(ifs, mu, a, 2000, 20, seed=3, keep_words=True)
        second = generate_cloud(ifs, mu, a, 2000, 20, seed=3)
        np.testing.assert_array_equal(first.points, second.points)
        self.assertTrue(np.all(np.abs(first.points) <= 0.5 + 1e-12))
        self.assertEqual(first.words.shape, (2000, 20))
        self.assertIsNone(second.words)

    def test_ball_counts_include_center(self):
        """Test that counts at a tiny radius see only the center"""
        points = np.array([[0.0], [1.0], [2.0]])
        counts = BallCounter(points).counts(points, [0.5, 1.5])
        np.testing.assert_array_equal(counts, [[1, 2], [1, 3], [1, 2]])


class TestLocalDimension(unittest.TestCase):
    """Test suite for local dimension slopes"""

    def setUp(self):
        self.ifs = cantor_system()
        self.mu = MeasureSpec.uniform(2)
        self.a = sample_translations(self.ifs, seed=0, mode=TranslationMode.FIXED)

    def test_cantor_slope(self):
        """Test that slopes on the middle-third Cantor set sit near log 2 / log 3"""
        cloud = generate_cloud(self.ifs, self.mu, self.a, 20_000, 30, seed=1)
        estimate = local_dimension(cloud, sample_centers=64, seed=2)
        self.assertAlmostEqual(estimate.median, CANTOR_DIMENSION, delta=0.1)
        self.assertEqual(len(estimate.slopes), 64)
        self.assertGreater(estimate.r_max, estimate.r_min)
        self.assertEqual(list(estimate.to_frame().columns), ["center", "slope", "intercept", "residual"])

    def test_zero_translations_are_degenerate(self):
        """Test that the all-zero draw collapses the cloud"""
        zero = sample_translations(self.ifs, seed=0, mode=TranslationMode.ZERO)
        cloud = generate_cloud(self.ifs, self.mu, zero, 500, 10, seed=1)
        with self.assertRaises(DegenerateFit):
            local_dimension(cloud, sample_centers=16)

    def test_radius_checks(self):
        """Test too few radii, unsorted radii and radii inside the truncation error"""
        cloud = generate_cloud(self.ifs, self.mu, self.a, 2000, 4, seed=1)
        with self.assertRaises(ValueError):
            local_dimension(cloud, radii=[0.1, 0.2, 0.3])
        with self.assertRaises(ValueError):
            local_dimension(cloud, radii=[0.3, 0.2, 0.1, 0.05, 0.01])
        tiny = np.geomspace(cloud.truncation_error, 0.1, 6)
        with self.assertRaises(ValueError):
            local_dimension(cloud, radii=tiny)

    def test_uniform_segment(self):
        """Test that the uniform measure on a segment has local dimension one"""
        ifs = AffineIFS.from_matrices([[[0.5]], [[0.5]]], translations=[[-0.25], [0.25]])
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        cloud = generate_cloud(ifs, MeasureSpec.uniform(2), a, 20_000, 30, seed=4)
        estimate = local_dimension(cloud, radii=np.geomspace(0.002, 0.02, 8), sample_centers=64, seed=5)
        self.assertAlmostEqual(estimate.median, 1.0, delta=0.1)

    def test_uniform_square(self):
        """Test that the uniform measure on a square has local dimension two"""
        corners = [[-0.25, -0.25], [-0.25, 0.25], [0.25, -0.25], [0.25, 0.25]]
        ifs = AffineIFS.from_matrices([np.diag([0.5, 0.5])] * 4, translations=corners)
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        cloud = generate_cloud(ifs, MeasureSpec.uniform(4), a, 100_000, 20, seed=6)
        estimate = local_dimension(cloud, radii=np.geomspace(0.01, 0.05, 8), sample_centers=64, seed=7)
        self.assertAlmostEqual(estimate.median, 2.0, delta=0.1)

    @pytest.mark.slow
    def test_random_translations_match_similarity_dimension(self):
        """Test five random draws of 10^5 points against log 2 / log 3, draw by draw"""
        for draw in range(5):
            a = sample_translations(self.ifs, seed=20240601, draw=draw)
            draw_seed = derive_seed(20240601, STREAM_DRAWS, draw)
            cloud = generate_cloud(self.ifs, self.mu, a, 100_000, 60, seed=draw_seed)
            median = local_dimension(cloud, seed=draw_seed).median
            self.assertLess(abs(median - CANTOR_DIMENSION), 0.1, msg=f"draw {draw}")


class TestDiagonalPairLocalDimension(unittest.TestCase):
    """Sampled local dimensions of diag(0.45, 0.2), diag(0.2, 0.45) under uniform weights"""

    @classmethod
    def setUpClass(cls):
        cls.ifs = AffineIFS.from_matrices([np.diag([0.45, 0.2]), np.diag([0.2, 0.45])])
        cls.mu = MeasureSpec.uniform(2)
        spectrum = exponents_exact_diagonal(cls.ifs, cls.mu)
        cls.dimension = lyapunov_dimension(math.log(2), spectrum)
        cls.bisected = lyapunov_dimension_bisect(math.log(2), spectrum)
        cls.target = min(cls.ifs.dim, cls.dimension.value)

    def median_slope(self, seed: int, draw: int, mode: TranslationMode = TranslationMode.RANDOM) -> float:
        a = sample_translations(self.ifs, seed=seed, draw=draw, mode=mode)
        draw_seed = derive_seed(seed, STREAM_DRAWS, draw)
        cloud = generate_cloud(self.ifs, self.mu, a, 100_000, 60, seed=draw_seed)
        return local_dimension(cloud, seed=draw_seed).median

    def test_solver_agrees_with_bisection(self):
        """Test dim_LY = log 2 / -log 0.3 from the segment solver and from bisection"""
        self.assertAlmostEqual(self.dimension.value, math.log(2) / -math.log(0.3), places=12)
        self.assertAlmostEqual(self.bisected.value, self.dimension.value, delta=1e-10)

    @pytest.mark.slow
    def test_random_translations_match_lyapunov_dimension(self):
        """Test that every one of five random draws has median slope within 0.1 of dim_LY"""
        for draw in range(5):
            median = self.median_slope(7, draw)
            self.assertLess(abs(median - self.target), 0.1, msg=f"draw {draw}")

    @pytest.mark.slow
    def test_upper_bound_holds_for_every_draw(self):
        """Test median slope <= min{d, dim_LY} + 0.1 over ten draws, the first all zero"""
        zero = sample_translations(self.ifs, seed=11, draw=0, mode=TranslationMode.ZERO)
        collapsed = generate_cloud(self.ifs, self.mu, zero, 1000, 60, seed=derive_seed(11, STREAM_DRAWS, 0))
        # every point is the origin: local dimension 0
        self.assertEqual(float(np.ptp(collapsed.points)), 0.0)
        with self.assertRaises(DegenerateFit):
            local_dimension(collapsed, sample_centers=16)
        for draw in range(1, 10):
            median = self.median_slope(11, draw)
            self.assertLessEqual(median, self.target + 0.1, msg=f"draw {draw}")


class TestDimensionBounds(unittest.TestCase):
    """Test suite for bounds from projection entropy"""

    def test_similarities(self):
        """Test that both bounds equal log 2 / log 3 for the Cantor system"""
        bounds = feng_bounds(cantor_system(), MeasureSpec.uniform(2), math.log(2))
        self.assertAlmostEqual(bounds.lower, CANTOR_DIMENSION, places=14)
        self.assertAlmostEqual(bounds.upper, CANTOR_DIMENSION, places=14)
        self.assertAlmostEqual(similarity_dimension(cantor_system(), MeasureSpec.uniform(2), math.log(2)), CANTOR_DIMENSION)

    def test_diagonal_pair(self):
        """Test bounds from the smallest and largest singular values"""
        ifs = AffineIFS.from_matrices([np.diag([0.45, 0.2]), np.diag([0.2, 0.45])])
        bounds = feng_bounds(ifs, MeasureSpec.uniform(2), math.log(2))
        self.assertAlmostEqual(bounds.lower, math.log(2) / -math.log(0.2), places=14)
        self.assertAlmostEqual(bounds.upper, math.log(2) / -math.log(0.45), places=14)
        self.assertIsNone(bounds.similarity_dimension)
        with self.assertRaises(ValueError):
            similarity_dimension(ifs, MeasureSpec.uniform(2), math.log(2))

    def test_non_integrable_singular_value(self):
        """Test that a divergent sum of log alpha_d raises IntegrabilityFailure"""
        ifs, mu = inverse_square_system(epsilon=1e-4)
        with self.assertRaises(IntegrabilityFailure):
            feng_bounds(ifs, mu, 0.5)


class TestProjectionEntropy(unittest.TestCase):
    """Test suite for the binned projection-entropy estimator"""

    def test_separated_cantor_set(self):
        """Test that separated first-level pieces give log 2"""
        ifs = cantor_system()
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        estimate = projection_entropy_estimate(
            ifs, MeasureSpec.uniform(2), a, m=1, bin_widths=[0.1, 0.05, 0.02], count=20_000, seed=8
        )
        self.assertAlmostEqual(estimate.value, math.log(2), delta=0.02)
        self.assertEqual(len(estimate.trace), 3)
        self.assertEqual(estimate.width, 0.02)
        self.assertEqual(estimate.dropped_mass, 0.0)
        self.assertTrue(all(row["sparse_bins"] == 0 for row in estimate.trace))

    def test_single_map_gives_zero(self):
        """Test that one map leaves no symbol uncertainty"""
        ifs = AffineIFS.from_matrices([[[0.5]]], translations=[[0.25]])
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        estimate = projection_entropy_estimate(ifs, MeasureSpec.uniform(1), a, 1, [0.1, 0.01], 2000, seed=1)
        self.assertEqual(estimate.value, 0.0)

    def test_identical_maps_give_zero(self):
        """Test that identical maps make the projection carry no symbol information"""
        ifs = AffineIFS.from_matrices([[[0.5]], [[0.5]]], translations=[[0.25], [0.25]])
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        estimate = projection_entropy_estimate(ifs, MeasureSpec.uniform(2), a, 1, [0.1, 0.01], 5000, seed=2)
        self.assertAlmostEqual(estimate.value, 0.0, delta=1e-12)

    def test_bounded_by_entropy(self):
        """Test h_pi <= h + 3 standard errors on overlapping random translations"""
        ifs = AffineIFS.from_matrices([np.diag([0.45, 0.2]), np.diag([0.2, 0.45])])
        mu = MeasureSpec.uniform(2)
        for draw in range(3):
            a = sample_translations(ifs, seed=17, draw=draw)
            estimate = projection_entropy_estimate(
                ifs, mu, a, 1, [0.1, 0.05], 20_000, seed=draw, min_coverage=0.95
            )
            self.assertGreater(estimate.stderr, 0.0)
            self.assertLessEqual(estimate.value, math.log(2) + 3 * estimate.stderr, msg=f"draw {draw}")

    def test_sparse_finest_width_raises(self):
        """Test InsufficientSamples when an occupied bin at the finest width is under the floor"""
        ifs = cantor_system()
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        with self.assertRaises(InsufficientSamples):
            projection_entropy_estimate(ifs, MeasureSpec.uniform(2), a, 1, [0.1, 0.001], 200, seed=3)

    def test_min_coverage_drops_sparse_bins(self):
        """Test the opt-in coverage rule reports the dropped mass and can still fail"""
        ifs = cantor_system()
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        mu = MeasureSpec.uniform(2)
        estimate = projection_entropy_estimate(ifs, mu, a, 1, [0.1, 0.005], 2000, seed=4, min_coverage=0.5)
        chosen = [row for row in estimate.trace if row["width"] == estimate.width][0]
        self.assertAlmostEqual(estimate.dropped_mass, 1.0 - chosen["coverage"], places=15)
        self.assertLessEqual(estimate.dropped_mass, 0.5)
        with self.assertRaises(InsufficientSamples):
            projection_entropy_estimate(ifs, mu, a, 1, [0.001], 200, seed=3, min_coverage=0.99)
        with self.assertRaises(ValueError):
            projection_entropy_estimate(ifs, mu, a, 1, [0.1], 200, seed=3, min_coverage=0.0)

    def test_widths_must_decrease(self):
        """Test the bin width validation"""
        ifs = cantor_system()
        a = sample_translations(ifs, seed=0, mode=TranslationMode.FIXED)
        with self.assertRaises(ValueError):
            projection_entropy_estimate(ifs, MeasureSpec.uniform(2), a, 1, [0.01, 0.1], 100, 0)


if __name__ == '__main__':
    unittest.main()
