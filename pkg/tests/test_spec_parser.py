import math
import os
import tempfile
import unittest

import numpy as np

from src.errors import SpecError
from src.geometry import TranslationMode
from src.spec_parser import DEFAULT_S_GRID, SpecParser, load_spec

SPECS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "specs")

DIAGONAL_PAIR = """schema = 1
name = "pair"
dimension = 2

[[map]]
matrix = [[0.45, 0.0], [0.0, 0.2]]
translation = [0.1, -0.1]

[[map]]
matrix = [[0.2, 0.0], [0.0, 0.45]]

[measure]
weights = [0.25, 0.75]

[experiment]
seed = 11
draws = 3
translations = "fixed"
s_grid = [0.0, 1.0, 2.0]
"""


class TestSpecParser(unittest.TestCase):
    """Test suite for SpecParser class"""

    def setUp(self):
        """Set up test fixtures before each test method"""
        self.temp_files = []

    def tearDown(self):
        """Clean up temporary files after each test"""
        for temp_file in self.temp_files:
            if os.path.exists(temp_file):
                os.unlink(temp_file)

    def create_temp_spec(self, content: str) -> str:
        """Helper method to create temporary spec files for testing"""
        temp_file = tempfile.NamedTemporaryFile(mode='w', suffix='.toml', delete=False, encoding='utf-8')
        temp_file.write(content)
        temp_file.close()
        self.temp_files.append(temp_file.name)
        return temp_file.name

    def assertSpecError(self, content: str, field: str = None, line: int = None) -> SpecError:
        """Parse content and check the field and line named by the SpecError"""
        with self.assertRaises(SpecError) as context:
            SpecParser(self.create_temp_spec(content)).parse()
        if field is not None:
            self.assertEqual(context.exception.field, field)
        if line is not None:
            self.assertEqual(context.exception.line, line)
        return context.exception

    def test_basic_parsing(self):
        """Test explicit maps, weights and experiment settings"""
        spec = SpecParser(self.create_temp_spec(DIAGONAL_PAIR)).parse()

        self.assertEqual(spec.name, "pair")
        self.assertEqual(spec.dimension, 2)
        self.assertEqual(spec.ifs.size, 2)
        np.testing.assert_allclose(spec.ifs.translation_vectors(), [[0.1, -0.1], [0.0, 0.0]])
        np.testing.assert_allclose(spec.measure.probabilities, [0.25, 0.75])

        # Experiment block overrides defaults only where given
        self.assertTrue(spec.has_experiment)
        self.assertEqual(spec.experiment.seed, 11)
        self.assertEqual(spec.experiment.draws, 3)
        self.assertEqual(spec.experiment.points, 100000)
        self.assertEqual(spec.experiment.translations, TranslationMode.FIXED)
        self.assertEqual(spec.experiment.s_grid, [0.0, 1.0, 2.0])

    def test_defaults_without_experiment(self):
        """Test that a spec without [experiment] gets the default settings"""
        content = DIAGONAL_PAIR.split("[experiment]")[0]
        spec = SpecParser(self.create_temp_spec(content)).parse()
        self.assertFalse(spec.has_experiment)
        self.assertEqual(spec.experiment.s_grid, DEFAULT_S_GRID)
        self.assertEqual(spec.experiment.translations, TranslationMode.RANDOM)

    def test_uniform_and_markov_measures(self):
        """Test uniform = true and a Markov measure"""
        uniform = DIAGONAL_PAIR.replace("weights = [0.25, 0.75]", "uniform = true")
        spec = SpecParser(self.create_temp_spec(uniform)).parse()
        np.testing.assert_allclose(spec.measure.probabilities, [0.5, 0.5])

        markov = DIAGONAL_PAIR.replace(
            "weights = [0.25, 0.75]",
            'kind = "Markov"\ninitial = [0.8333333333333334, 0.16666666666666666]\n'
            'transition = [[0.9, 0.1], [0.5, 0.5]]',
        )
        spec = SpecParser(self.create_temp_spec(markov)).parse()
        self.assertFalse(spec.measure.is_bernoulli)

    def test_family_system(self):
        """Test a countable family with its truncation echoed"""
        content = """schema = 1
name = "inverse_square"
dimension = 2

[alphabet]
epsilon = 1e-4

[maps]
family = "inverse_square_diagonal"

[measure]
family = "inverse_square"
"""
        spec = SpecParser(self.create_temp_spec(content)).parse()
        self.assertIsNotNone(spec.ifs.family)
        self.assertTrue(spec.ifs.alphabet.countable)
        self.assertEqual(spec.ifs.size, spec.measure.alphabet.size)
        echo = spec.echo()
        self.assertLessEqual(echo["measure"]["deficit"], 1e-4)
        self.assertFalse(echo["measure"]["truncated_at_cap"])
        self.assertEqual(echo["truncation"]["epsilon"], 1e-4)

    def test_bundled_specs_parse(self):
        """Test that every spec shipped in specs/ parses"""
        names = sorted(f for f in os.listdir(SPECS_DIR) if f.endswith(".toml"))
        self.assertGreater(len(names), 0)
        for name in names:
            spec = load_spec(os.path.join(SPECS_DIR, name))
            self.assertGreater(spec.ifs.size, 0, msg=name)

    def test_invalid_toml_reports_line(self):
        """Test that TOML syntax errors carry the line number"""
        content = 'schema = 1\ndimension = 2\nname = "broken\n'
        error = self.assertSpecError(content)
        self.assertEqual(error.line, 3)

    def test_wrong_schema(self):
        """Test that an unsupported schema is refused"""
        self.assertSpecError(DIAGONAL_PAIR.replace("schema = 1", "schema = 2"), field="schema", line=1)

    def test_matrix_shape_error_names_map(self):
        """Test that a malformed matrix names its [[map]] entry"""
        content = DIAGONAL_PAIR.replace("[[0.2, 0.0], [0.0, 0.45]]", "[[0.2, 0.0]]")
        self.assertSpecError(content, field="map.1.matrix", line=10)

    def test_translation_shape_error(self):
        """Test a translation with the wrong number of entries"""
        content = DIAGONAL_PAIR.replace("translation = [0.1, -0.1]", "translation = [0.1]")
        self.assertSpecError(content, field="map.0.translation", line=7)

    def test_non_contraction(self):
        """Test that an expanding map is reported against the map tables"""
        content = DIAGONAL_PAIR.replace("[[0.45, 0.0], [0.0, 0.2]]", "[[1.5, 0.0], [0.0, 0.2]]")
        self.assertSpecError(content, field="map", line=5)

    def test_bad_weights(self):
        """Test weights that do not sum to one"""
        content = DIAGONAL_PAIR.replace("[0.25, 0.75]", "[0.25, 0.5]")
        self.assertSpecError(content, field="measure", line=12)

    def test_unknown_families(self):
        """Test unknown map and weight family names"""
        content = """schema = 1
dimension = 2

[maps]
family = "sierpinski"
"""
        self.assertSpecError(content, field="maps.family", line=5)
        weights = DIAGONAL_PAIR.replace("weights = [0.25, 0.75]", "family = \"zipf\"")
        self.assertSpecError(weights, field="measure.family", line=13)

    def test_maps_and_map_are_exclusive(self):
        """Test that a spec cannot give both [[map]] and [maps]"""
        content = DIAGONAL_PAIR + '\n[maps]\nfamily = "inverse_square_diagonal"\n'
        self.assertSpecError(content, field="map")

    def test_experiment_validation(self):
        """Test integer minimums, translation modes and the s grid"""
        self.assertSpecError(DIAGONAL_PAIR.replace("draws = 3", "draws = 0"), field="experiment.draws", line=17)
        self.assertSpecError(DIAGONAL_PAIR.replace("draws = 3", "draws = 2.5"), field="experiment.draws")
        self.assertSpecError(
            DIAGONAL_PAIR.replace('"fixed"', '"sideways"'), field="experiment.translations", line=18
        )
        self.assertSpecError(
            DIAGONAL_PAIR.replace("[0.0, 1.0, 2.0]", "[0.0, 2.0, 1.0]"), field="experiment.s_grid", line=19
        )
        self.assertSpecError(
            DIAGONAL_PAIR.replace("[0.0, 1.0, 2.0]", '[0.0, "one"]'), field="experiment.s_grid"
        )
        self.assertSpecError(
            DIAGONAL_PAIR + "zero_draw = 1\n", field="experiment.zero_draw"
        )

    def test_measure_symbol_without_map(self):
        """Test that a measure over symbols the maps lack is refused"""
        content = DIAGONAL_PAIR.replace(
            "[measure]", "[alphabet]\nsymbols = [0, 5]\n\n[measure]"
        )
        error = self.assertSpecError(content)
        self.assertEqual(error.field, "alphabet.symbols")

    def test_missing_file(self):
        """Test that an unreadable file is a SpecError"""
        with self.assertRaises(SpecError):
            SpecParser("/nonexistent/spec.toml").parse()

    def test_echo_round_trips_settings(self):
        """Test that echo() carries the system and experiment for the report"""
        echo = SpecParser(self.create_temp_spec(DIAGONAL_PAIR)).parse().echo()
        self.assertEqual(echo["name"], "pair")
        self.assertEqual(echo["experiment"]["translations"], "fixed")
        self.assertTrue(all(math.isfinite(v) for v in echo["experiment"]["s_grid"]))


if __name__ == '__main__':
    unittest.main()
