"""
Reader for system spec files.

A spec is a TOML document with `schema = 1`, a `dimension`, the maps (either
`[[map]]` tables with explicit matrices and translations, or a `[maps]` table
naming a countable family), an optional `[measure]`, an optional
`[alphabet]` truncation block and an optional `[experiment]` block.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import AffineDimError, SpecError
from .families import WEIGHT_FAMILIES, TruncationPolicy, weight_family
from .geometry import MIN_RADII, TranslationMode
from .ifs import MAP_FAMILIES, AffineIFS, map_family
from .symbolic_measure import Alphabet, MeasureSpec

SCHEMA_VERSION = 1

DEFAULT_S_GRID = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]


@dataclass
class ExperimentSpec:
    """Sampling and grid settings for simulate, analyze and pressure"""
    seed: int = 0
    draws: int = 5
    points: int = 100_000
    depth: int = 60
    centers: int = 256
    radii: int = 12
    translations: TranslationMode = TranslationMode.RANDOM
    mc_steps: int = 100_000
    mc_replicas: int = 20
    s_grid: List[float] = field(default_factory=lambda: list(DEFAULT_S_GRID))
    max_level: int = 8
    projection_m: int = 1
    bin_widths: List[float] = field(default_factory=list)
    bin_coverage: Optional[float] = None
    zero_draw: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "draws": self.draws,
            "points": self.points,
            "depth": self.depth,
            "centers": self.centers,
            "radii": self.radii,
            "translations": self.translations.value,
            "mc_steps": self.mc_steps,
            "mc_replicas": self.mc_replicas,
            "s_grid": list(self.s_grid),
            "max_level": self.max_level,
            "projection_m": self.projection_m,
            "bin_widths": list(self.bin_widths),
            "bin_coverage": self.bin_coverage,
            "zero_draw": self.zero_draw,
        }


@dataclass
class SystemSpec:
    """A parsed spec: the system, its measure and the experiment settings"""
    name: str
    dimension: int
    ifs: AffineIFS
    measure: Optional[MeasureSpec]
    experiment: ExperimentSpec
    has_experiment: bool = False
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    raw: Dict[str, Any] = field(default_factory=dict)

    def echo(self) -> Dict[str, Any]:
        """Inputs as they were resolved, including truncations and their deficits"""
        measure = None
        if self.measure is not None:
            measure = {
                "kind": self.measure.kind.value,
                "description": self.measure.describe(),
                "symbols": self.measure.alphabet.size,
                "deficit": self.measure.alphabet.deficit,
                "truncated_at_cap": self.measure.alphabet.hit_cap,
            }
        return {
            "name": self.name,
            "dimension": self.dimension,
            "maps": self.ifs.describe(),
            "symbols": self.ifs.size,
            "measure": measure,
            "truncation": {
                "epsilon": self.truncation.epsilon,
                "max_symbols": self.truncation.max_symbols,
            },
            "experiment": self.experiment.to_dict(),
        }


class SpecParser:
    """Parser for TOML system spec files with line-aware diagnostics"""

    # Accepted spellings for the measure kind
    MEASURE_KINDS = {
        "bernoulli": ["bernoulli", "iid", "product"],
        "markov": ["markov", "markov_chain"],
    }

    # Integer experiment fields and their smallest accepted value
    EXPERIMENT_FIELDS = {
        "seed": 0, "draws": 1, "points": 2, "depth": 1, "centers": 1,
        "radii": MIN_RADII, "mc_steps": 1, "mc_replicas": 1, "max_level": 1,
        "projection_m": 1,
    }

    def __init__(self, spec_file_path: str):
        self.spec_file_path = spec_file_path
        self.text = ""
        self.data: Dict[str, Any] = {}
        self.key_lines: Dict[str, int] = {}

    def parse(self) -> SystemSpec:
        """Parse the spec file and build the system it describes"""
        try:
            with open(self.spec_file_path, "r", encoding="utf-8") as handle:
                self.text = handle.read()
        except OSError as e:
            raise SpecError(f"Cannot read spec file: {e}") from e
        return self.parse_text(self.text)

    def parse_text(self, text: str) -> SystemSpec:
        self.text = text
        try:
            self.data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = re.search(r"line (\d+)", str(e))
            raise SpecError(f"Invalid TOML: {e}", line=int(match.group(1)) if match else None) from e
        self.key_lines = self._index_lines(text)

        schema = self.data.get("schema")
        if schema != SCHEMA_VERSION:
            raise self._error(f"Unsupported schema {schema!r}, expected {SCHEMA_VERSION}", "schema")
        dimension = self._require_int(self.data, "dimension", minimum=1)
        truncation = self._truncation()
        measure = self._measure(truncation)
        ifs = self._maps(dimension, measure, truncation)
        experiment = self._experiment()

        return SystemSpec(
            name=str(self.data.get("name", "system")),
            dimension=dimension,
            ifs=ifs,
            measure=measure,
            experiment=experiment,
            has_experiment="experiment" in self.data,
            truncation=truncation,
            raw=self.data,
        )

    @staticmethod
    def _index_lines(text: str) -> Dict[str, int]:
        """Map dotted key paths to the line that defines them"""
        lines: Dict[str, int] = {}
        table = ""
        array_counts: Dict[str, int] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            array_header = re.match(r"^\[\[\s*([A-Za-z0-9_.]+)\s*\]\]$", stripped)
            header = re.match(r"^\[\s*([A-Za-z0-9_.]+)\s*\]$", stripped)
            if array_header:
                name = array_header.group(1)
                index = array_counts.get(name, 0)
                array_counts[name] = index + 1
                table = f"{name}.{index}"
                lines.setdefault(table, number)
            elif header:
                table = header.group(1)
                lines.setdefault(table, number)
            else:
                key = re.match(r"^([A-Za-z0-9_]+)\s*=", stripped)
                if key:
                    path = f"{table}.{key.group(1)}" if table else key.group(1)
                    lines.setdefault(path, number)
        return lines

    def _error(self, message: str, path: str) -> SpecError:
        line = self.key_lines.get(path)
        parent = path
        if line is None:
            children = [n for key, n in self.key_lines.items() if key.startswith(path + ".")]
            line = min(children) if children else None
        while line is None and "." in parent:
            parent = parent.rsplit(".", 1)[0]
            line = self.key_lines.get(parent)
        return SpecError(message, field=path, line=line)

    def _require_int(self, table: Dict[str, Any], key: str, path: str = "", minimum: int = 0) -> int:
        path = path or key
        value = table.get(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self._error(f"Expected an integer, got {value!r}", path)
        if value < minimum:
            raise self._error(f"Must be at least {minimum}, got {value}", path)
        return value

    def _truncation(self) -> TruncationPolicy:
        block = self.data.get("alphabet", {})
        try:
            return TruncationPolicy(
                epsilon=float(block.get("epsilon", TruncationPolicy.epsilon)),
                max_symbols=int(block.get("max_symbols", TruncationPolicy.max_symbols)),
            )
        except (TypeError, ValueError) as e:
            raise self._error(str(e), "alphabet") from e

    def _measure_kind(self, raw: str) -> str:
        lowered = str(raw).strip().lower()
        for kind, spellings in self.MEASURE_KINDS.items():
            if lowered in spellings:
                return kind
        raise self._error(f"Unknown measure kind '{raw}'", "measure.kind")

    def _measure(self, truncation: TruncationPolicy) -> Optional[MeasureSpec]:
        block = self.data.get("measure")
        if block is None:
            return None
        symbols = self.data.get("alphabet", {}).get("symbols")
        kind = self._measure_kind(block.get("kind", "bernoulli"))
        try:
            if kind == "markov":
                if "initial" not in block or "transition" not in block:
                    raise self._error("Markov measures need 'initial' and 'transition'", "measure")
                return MeasureSpec.markov(block["initial"], block["transition"], symbols)
            if "family" in block:
                params = {k: v for k, v in block.items() if k not in ("kind", "family")}
                if block["family"] not in WEIGHT_FAMILIES:
                    raise self._error(
                        f"Unknown weight family '{block['family']}' "
                        f"(known: {', '.join(sorted(WEIGHT_FAMILIES))})",
                        "measure.family",
                    )
                return MeasureSpec.from_family(weight_family(block["family"], **params), truncation)
            if block.get("uniform"):
                size = len(symbols) if symbols is not None else self._map_count()
                if size < 1:
                    raise self._error("A uniform measure needs symbols or explicit maps", "measure.uniform")
                return MeasureSpec.bernoulli(np.full(size, 1.0 / size), symbols)
            if "weights" not in block:
                raise self._error("Bernoulli measures need 'weights', 'uniform' or 'family'", "measure")
            return MeasureSpec.bernoulli(block["weights"], symbols)
        except SpecError:
            raise
        except (AffineDimError, TypeError, ValueError) as e:
            raise self._error(str(e), "measure") from e

    def _map_count(self) -> int:
        return len(self.data.get("map", []))

    def _maps(self, dimension: int, measure: Optional[MeasureSpec], truncation: TruncationPolicy) -> AffineIFS:
        explicit = self.data.get("map")
        named = self.data.get("maps")
        if (explicit is None) == (named is None):
            raise self._error("Give either [[map]] tables or one [maps] family table", "map")
        if named is not None:
            return self._family_maps(named, dimension, measure, truncation)

        matrices, translations, symbols = [], [], []
        for index, entry in enumerate(explicit):
            path = f"map.{index}"
            matrix = np.asarray(entry.get("matrix", []), dtype=float)
            if matrix.shape != (dimension, dimension):
                raise self._error(
                    f"Matrix must be {dimension}x{dimension}, got shape {matrix.shape}", f"{path}.matrix"
                )
            translation = np.asarray(entry.get("translation", [0.0] * dimension), dtype=float)
            if translation.shape != (dimension,):
                raise self._error(
                    f"Translation must have {dimension} entries", f"{path}.translation"
                )
            matrices.append(matrix)
            translations.append(translation)
            symbols.append(int(entry.get("symbol", index)))

        alphabet_symbols = self.data.get("alphabet", {}).get("symbols")
        if alphabet_symbols is not None and list(alphabet_symbols) != symbols:
            raise self._error("alphabet.symbols must list the map symbols in order", "alphabet.symbols")
        try:
            ifs = AffineIFS.from_matrices(matrices, translations, symbols)
        except (AffineDimError, ValueError) as e:
            raise self._error(str(e), "map") from e
        self._check_measure_symbols(ifs, measure)
        return ifs

    def _family_maps(
        self, block: Dict[str, Any], dimension: int, measure: Optional[MeasureSpec], truncation: TruncationPolicy
    ) -> AffineIFS:
        name = block.get("family")
        if name not in MAP_FAMILIES:
            raise self._error(
                f"Unknown map family '{name}' (known: {', '.join(sorted(MAP_FAMILIES))})", "maps.family"
            )
        params = {k: v for k, v in block.items() if k != "family"}
        try:
            family = map_family(name, **params)
        except (TypeError, ValueError) as e:
            raise self._error(str(e), "maps") from e
        if family.dim != dimension:
            raise self._error(f"{name} has dimension {family.dim}, spec says {dimension}", "dimension")
        if measure is not None:
            alphabet = Alphabet(measure.alphabet.symbols, countable=True)
        else:
            alphabet = Alphabet.range(truncation.max_symbols, family.first_symbol)
            alphabet = Alphabet(alphabet.symbols, countable=True)
        try:
            return AffineIFS.from_family(family, alphabet)
        except (AffineDimError, ValueError) as e:
            raise self._error(str(e), "maps") from e

    def _check_measure_symbols(self, ifs: AffineIFS, measure: Optional[MeasureSpec]) -> None:
        if measure is None:
            return
        try:
            ifs.alphabet.positions(measure.alphabet.symbols)
        except KeyError as e:
            raise self._error(f"Measure uses a symbol without a map: {e}", "measure") from e

    def _experiment(self) -> ExperimentSpec:
        block = self.data.get("experiment", {})
        experiment = ExperimentSpec()
        for key, minimum in self.EXPERIMENT_FIELDS.items():
            if key in block:
                setattr(experiment, key, self._require_int(block, key, f"experiment.{key}", minimum=minimum))
        if "translations" in block:
            try:
                experiment.translations = TranslationMode(str(block["translations"]).lower())
            except ValueError:
                choices = ", ".join(m.value for m in TranslationMode)
                raise self._error(
                    f"translations must be one of {choices}", "experiment.translations"
                ) from None
        if "zero_draw" in block:
            if not isinstance(block["zero_draw"], bool):
                raise self._error("zero_draw must be true or false", "experiment.zero_draw")
            experiment.zero_draw = block["zero_draw"]
        for key in ("s_grid", "bin_widths"):
            if key in block:
                values = block[key]
                if not isinstance(values, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values
                ):
                    raise self._error(f"{key} must be a list of numbers", f"experiment.{key}")
                setattr(experiment, key, [float(v) for v in values])
        if "bin_coverage" in block:
            coverage = block["bin_coverage"]
            if isinstance(coverage, bool) or not isinstance(coverage, (int, float)) or not 0 < coverage <= 1:
                raise self._error("bin_coverage must lie in (0, 1]", "experiment.bin_coverage")
            experiment.bin_coverage = float(coverage)
        if any(s < 0 for s in experiment.s_grid):
            raise self._error("s_grid values must be non-negative", "experiment.s_grid")
        if any(b <= a for a, b in zip(experiment.s_grid, experiment.s_grid[1:])):
            raise self._error("s_grid must be strictly increasing", "experiment.s_grid")
        return experiment


def load_spec(path: str) -> SystemSpec:
    """Parse a spec file into a SystemSpec"""
    return SpecParser(path).parse()
