"""
Affine iterated function systems f_i(x) = A_i x + a_i.

A system holds one invertible contraction per symbol. Explicit systems store
their matrices; named countable families store only the logs of their
diagonals, so entries that underflow a double (c 4^-i for large i) stay
exact, and dense matrices are built on demand.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Sequence, Type

import numpy as np

from .errors import DimensionMismatch
from .families import INVERSE_SQUARE_CONSTANT, InverseSquareWeights
from .linalg_core import LogSingularSpectrum, Matrix
from .series import Growth, TailModel
from .symbolic_measure import Alphabet

HALF_NORM = 0.5


class MapFamily(ABC):
    """A countable family of diagonal contractions indexed by symbols i >= first_symbol"""

    name = "maps"
    dim = 2
    first_symbol = 1

    @abstractmethod
    def log_diagonals(self, symbols: np.ndarray) -> np.ndarray:
        """Log absolute diagonal entries, shape (len(symbols), dim), in a fixed slot order"""

    @abstractmethod
    def singular_growth(self, index: int) -> Growth:
        """Growth class in i of |log alpha_index(i)|, index 0 being the largest"""

    @abstractmethod
    def svf_model(self, s: float) -> TailModel:
        """Asymptotic class in i of phi^s(A_i)"""

    @abstractmethod
    def alpha1_model(self, s: float) -> TailModel:
        """Asymptotic class in i of alpha_1(A_i)^s"""

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}({args})" if args else self.name


@dataclass(frozen=True)
class GeometricSimilarity(MapFamily):
    """A_i = q^i I"""
    q: float = 0.5
    dim: int = 1
    name = "geometric_similarity"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"Similarity ratio must lie in (0, 1), got {self.q}")

    def log_diagonals(self, symbols: np.ndarray) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=float)
        return np.repeat((symbols * math.log(self.q))[:, None], self.dim, axis=1)

    def singular_growth(self, index: int) -> Growth:
        return Growth(power=1.0)

    def svf_model(self, s: float) -> TailModel:
        return TailModel(power=0.0, ratio=self.q ** s)

    def alpha1_model(self, s: float) -> TailModel:
        return TailModel(power=0.0, ratio=self.q ** s)

    def params(self) -> dict:
        return {"q": self.q, "dim": self.dim}


@dataclass(frozen=True)
class InverseSquareDiagonal(MapFamily):
    """A_i = diag(2 p_i, c 4^-i) with p_i = c (i + 1)^-2 the inverse_square weights"""
    name = "inverse_square_diagonal"

    def log_diagonals(self, symbols: np.ndarray) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=float)
        first = math.log(2.0) + InverseSquareWeights().log_weights(symbols)
        second = math.log(INVERSE_SQUARE_CONSTANT) - symbols * math.log(4.0)
        return np.stack([first, second], axis=1)

    def singular_growth(self, index: int) -> Growth:
        return Growth(log_power=1.0) if index == 0 else Growth(power=1.0)

    def svf_model(self, s: float) -> TailModel:
        if s <= 1.0:
            return TailModel(power=2.0 * s)
        if s <= 2.0:
            return TailModel(power=2.0, ratio=4.0 ** (1.0 - s))
        return TailModel(power=s, ratio=4.0 ** (-s / 2.0))

    def alpha1_model(self, s: float) -> TailModel:
        return TailModel(power=2.0 * s)


@dataclass(frozen=True)
class LogSquaredDiagonal(MapFamily):
    """A_i = diag(j^-1/2, j^-1) with j = floor(i log(i)^2), symbols i >= n0"""
    n0: int = 100

    name = "log_squared_diagonal"

    def __post_init__(self):
        if self.n0 < 3:
            raise ValueError(f"n0 must be at least 3, got {self.n0}")

    @property
    def first_symbol(self) -> int:
        return self.n0

    @staticmethod
    def growth_exponent(t: float) -> float:
        """phi^t(A_i) = j^-e(t)"""
        if t <= 1.0:
            return t / 2.0
        if t <= 2.0:
            return 0.5 + (t - 1.0)
        return 0.75 * t

    def log_diagonals(self, symbols: np.ndarray) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=float)
        log_j = np.log(np.floor(symbols * np.log(symbols) ** 2))
        return np.stack([-0.5 * log_j, -log_j], axis=1)

    def singular_growth(self, index: int) -> Growth:
        return Growth(log_power=1.0)

    def svf_model(self, s: float) -> TailModel:
        e = self.growth_exponent(s)
        return TailModel(power=e, log_power=2.0 * e)

    def alpha1_model(self, s: float) -> TailModel:
        return TailModel(power=s / 2.0, log_power=s)

    def params(self) -> dict:
        return {"n0": self.n0}


MAP_FAMILIES: Dict[str, Type[MapFamily]] = {
    GeometricSimilarity.name: GeometricSimilarity,
    InverseSquareDiagonal.name: InverseSquareDiagonal,
    LogSquaredDiagonal.name: LogSquaredDiagonal,
}


def map_family(name: str, **params) -> MapFamily:
    """Look up a map family by name"""
    try:
        cls = MAP_FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(MAP_FAMILIES))
        raise ValueError(f"Unknown map family '{name}' (known: {known})") from None
    return cls(**params)


@dataclass(frozen=True, eq=False)
class AffineIFS:
    """
    Contractions f_i(x) = A_i x + a_i over an alphabet.

    Exactly one of `matrices` (explicit systems) and `family` (countable
    diagonal families) is set. `translations` are the fixed vectors a_i used
    by the "fixed" translation mode; they default to zero.
    """
    alphabet: Alphabet
    matrices: Optional[np.ndarray] = None
    translations: Optional[np.ndarray] = None
    family: Optional[MapFamily] = None

    def __post_init__(self):
        if (self.matrices is None) == (self.family is None):
            raise ValueError("AffineIFS needs either explicit matrices or a map family")
        if self.matrices is not None:
            matrices = np.array(self.matrices, dtype=float)
            if matrices.ndim != 3 or matrices.shape[0] != self.alphabet.size:
                raise DimensionMismatch(
                    f"Expected {self.alphabet.size} matrices, got array of shape {matrices.shape}"
                )
            for entries in matrices:
                Matrix(entries)
            matrices.setflags(write=False)
            object.__setattr__(self, "matrices", matrices)
        else:
            if np.any(self.alphabet.symbols < self.family.first_symbol):
                raise ValueError(
                    f"{self.family.describe()} is indexed by symbols >= {self.family.first_symbol}"
                )
        if self.translations is not None:
            translations = np.array(self.translations, dtype=float)
            if translations.shape != (self.alphabet.size, self.dim):
                raise DimensionMismatch(
                    f"Expected translations of shape {(self.alphabet.size, self.dim)}, "
                    f"got {translations.shape}"
                )
            if np.any(np.abs(translations) > 0.5):
                raise ValueError("Translations must lie in the cube [-1/2, 1/2]^d")
            translations.setflags(write=False)
            object.__setattr__(self, "translations", translations)
        if self.norm_sup >= 1.0:
            raise ValueError(f"Every map must be a contraction; sup norm is {self.norm_sup:.6g}")

    @classmethod
    def from_matrices(
        cls,
        matrices: Sequence,
        translations: Optional[Sequence] = None,
        symbols: Optional[Sequence[int]] = None,
    ) -> "AffineIFS":
        entries = [m.entries if isinstance(m, Matrix) else np.asarray(m, dtype=float) for m in matrices]
        alphabet = Alphabet.range(len(entries)) if symbols is None else Alphabet.finite(symbols)
        return cls(alphabet, matrices=np.stack(entries), translations=translations)

    @classmethod
    def from_family(cls, family: MapFamily, alphabet: Alphabet) -> "AffineIFS":
        return cls(alphabet, family=family)

    @property
    def dim(self) -> int:
        if self.matrices is not None:
            return int(self.matrices.shape[1])
        return int(self.family.dim)

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def symbols(self) -> np.ndarray:
        return self.alphabet.symbols

    @cached_property
    def log_diagonals(self) -> np.ndarray:
        """Log absolute diagonal entries per symbol; only meaningful for diagonal systems"""
        if self.family is not None:
            values = self.family.log_diagonals(self.symbols)
        else:
            with np.errstate(divide="ignore"):
                values = np.log(np.abs(np.diagonal(self.matrices, axis1=1, axis2=2)))
        values.setflags(write=False)
        return values

    @cached_property
    def log_spectra(self) -> np.ndarray:
        """Log singular values per symbol, shape (size, dim), largest first"""
        if self.is_diagonal:
            values = -np.sort(-self.log_diagonals, axis=1)
        else:
            values = np.log(np.linalg.svd(self.matrices, compute_uv=False))
        values.setflags(write=False)
        return values

    def spectrum(self, position: int) -> LogSingularSpectrum:
        return LogSingularSpectrum(tuple(self.log_spectra[position]))

    @cached_property
    def norm_sup(self) -> float:
        return float(np.exp(self.log_spectra[:, 0].max()))

    @property
    def half_norm(self) -> bool:
        """Whether every map has operator norm below 1/2"""
        return self.norm_sup < HALF_NORM

    @cached_property
    def is_diagonal(self) -> bool:
        if self.family is not None:
            return True
        off_diagonal = self.matrices * (1.0 - np.eye(self.dim))
        return not np.any(off_diagonal)

    @cached_property
    def consistent_ordering(self) -> bool:
        """
        Diagonal system whose slots are ordered the same way for every symbol.

        Then singular values of any word are products of per-letter singular
        values, so phi^s is multiplicative along words.
        """
        if not self.is_diagonal:
            return False
        logs = self.log_diagonals
        order = np.argsort(-logs[0], kind="stable")
        arranged = logs[:, order]
        return bool(np.all(np.diff(arranged, axis=1) <= 0))

    @property
    def similarity(self) -> bool:
        """Every map is a similarity (all singular values of each map equal)"""
        spectra = self.log_spectra
        return bool(np.allclose(spectra[:, 0], spectra[:, -1], rtol=1e-12, atol=0.0))

    def matrix(self, symbol: int) -> Matrix:
        position = int(self.alphabet.positions([symbol])[0])
        return Matrix(self.matrix_stack(np.array([position]))[0])

    def matrix_stack(self, positions: np.ndarray) -> np.ndarray:
        """Dense matrices for alphabet positions; family entries may underflow to zero"""
        positions = np.asarray(positions, dtype=np.int64)
        if self.matrices is not None:
            return self.matrices[positions]
        diagonals = np.exp(self.log_diagonals[positions])
        stack = np.zeros(positions.shape + (self.dim, self.dim))
        index = np.arange(self.dim)
        stack[..., index, index] = diagonals
        return stack

    def translation_vectors(self) -> np.ndarray:
        if self.translations is None:
            return np.zeros((self.size, self.dim))
        return np.asarray(self.translations)

    @property
    def enclosing_radius(self) -> float:
        """R with f_i(B(0, R)) inside B(0, R) for translations in [-1/2, 1/2]^d"""
        return math.sqrt(self.dim) / 2.0 / (1.0 - self.norm_sup)

    def describe(self) -> str:
        if self.family is not None:
            return f"{self.family.describe()} over {self.size} symbols"
        return f"{self.size} explicit maps in dimension {self.dim}"
