"""
Symbol space at finite resolution: alphabets, words, Bernoulli and Markov
measures, their entropies and seeded samplers.

Symbols are non-negative integers. Internally every array is indexed by the
symbol's position in its alphabet; Word values carry the symbols themselves.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.stats
from scipy.special import entr

from .console import log_verbose
from .errors import UnknownSymbol
from .families import TruncationPolicy, WeightFamily, materialise
from .rng import STREAM_WORDS, make_rng
from .series import TailCertificate, sum_series

PROBABILITY_TOLERANCE = 1e-12
STATIONARITY_TOLERANCE = 1e-10
ENTROPY_DIVERGENCE_THRESHOLD = 50.0


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Alphabet:
    """Finite list of symbols, or the materialised prefix of a countable alphabet"""
    symbols: np.ndarray
    countable: bool = False
    deficit: float = 0.0
    hit_cap: bool = False

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=np.int64).reshape(-1)
        if symbols.size == 0:
            raise ValueError("Alphabet must contain at least one symbol")
        if np.any(symbols < 0):
            raise ValueError("Symbols must be non-negative integers")
        if np.unique(symbols).size != symbols.size:
            raise ValueError("Alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", _read_only(symbols))

    @classmethod
    def finite(cls, symbols: Iterable[int]) -> "Alphabet":
        return cls(np.asarray(list(symbols), dtype=np.int64))

    @classmethod
    def range(cls, size: int, first: int = 0) -> "Alphabet":
        return cls(np.arange(first, first + size, dtype=np.int64))

    @property
    def size(self) -> int:
        return int(self.symbols.size)

    @cached_property
    def _contiguous(self) -> bool:
        return bool(np.all(np.diff(self.symbols) == 1))

    @cached_property
    def _sorter(self) -> np.ndarray:
        return np.argsort(self.symbols, kind="stable")

    def positions(self, symbols) -> np.ndarray:
        """Positions of the given symbols in this alphabet; UnknownSymbol if any is missing"""
        symbols = np.asarray(symbols, dtype=np.int64)
        if self._contiguous:
            positions = symbols - self.symbols[0]
            bad = (positions < 0) | (positions >= self.size)
        else:
            sorted_symbols = self.symbols[self._sorter]
            slots = np.clip(np.searchsorted(sorted_symbols, symbols), 0, self.size - 1)
            bad = sorted_symbols[slots] != symbols
            positions = self._sorter[slots]
        if np.any(bad):
            missing = np.asarray(symbols)[bad].reshape(-1)[0]
            raise UnknownSymbol(f"Symbol {int(missing)} is not in the alphabet")
        return positions


@dataclass(frozen=True, eq=False)
class Word:
    """A finite sequence of symbols"""
    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "symbols", _read_only(symbols))

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __iter__(self):
        return iter(int(s) for s in self.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.symbols[item])
        return int(self.symbols[item])

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash(self.symbols.tobytes())

    def __repr__(self) -> str:
        return f"Word({self.symbols.tolist()})"

    def shift(self) -> "Word":
        """Drop the first symbol"""
        return Word(self.symbols[1:])


class MeasureKind(Enum):
    BERNOULLI = "bernoulli"
    MARKOV = "markov"


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """
    A shift-invariant measure on sequences over an alphabet.

    Bernoulli measures carry per-symbol probabilities; Markov measures carry a
    stationary initial distribution (in `probabilities`) and a row-stochastic
    transition matrix. Countable weight families are materialised, truncated
    and renormalised; the family is kept for tail bounds.
    """
    alphabet: Alphabet
    kind: MeasureKind
    probabilities: np.ndarray
    transition: Optional[np.ndarray] = None
    family: Optional[WeightFamily] = None

    def __post_init__(self):
        probabilities = np.array(self.probabilities, dtype=float).reshape(-1)
        if probabilities.size != self.alphabet.size:
            raise ValueError(
                f"{probabilities.size} probabilities for an alphabet of {self.alphabet.size} symbols"
            )
        if not np.all(np.isfinite(probabilities)) or np.any(probabilities < 0):
            raise ValueError("Probabilities must be finite and non-negative")
        if abs(math.fsum(probabilities) - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"Probabilities sum to {math.fsum(probabilities)!r}, expected 1")
        object.__setattr__(self, "probabilities", _read_only(probabilities))

        if self.kind is MeasureKind.BERNOULLI:
            if self.transition is not None:
                raise ValueError("Bernoulli measures have no transition matrix")
            if np.any(probabilities == 0):
                raise ValueError("Bernoulli weights must be positive; drop zero-mass symbols")
            return

        transition = np.array(self.transition, dtype=float)
        size = self.alphabet.size
        if transition.shape != (size, size):
            raise ValueError(f"Transition matrix must be {size}x{size}, got {transition.shape}")
        if not np.all(np.isfinite(transition)) or np.any(transition < 0):
            raise ValueError("Transition probabilities must be finite and non-negative")
        row_sums = transition.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > PROBABILITY_TOLERANCE):
            raise ValueError(f"Transition rows must sum to 1, got {row_sums.tolist()}")
        drift = np.max(np.abs(probabilities @ transition - probabilities))
        if drift > STATIONARITY_TOLERANCE:
            raise ValueError(f"Initial distribution is not stationary (drift {drift:.3e})")
        object.__setattr__(self, "transition", _read_only(transition))

    @classmethod
    def bernoulli(cls, weights: Sequence[float], symbols: Optional[Iterable[int]] = None) -> "MeasureSpec":
        weights = np.asarray(weights, dtype=float)
        alphabet = Alphabet.range(weights.size) if symbols is None else Alphabet.finite(symbols)
        return cls(alphabet, MeasureKind.BERNOULLI, weights)

    @classmethod
    def uniform(cls, size: int) -> "MeasureSpec":
        return cls.bernoulli(np.full(size, 1.0 / size))

    @classmethod
    def markov(
        cls,
        initial: Sequence[float],
        transition: Sequence[Sequence[float]],
        symbols: Optional[Iterable[int]] = None,
    ) -> "MeasureSpec":
        initial = np.asarray(initial, dtype=float)
        alphabet = Alphabet.range(initial.size) if symbols is None else Alphabet.finite(symbols)
        return cls(alphabet, MeasureKind.MARKOV, initial, np.asarray(transition, dtype=float))

    @classmethod
    def from_family(cls, family: WeightFamily, policy: Optional[TruncationPolicy] = None) -> "MeasureSpec":
        """Bernoulli measure of a countable weight family, truncated and renormalised"""
        truncation = materialise(family, policy or TruncationPolicy())
        weights = np.exp(truncation.log_weights)
        weights = weights / math.fsum(weights)
        alphabet = Alphabet(
            family.first_symbol + truncation.ranks - 1,
            countable=True,
            deficit=truncation.deficit,
            hit_cap=truncation.hit_cap,
        )
        return cls(alphabet, MeasureKind.BERNOULLI, weights, family=family)

    @property
    def is_bernoulli(self) -> bool:
        return self.kind is MeasureKind.BERNOULLI

    @property
    def marginal(self) -> np.ndarray:
        """One-symbol distribution (the stationary distribution for Markov measures)"""
        return self.probabilities

    @cached_property
    def log_probabilities(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return _read_only(np.log(self.probabilities))

    @cached_property
    def log_transition(self) -> Optional[np.ndarray]:
        if self.transition is None:
            return None
        with np.errstate(divide="ignore"):
            return _read_only(np.log(self.transition))

    @cached_property
    def ranks(self) -> Optional[np.ndarray]:
        """1-based ranks of the materialised symbols of a countable family"""
        if self.family is None:
            return None
        return self.alphabet.symbols - self.family.first_symbol + 1

    @cached_property
    def _cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        return cdf

    @cached_property
    def _transition_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.transition, axis=1)
        cdf[:, -1] = 1.0
        return cdf

    def describe(self) -> str:
        if self.family is not None:
            return f"bernoulli[{self.family.describe()}, {self.alphabet.size} symbols]"
        return f"{self.kind.value}[{self.alphabet.size} symbols]"


@dataclass(frozen=True)
class EntropyResult:
    """Entropy of a measure in nats; value is math.inf when the entropy diverges"""
    value: float
    infinite: bool = False
    tail_bound: float = 0.0
    deficit: float = 0.0
    certificate: Optional[TailCertificate] = None

    def to_dict(self) -> dict:
        return {
            "value": "+inf" if self.infinite else self.value,
            "infinite": self.infinite,
            "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else "+inf",
            "deficit": self.deficit,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        }


def cylinder_mass(mu: MeasureSpec, w: Word) -> float:
    """Natural log of the measure of the cylinder of w"""
    if len(w) == 0:
        raise ValueError("cylinder_mass needs a non-empty word")
    positions = mu.alphabet.positions(w.symbols)
    if mu.is_bernoulli:
        return math.fsum(mu.log_probabilities[positions])
    steps = mu.log_transition[positions[:-1], positions[1:]]
    return math.fsum(np.concatenate(([mu.log_probabilities[positions[0]]], steps)))


def entropy(mu: MeasureSpec) -> EntropyResult:
    """
    Entropy of a Bernoulli measure or entropy rate of a stationary Markov measure.

    For countable families the series of the untruncated weights is tested
    against the family's entropy tail class: a non-summable class with a
    positive last term, or partial sums above the divergence threshold, gives
    the infinite result with its certificate. Otherwise the value is the
    entropy of the renormalised truncation and tail_bound bounds the
    contribution of the dropped symbols.
    """
    if not mu.is_bernoulli:
        rows = np.array([scipy.stats.entropy(row) for row in mu.transition])
        return EntropyResult(value=math.fsum(mu.probabilities * rows))

    value = math.fsum(entr(mu.probabilities))
    if mu.family is None:
        return EntropyResult(value=value)

    true_terms = entr(np.exp(mu.family.log_weights(mu.ranks)))
    series = sum_series(
        true_terms, mu.ranks, mu.family.entropy_model(), ENTROPY_DIVERGENCE_THRESHOLD
    )
    log_verbose(
        f"Entropy series for {mu.family.describe()}: partial {series.partial:.6g}, "
        f"divergent={series.divergent}"
    )
    if series.divergent:
        return EntropyResult(
            value=math.inf,
            infinite=True,
            tail_bound=math.inf,
            deficit=mu.alphabet.deficit,
            certificate=series.certificate,
        )
    return EntropyResult(
        value=value,
        tail_bound=series.tail_bound,
        deficit=mu.alphabet.deficit,
        certificate=series.certificate,
    )


class SequenceSampler:
    """
    Draws `count` independent sequences from a measure, block by block.

    Successive calls to next() continue the same sequences, so a long word can
    be drawn in pieces without holding it in memory.
    """

    def __init__(self, mu: MeasureSpec, rng: np.random.Generator, count: int = 1):
        if count < 1:
            raise ValueError("count must be positive")
        self.mu = mu
        self.rng = rng
        self.count = count
        self._state: Optional[np.ndarray] = None

    def next(self, length: int) -> np.ndarray:
        """Positions of the next `length` symbols, shape (count, length)"""
        if length < 1:
            raise ValueError("length must be positive")
        mu = self.mu
        last = mu.alphabet.size - 1
        if mu.is_bernoulli:
            draws = np.searchsorted(mu._cdf, self.rng.random((self.count, length)), side="right")
            return np.minimum(draws, last)

        out = np.empty((self.count, length), dtype=np.int64)
        uniforms = self.rng.random((self.count, length))
        state = self._state
        for step in range(length):
            if state is None:
                state = np.searchsorted(mu._cdf, uniforms[:, step], side="right")
            else:
                rows = mu._transition_cdf[state]
                state = (rows <= uniforms[:, step, None]).sum(axis=1)
            state = np.minimum(state, last)
            out[:, step] = state
        self._state = state
        return out


def sample_positions(mu: MeasureSpec, count: int, depth: int, seed: int, *keys: int) -> np.ndarray:
    """Alphabet positions of `count` sampled words of length depth, shape (count, depth)"""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    return SequenceSampler(mu, make_rng(seed, STREAM_WORDS, *keys), count).next(depth)


def sample_sequence(mu: MeasureSpec, depth: int, seed: int, *keys: int) -> Word:
    """A length-depth word drawn from mu, deterministic in (seed, keys)"""
    positions = sample_positions(mu, 1, depth, seed, *keys)[0]
    return Word(mu.alphabet.symbols[positions])


def empirical_local_entropy(mu: MeasureSpec, w: Word) -> float:
    """-(1/n) log mu[w]"""
    return -cylinder_mass(mu, w) / len(w)
