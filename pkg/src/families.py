"""
Named countable weight families.

A weight family assigns the k-th symbol (k = 1, 2, ...) the probability p_k
and declares the asymptotic classes of p_k and of |log p_k|, which the series
machinery uses for tail bounds and divergence certificates. Families are
materialised into finite, renormalised weight vectors under a truncation
policy; the dropped mass is recorded.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Type

import numpy as np

from .console import log_verbose, log_warning
from .series import Growth, TailModel

DEFAULT_EPSILON = 1e-10
DEFAULT_MAX_SYMBOLS = 2_000_000
MIN_SYMBOLS = 16
CHUNK_SYMBOLS = 1 << 16


@dataclass(frozen=True)
class TruncationPolicy:
    """Keep the shortest prefix of symbols holding mass >= 1 - epsilon, capped at max_symbols"""
    epsilon: float = DEFAULT_EPSILON
    max_symbols: int = DEFAULT_MAX_SYMBOLS

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"Truncation epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_symbols < MIN_SYMBOLS:
            raise ValueError(f"max_symbols must be at least {MIN_SYMBOLS}, got {self.max_symbols}")


@dataclass(frozen=True)
class Truncation:
    """Result of materialising a family: ranks, true log weights and the dropped mass"""
    ranks: np.ndarray
    log_weights: np.ndarray
    deficit: float
    hit_cap: bool


class WeightFamily(ABC):
    """A probability vector over symbols 1, 2, 3, ..."""

    name = "weights"
    first_symbol = 1

    @abstractmethod
    def log_weights(self, ranks: np.ndarray) -> np.ndarray:
        """Normalised log p_k for each rank"""

    @abstractmethod
    def weight_model(self) -> TailModel:
        """Asymptotic class of p_k"""

    @abstractmethod
    def log_weight_growth(self) -> Growth:
        """Growth class of |log p_k|"""

    def entropy_model(self) -> TailModel:
        """Asymptotic class of the entropy terms -p_k log p_k"""
        return self.weight_model().times(self.log_weight_growth())

    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}({args})" if args else self.name


@dataclass(frozen=True)
class GeometricWeights(WeightFamily):
    """p_k = (1 - q) q^(k - 1); q = 1/2 gives p_k = 2^-k"""
    q: float = 0.5
    name = "geometric"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"Geometric ratio must lie in (0, 1), got {self.q}")

    def log_weights(self, ranks: np.ndarray) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=float)
        return math.log1p(-self.q) + (ranks - 1.0) * math.log(self.q)

    def weight_model(self) -> TailModel:
        return TailModel(power=0.0, ratio=self.q)

    def log_weight_growth(self) -> Growth:
        return Growth(power=1.0)

    def params(self) -> dict:
        return {"q": self.q}


@lru_cache(maxsize=None)
def _log_squared_normaliser(terms: int = 1_000_000) -> float:
    """Sum over j >= 2 of 1 / (j log(j)^2), partial sum plus a midpoint integral tail"""
    j = np.arange(2, terms + 2, dtype=float)
    partial = math.fsum(1.0 / (j * np.log(j) ** 2))
    return partial + 1.0 / math.log(terms + 1.5)


@dataclass(frozen=True)
class LogSquaredWeights(WeightFamily):
    """p_k = c / ((k + 1) log(k + 1)^2): finite mass, infinite entropy"""
    name = "log_squared"

    def log_weights(self, ranks: np.ndarray) -> np.ndarray:
        shifted = np.asarray(ranks, dtype=float) + 1.0
        logs = np.log(shifted)
        return -math.log(_log_squared_normaliser()) - logs - 2.0 * np.log(logs)

    def weight_model(self) -> TailModel:
        return TailModel(power=1.0, log_power=2.0)

    def log_weight_growth(self) -> Growth:
        return Growth(log_power=1.0)


INVERSE_SQUARE_CONSTANT = 1.0 / (math.pi ** 2 / 6.0 - 1.0)


@dataclass(frozen=True)
class InverseSquareWeights(WeightFamily):
    """p_k = c (k + 1)^-2 with c = 1 / (pi^2/6 - 1)"""
    name = "inverse_square"

    def log_weights(self, ranks: np.ndarray) -> np.ndarray:
        shifted = np.asarray(ranks, dtype=float) + 1.0
        return math.log(INVERSE_SQUARE_CONSTANT) - 2.0 * np.log(shifted)

    def weight_model(self) -> TailModel:
        return TailModel(power=2.0)

    def log_weight_growth(self) -> Growth:
        return Growth(log_power=1.0)


WEIGHT_FAMILIES: Dict[str, Type[WeightFamily]] = {
    GeometricWeights.name: GeometricWeights,
    LogSquaredWeights.name: LogSquaredWeights,
    InverseSquareWeights.name: InverseSquareWeights,
}


def weight_family(name: str, **params) -> WeightFamily:
    """Look up a weight family by name"""
    try:
        cls = WEIGHT_FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(WEIGHT_FAMILIES))
        raise ValueError(f"Unknown weight family '{name}' (known: {known})") from None
    return cls(**params)


def materialise(family: WeightFamily, policy: TruncationPolicy) -> Truncation:
    """
    Materialise the shortest prefix of a family that holds mass >= 1 - epsilon.

    Returns the true (not renormalised) log weights; the caller renormalises.
    Stops at policy.max_symbols and reports hit_cap when the mass target was
    not reached.
    """
    ranks_parts = []
    logs_parts = []
    mass = 0.0
    start = 1
    target = 1.0 - policy.epsilon
    reached = False
    while start <= policy.max_symbols and not reached:
        stop = min(start + CHUNK_SYMBOLS, policy.max_symbols + 1)
        ranks = np.arange(start, stop, dtype=np.int64)
        logs = family.log_weights(ranks)
        running = mass + np.cumsum(np.exp(logs))
        hits = np.nonzero(running >= target)[0]
        if hits.size:
            keep = max(int(hits[0]) + 1, MIN_SYMBOLS - start + 1)
            keep = min(keep, len(ranks))
            ranks, logs = ranks[:keep], logs[:keep]
            reached = True
        ranks_parts.append(ranks)
        logs_parts.append(logs)
        mass = float(running[len(ranks) - 1])
        start = stop

    ranks = np.concatenate(ranks_parts)
    logs = np.concatenate(logs_parts)
    deficit = max(0.0, 1.0 - math.fsum(np.exp(logs)))
    hit_cap = not reached
    log_verbose(f"Materialised {family.describe()}: {len(ranks)} symbols, deficit {deficit:.3e}")
    if hit_cap:
        log_warning(
            f"{family.describe()} truncated at the {policy.max_symbols}-symbol cap "
            f"with mass deficit {deficit:.3e} (target {policy.epsilon:.1e})"
        )
    ranks.setflags(write=False)
    logs.setflags(write=False)
    return Truncation(ranks=ranks, log_weights=logs, deficit=deficit, hit_cap=hit_cap)
