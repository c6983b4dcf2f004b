"""
System pressure P(s) = lim (1/n) log sum over words w of length n of phi^s(w).

Level sums enumerate every word of a finite (or truncated) alphabet in
batches; the running infimum over levels is a certified upper bound on P(s).
Consistently ordered diagonal systems have multiplicative phi^s, so their
level sums do not depend on n and the level-1 series (with its tail model
for countable families) is exact.
"""

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .console import log_verbose
from .errors import NegativeExponent, NoCertificate, NoSignChange, TooLarge
from .extended_real import PLUS_INFINITY, ExtendedReal
from .ifs import AffineIFS
from .linalg_core import SpectrumAccumulator, svf_array
from .series import LogSeriesSum, TailCertificate, log_sum_series

ENUMERATION_CAP = 10_000_000
BLOCK_WORDS = 1 << 16
PRESSURE_DIVERGENCE_THRESHOLD = 1e6
S_INFINITY_WIDTH = 1e-6
ROOT_TOLERANCE = 1e-8
MAX_SEARCH_S = 1024.0

SVF = "svf"
ALPHA1 = "alpha1"


@dataclass(frozen=True)
class PressureEstimate:
    """
    Upper bound on P(s) with the per-level values it was taken from.

    `exact` marks values that are not just bounds (consistently ordered
    diagonal systems over a finite alphabet). For countable families `lower`
    is the log of the truncated partial sum and `upper` adds the tail bound.
    """
    s: float
    upper: ExtendedReal
    trend: Tuple[float, ...]
    exact: bool = False
    lower: Optional[float] = None
    certificate: Optional[TailCertificate] = None


@dataclass(frozen=True, eq=False)
class PressureCurve:
    """Upper bounds on P(s) over a grid with the per-level values behind them"""
    s_grid: Tuple[float, ...]
    values: Tuple[ExtendedReal, ...]
    levels: Tuple[int, ...]
    per_level: np.ndarray
    lower: Tuple[Optional[float], ...] = ()
    exact: Tuple[bool, ...] = ()

    def running_infimum(self) -> np.ndarray:
        """Running infimum over levels, shape (len(s_grid), len(levels))"""
        return np.minimum.accumulate(self.per_level, axis=1)


@dataclass(frozen=True)
class SInfinity:
    """
    Finiteness threshold inf{s : P(s) < inf}.

    zero_flag marks finite alphabets, where P is finite for every s >= 0.
    Otherwise the level-1 series diverges at `below` and converges at `above`.
    """
    value: float
    zero_flag: bool = False
    below: Optional[float] = None
    above: Optional[float] = None
    below_certificate: Optional[TailCertificate] = None
    above_certificate: Optional[TailCertificate] = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "zero_flag": self.zero_flag,
            "bracket": None if self.below is None else [self.below, self.above],
            "below_certificate": None if self.below_certificate is None else self.below_certificate.to_dict(),
            "above_certificate": None if self.above_certificate is None else self.above_certificate.to_dict(),
        }


@dataclass(frozen=True)
class PressureRoot:
    """
    Zero of the level-bounded pressure upper bound.

    jump is set when the pressure is +inf just left of the root, so the
    value is the threshold where P drops from +inf to negative values
    rather than a zero crossing.
    """
    root: float
    bracket: Tuple[float, float]
    jump: bool = False
    max_level: int = 1
    quantity: str = SVF

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "bracket": list(self.bracket),
            "jump": self.jump,
            "max_level": self.max_level,
            "quantity": self.quantity,
        }


def _log_values(log_spectra: np.ndarray, s: float, quantity: str) -> np.ndarray:
    if quantity == ALPHA1:
        return s * log_spectra[..., 0]
    return svf_array(log_spectra, s)


def _inner_depth(size: int, n: int) -> int:
    """Number of left letters expanded as one batch, keeping batches near BLOCK_WORDS"""
    depth = 1
    while depth < n and size ** (depth + 1) <= BLOCK_WORDS:
        depth += 1
    return depth


def word_log_spectra(ifs: AffineIFS, n: int) -> Iterator[np.ndarray]:
    """
    Log singular values of every word of length n, in batches of shape (batch, d).

    Words are split into a right part enumerated one at a time and a left
    part expanded as a batch, so memory stays bounded by BLOCK_WORDS.
    """
    size = ifs.size
    inner = _inner_depth(size, n)
    outer = n - inner
    if ifs.is_diagonal:
        logs = ifs.log_diagonals
        for suffix in product(range(size), repeat=outer):
            base = logs[list(suffix)].sum(axis=0) if suffix else np.zeros(ifs.dim)
            sums = base[None, :]
            for _ in range(inner):
                sums = (logs[:, None, :] + sums[None, :, :]).reshape(-1, ifs.dim)
            yield -np.sort(-sums, axis=1)
        return

    stack = ifs.matrix_stack(np.arange(size))
    for suffix in product(range(size), repeat=outer):
        accumulator = SpectrumAccumulator(ifs.dim)
        for letter in reversed(suffix):
            accumulator.push_left(stack[letter][None])
        for _ in range(inner):
            batch = accumulator.batch
            accumulator = accumulator.repeat(size)
            accumulator.push_left(np.repeat(stack, batch, axis=0))
        yield accumulator.log_singular_values()


def _level_sum(ifs: AffineIFS, s: float, n: int, quantity: str) -> ExtendedReal:
    if s < 0:
        raise NegativeExponent(f"Pressure needs s >= 0, got {s}")
    if n < 1:
        raise ValueError(f"Level must be at least 1, got {n}")
    if ifs.consistent_ordering:
        return ExtendedReal.finite(float(logsumexp(_log_values(ifs.log_spectra, s, quantity))))
    words = ifs.size ** n
    if words > ENUMERATION_CAP:
        raise TooLarge(words, ENUMERATION_CAP)
    total = -math.inf
    for log_spectra in word_log_spectra(ifs, n):
        total = float(np.logaddexp(total, logsumexp(_log_values(log_spectra, s, quantity))))
    return ExtendedReal.finite(total / n)


def level_sum(ifs: AffineIFS, s: float, n: int) -> ExtendedReal:
    """(1/n) log of the sum of phi^s(w) over the words of length n"""
    return _level_sum(ifs, s, n, SVF)


def feasible_level(ifs: AffineIFS, requested: int) -> int:
    """Largest level <= requested whose enumeration stays under the cap"""
    if ifs.consistent_ordering or ifs.size == 1:
        return requested
    level = 1
    while level < requested and ifs.size ** (level + 1) <= ENUMERATION_CAP:
        level += 1
    return level


def _level_one_series(ifs: AffineIFS, s: float, quantity: str) -> LogSeriesSum:
    model = ifs.family.alpha1_model(s) if quantity == ALPHA1 else ifs.family.svf_model(s)
    return log_sum_series(
        _log_values(ifs.log_spectra, s, quantity),
        ifs.symbols,
        model,
        math.log(PRESSURE_DIVERGENCE_THRESHOLD),
    )


def _estimate(ifs: AffineIFS, s: float, max_level: int, quantity: str) -> PressureEstimate:
    if max_level < 1:
        raise ValueError(f"max_level must be at least 1, got {max_level}")
    if s < 0:
        raise NegativeExponent(f"Pressure needs s >= 0, got {s}")

    if ifs.consistent_ordering and ifs.family is not None:
        series = _level_one_series(ifs, s, quantity)
        trend = (series.log_partial,) * max_level
        if series.divergent:
            return PressureEstimate(s, PLUS_INFINITY, trend, certificate=series.certificate)
        return PressureEstimate(
            s,
            ExtendedReal.from_float(series.log_upper),
            trend,
            lower=series.log_partial,
            certificate=series.certificate,
        )

    if ifs.consistent_ordering:
        value = _level_sum(ifs, s, 1, quantity)
        return PressureEstimate(s, value, (float(value),) * max_level, exact=True)

    trend = tuple(float(_level_sum(ifs, s, n, quantity)) for n in range(1, max_level + 1))
    return PressureEstimate(s, ExtendedReal.finite(min(trend)), trend)


def pressure_estimate(ifs: AffineIFS, s: float, max_level: int) -> PressureEstimate:
    """Running infimum over levels 1..max_level of the level sums: an upper bound on P(s)"""
    return _estimate(ifs, s, max_level, SVF)


def pressure_curve(ifs: AffineIFS, s_grid: Sequence[float], max_level: int) -> PressureCurve:
    """pressure_estimate over an increasing grid of s values"""
    grid = tuple(float(s) for s in s_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("s grid must be strictly increasing")
    estimates = [pressure_estimate(ifs, s, max_level) for s in grid]
    for estimate in estimates:
        log_verbose(f"P({estimate.s:g}) <= {estimate.upper}")
    return PressureCurve(
        s_grid=grid,
        values=tuple(e.upper for e in estimates),
        levels=tuple(range(1, max_level + 1)),
        per_level=np.array([e.trend for e in estimates], dtype=float),
        lower=tuple(e.lower for e in estimates),
        exact=tuple(e.exact for e in estimates),
    )


def s_infinity(ifs: AffineIFS, width: float = S_INFINITY_WIDTH) -> SInfinity:
    """
    Threshold where the level-1 series of phi^s starts to converge.

    Bisection runs on the summability class declared by the map family; the
    final bracket ends are then checked against the computed series: the
    lower end must show a divergence certificate and the upper end a finite
    tail bound.
    """
    if ifs.family is None:
        return SInfinity(value=0.0, zero_flag=True)

    family = ifs.family
    if family.svf_model(0.0).summable():
        return SInfinity(value=0.0, below=0.0, above=0.0)

    low, high = 0.0, 1.0
    while not family.svf_model(high).summable():
        low, high = high, 2.0 * high
        if high > MAX_SEARCH_S:
            raise NoCertificate(f"phi^s series of {family.describe()} never becomes summable")
    while high - low > width:
        middle = 0.5 * (low + high)
        if family.svf_model(middle).summable():
            high = middle
        else:
            low = middle

    below = _level_one_series(ifs, low, SVF)
    above = _level_one_series(ifs, high, SVF)
    if not below.divergent:
        raise NoCertificate(f"No divergence certificate at s = {low:.9g}")
    if above.divergent or not math.isfinite(above.log_upper):
        raise NoCertificate(f"No convergent tail bound at s = {high:.9g}")
    log_verbose(f"s_infinity bracket for {family.describe()}: [{low:.9g}, {high:.9g}]")
    return SInfinity(
        value=0.5 * (low + high),
        below=low,
        above=high,
        below_certificate=below.certificate,
        above_certificate=above.certificate,
    )


def _zero(ifs: AffineIFS, max_level: int, quantity: str, tolerance: float) -> PressureRoot:
    def upper(s: float) -> float:
        return float(_estimate(ifs, s, max_level, quantity).upper)

    low = 0.0
    if upper(low) <= 0:
        return PressureRoot(0.0, (0.0, 0.0), max_level=max_level, quantity=quantity)
    high = 1.0
    while upper(high) >= 0:
        low, high = high, 2.0 * high
        if high > MAX_SEARCH_S:
            raise NoSignChange(f"Pressure stays non-negative on [0, {MAX_SEARCH_S:g}]")
    while high - low > tolerance:
        middle = 0.5 * (low + high)
        if upper(middle) >= 0:
            low = middle
        else:
            high = middle
    jump = math.isinf(upper(low))
    return PressureRoot(
        0.5 * (low + high), (low, high), jump=jump, max_level=max_level, quantity=quantity
    )


def pressure_zero(ifs: AffineIFS, max_level: int, tolerance: float = ROOT_TOLERANCE) -> PressureRoot:
    """Bisection on s -> pressure_estimate(ifs, s, max_level).upper"""
    return _zero(ifs, max_level, SVF, tolerance)


def alpha1_zero(ifs: AffineIFS, max_level: int, tolerance: float = ROOT_TOLERANCE) -> PressureRoot:
    """Zero of s -> lim (1/n) log sum of alpha_1(w)^s, the norm-only analogue of the pressure"""
    return _zero(ifs, max_level, ALPHA1, tolerance)
