"""
Certified sums of positive series over countable alphabets.

A countable family declares, for every quantity it sums, the asymptotic class
of its k-th term as an envelope k**(-power) * log(k)**(-log_power) * ratio**k.
The class decides summability by comparison; the constant in front is
calibrated on the last computed terms. A summable class yields a tail bound,
a non-summable class with a positive last term yields a divergence
certificate.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma, gammaincc, logsumexp

CALIBRATION_WINDOW = 256
CALIBRATION_SAFETY = 2.0
MIN_ENVELOPE_RANK = 3


@dataclass(frozen=True)
class Growth:
    """Growth class k**power * log(k)**log_power * ratio**k of a per-term factor"""
    power: float = 0.0
    log_power: float = 0.0
    ratio: float = 1.0


@dataclass(frozen=True)
class TailModel:
    """Envelope k**(-power) * log(k)**(-log_power) * ratio**k of the k-th term"""
    power: float
    log_power: float = 0.0
    ratio: float = 1.0

    def summable(self) -> bool:
        if self.ratio < 1.0:
            return True
        if self.ratio > 1.0:
            return False
        if self.power > 1.0:
            return True
        return self.power == 1.0 and self.log_power > 1.0

    def times(self, growth: Growth) -> "TailModel":
        """Envelope of the term multiplied by a factor of the given growth"""
        return TailModel(
            power=self.power - growth.power,
            log_power=self.log_power - growth.log_power,
            ratio=self.ratio * growth.ratio,
        )

    def log_envelope(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=float)
        logs = np.log(ranks)
        value = -self.power * logs
        if self.log_power:
            value = value - self.log_power * np.log(logs)
        if self.ratio != 1.0:
            value = value + ranks * math.log(self.ratio)
        return value

    def envelope_tail(self, start: int) -> float:
        """Upper bound on the sum of the envelope over ranks >= start"""
        if not self.summable():
            return math.inf
        start = max(int(start), MIN_ENVELOPE_RANK)
        first = math.exp(float(self.log_envelope([start])[0]))
        if self.ratio < 1.0:
            step = self.ratio
            step *= max(1.0, ((start + 1) / start) ** (-self.power))
            step *= max(1.0, (math.log(start + 1) / math.log(start)) ** (-self.log_power))
            if step >= 1.0:
                return math.inf
            return first / (1.0 - step)
        # ratio == 1: the envelope must already be decreasing at `start`
        log_start = math.log(start)
        if self.power * log_start + self.log_power <= 0:
            return math.inf
        if self.power > 1.0:
            excess = self.power - 1.0
            if self.log_power >= 1.0:
                integral = log_start ** (-self.log_power) * start ** (-excess) / excess
            else:
                shape = 1.0 - self.log_power
                integral = (
                    excess ** (self.log_power - 1.0)
                    * gammaincc(shape, excess * log_start)
                    * gamma(shape)
                )
            return first + integral
        # power == 1 and log_power > 1
        return first + log_start ** (1.0 - self.log_power) / (self.log_power - 1.0)


@dataclass(frozen=True)
class TailCertificate:
    """Evidence for the convergence or divergence of a truncated series"""
    model: Optional[TailModel]
    summable: bool
    terms: int
    last_rank: int
    floor: float
    coefficient: float
    tail_bound: float

    def to_dict(self) -> dict:
        return {
            "model": None if self.model is None else {
                "power": self.model.power,
                "log_power": self.model.log_power,
                "ratio": self.model.ratio,
            },
            "summable": self.summable,
            "terms": self.terms,
            "last_rank": self.last_rank,
            "floor": self.floor,
            "coefficient": self.coefficient,
            "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else "+inf",
        }


@dataclass(frozen=True)
class SeriesSum:
    """Partial sum of a positive series plus what is known about its tail"""
    partial: float
    tail_bound: float
    divergent: bool
    certificate: TailCertificate

    @property
    def upper(self) -> float:
        return self.partial + self.tail_bound


@dataclass(frozen=True)
class LogSeriesSum:
    """Log of a positive series' partial sum plus what is known about its tail"""
    log_partial: float
    log_upper: float
    divergent: bool
    certificate: TailCertificate


def _calibrate(log_terms: np.ndarray, ranks: np.ndarray, model: TailModel) -> float:
    window = slice(max(0, len(ranks) - CALIBRATION_WINDOW), len(ranks))
    usable = ranks[window] >= MIN_ENVELOPE_RANK
    if not np.any(usable):
        return math.inf
    excess = log_terms[window][usable] - model.log_envelope(ranks[window][usable])
    return float(np.max(excess)) + math.log(CALIBRATION_SAFETY)


def log_sum_series(
    log_terms: np.ndarray,
    ranks: np.ndarray,
    model: Optional[TailModel],
    log_threshold: float = math.inf,
) -> LogSeriesSum:
    """
    Sum exp(log_terms) with a tail model for the ranks beyond the last one.

    Args:
        log_terms: Logs of the computed terms
        ranks: 1-based ranks of those terms, increasing
        model: Asymptotic class of the terms; None for a complete finite sum
        log_threshold: Log partial sums above this count as divergent when
            the last term is still positive

    Returns:
        LogSeriesSum with log_upper = +inf when the series diverges
    """
    log_terms = np.asarray(log_terms, dtype=float)
    ranks = np.asarray(ranks)
    log_partial = float(logsumexp(log_terms)) if len(log_terms) else -math.inf
    last_rank = int(ranks[-1]) if len(ranks) else 0
    floor = math.exp(float(log_terms[-1])) if len(log_terms) else 0.0

    if model is None:
        certificate = TailCertificate(None, True, len(log_terms), last_rank, floor, 0.0, 0.0)
        return LogSeriesSum(log_partial, log_partial, False, certificate)

    summable = model.summable()
    divergent = floor > 0.0 and (not summable or log_partial > log_threshold)
    if divergent or not summable:
        certificate = TailCertificate(model, False, len(log_terms), last_rank, floor, math.nan, math.inf)
        return LogSeriesSum(log_partial, math.inf, True, certificate)

    log_coefficient = _calibrate(log_terms, ranks, model)
    tail = model.envelope_tail(last_rank + 1)
    if not math.isfinite(log_coefficient) or not math.isfinite(tail):
        certificate = TailCertificate(model, True, len(log_terms), last_rank, floor, math.nan, math.inf)
        return LogSeriesSum(log_partial, math.inf, False, certificate)
    log_tail = log_coefficient + math.log(tail) if tail > 0 else -math.inf
    log_upper = float(np.logaddexp(log_partial, log_tail))
    certificate = TailCertificate(
        model, True, len(log_terms), last_rank, floor,
        math.exp(log_coefficient), math.exp(log_tail),
    )
    return LogSeriesSum(log_partial, log_upper, False, certificate)


def sum_series(
    terms: np.ndarray,
    ranks: np.ndarray,
    model: Optional[TailModel],
    threshold: float = math.inf,
) -> SeriesSum:
    """Linear-scale version of log_sum_series for non-negative terms"""
    terms = np.asarray(terms, dtype=float)
    if np.any(terms < 0):
        raise ValueError("sum_series needs non-negative terms")
    partial = math.fsum(terms)
    positive = terms > 0
    with np.errstate(divide="ignore"):
        log_terms = np.log(terms)
    log_threshold = math.log(threshold) if threshold > 0 and math.isfinite(threshold) else math.inf
    if model is not None and not np.all(positive):
        # zero terms carry no information about the tail; calibrate on the rest
        ranks = np.asarray(ranks)[positive]
        log_terms = log_terms[positive]
    result = log_sum_series(log_terms, ranks, model, log_threshold)
    tail = result.certificate.tail_bound if not result.divergent else math.inf
    return SeriesSum(partial, tail, result.divergent, result.certificate)
