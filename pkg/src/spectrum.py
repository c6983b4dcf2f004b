"""
Lyapunov exponents of a measure, the energy Lambda(s), the measure pressure
P_mu(s) = h + Lambda(s) and the Lyapunov dimension inf{s : P_mu(s) < 0}.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .console import log_verbose, log_warning
from .errors import NegativeExponent, NoRoot, NotBernoulli, NotDiagonal
from .extended_real import MINUS_INFINITY, ZERO, ExtendedReal
from .ifs import AffineIFS
from .linalg_core import SpectrumAccumulator
from .rng import STREAM_REPLICAS, make_rng
from .series import sum_series
from .symbolic_measure import MeasureSpec, SequenceSampler

MIN_MONTE_CARLO_STEPS = 1000
DEFAULT_REPLICAS = 20
MINUS_INFINITY_FLOOR = -50.0
SAMPLE_BLOCK = 4096
EXPONENT_DIVERGENCE_THRESHOLD = 1e6
BISECTION_TOLERANCE = 1e-12
MAX_BISECTION_UPPER = 1e6


class Method(Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Exponents lambda_1 >= ... >= lambda_d, each finite or -inf"""
    exponents: Tuple[ExtendedReal, ...]
    method: Method = Method.EXACT
    steps: Optional[int] = None
    replicas: Optional[int] = None
    stderr: Tuple[float, ...] = ()
    possibly_minus_infinity: Tuple[bool, ...] = ()
    tail_bounds: Tuple[float, ...] = ()

    def __post_init__(self):
        exponents = tuple(
            e if isinstance(e, ExtendedReal) else ExtendedReal.from_float(float(e))
            for e in self.exponents
        )
        if not exponents:
            raise ValueError("A Lyapunov spectrum needs at least one exponent")
        if any(exponents[i] < exponents[i + 1] for i in range(len(exponents) - 1)):
            raise ValueError(f"Exponents must be sorted decreasing: {[str(e) for e in exponents]}")
        if any(e.is_plus_infinity for e in exponents):
            raise ValueError("Lyapunov exponents cannot be +inf")
        object.__setattr__(self, "exponents", exponents)

    @classmethod
    def of(cls, *values: float) -> "LyapunovSpectrum":
        return cls(tuple(ExtendedReal.from_float(v) for v in values))

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def to_dict(self) -> dict:
        return {
            "exponents": [e.to_json() for e in self.exponents],
            "method": self.method.value,
            "steps": self.steps,
            "replicas": self.replicas,
            "stderr": list(self.stderr),
            "possibly_minus_infinity": list(self.possibly_minus_infinity),
            "tail_bounds": [b if math.isfinite(b) else "+inf" for b in self.tail_bounds],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LyapunovSpectrum":
        return cls(
            exponents=tuple(ExtendedReal.from_json(e) for e in data["exponents"]),
            method=Method(data["method"]),
            steps=data.get("steps"),
            replicas=data.get("replicas"),
            stderr=tuple(data.get("stderr", ())),
            possibly_minus_infinity=tuple(data.get("possibly_minus_infinity", ())),
            tail_bounds=tuple(
                math.inf if b == "+inf" else b for b in data.get("tail_bounds", ())
            ),
        )


@dataclass(frozen=True)
class EnergyValue:
    s: float
    value: ExtendedReal


@dataclass(frozen=True)
class LyapunovDimension:
    """
    inf{s : h + Lambda(s) < 0}.

    bracket brackets the sign change; it collapses to (value, value) when the
    root was solved in closed form. discontinuity_hit marks a value sitting on
    the jump of Lambda to -inf, where the pressure need not vanish.
    """
    value: float
    bracket: Tuple[float, float]
    discontinuity_hit: bool = False
    exact: bool = True

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "bracket": list(self.bracket),
            "discontinuity_hit": self.discontinuity_hit,
            "exact": self.exact,
        }


def _mu_positions(ifs: AffineIFS, mu: MeasureSpec) -> np.ndarray:
    """Positions in the system's alphabet of the measure's symbols"""
    return ifs.alphabet.positions(mu.alphabet.symbols)


def exponents_exact_diagonal(ifs: AffineIFS, mu: MeasureSpec) -> LyapunovSpectrum:
    """
    Exponents of a diagonal system under a Bernoulli measure.

    Each diagonal slot contributes sum_i p_i log|a_i|; the slot sums sorted
    decreasing are the exponents. For countable families the slot is the
    partial sum of the untruncated weights p_i over the kept symbols, and its
    tail bound covers the dropped ones; a slot whose series diverges (against
    the family's growth class) is -inf.
    """
    if not ifs.is_diagonal:
        raise NotDiagonal("exponents_exact_diagonal needs every matrix to be diagonal")
    if not mu.is_bernoulli:
        raise NotBernoulli("exponents_exact_diagonal needs a Bernoulli measure")

    logs = ifs.log_diagonals[_mu_positions(ifs, mu)]
    slot_rank = np.argsort(np.argsort(-logs[0], kind="stable"), kind="stable")
    countable = mu.family is not None and ifs.family is not None
    true_weights = np.exp(mu.family.log_weights(mu.ranks)) if countable else None

    slots = []
    for slot in range(ifs.dim):
        terms = -logs[:, slot]
        if not countable:
            slots.append((ExtendedReal.finite(-math.fsum(mu.probabilities * terms)), 0.0))
            continue
        model = mu.family.weight_model().times(ifs.family.singular_growth(int(slot_rank[slot])))
        series = sum_series(
            true_weights * terms, mu.alphabet.symbols, model, EXPONENT_DIVERGENCE_THRESHOLD
        )
        if series.divergent:
            log_verbose(f"Slot {slot} series diverges: exponent is -inf")
            slots.append((MINUS_INFINITY, math.inf))
        else:
            slots.append((ExtendedReal.finite(-series.partial), series.tail_bound))

    slots.sort(key=lambda item: float(item[0]), reverse=True)
    return LyapunovSpectrum(
        exponents=tuple(e for e, _ in slots),
        method=Method.EXACT,
        tail_bounds=tuple(b for _, b in slots),
    )


def exponents_monte_carlo(
    ifs: AffineIFS,
    mu: MeasureSpec,
    steps: int,
    replicas: int = DEFAULT_REPLICAS,
    seed: int = 0,
    floor: float = MINUS_INFINITY_FLOOR,
) -> LyapunovSpectrum:
    """
    Estimate the exponents from sampled trajectories.

    Every replica draws its own word from the stream (seed, replicas, r) and
    accumulates the product spectrum of its first `steps` letters; the
    estimate is the replica mean of log alpha_l / steps with its standard
    error. Means below `floor` are flagged as possibly -inf.
    """
    if steps < MIN_MONTE_CARLO_STEPS:
        raise ValueError(f"Monte Carlo needs at least {MIN_MONTE_CARLO_STEPS} steps, got {steps}")
    if replicas < 1:
        raise ValueError("replicas must be positive")

    positions = _mu_positions(ifs, mu)
    samplers = [
        SequenceSampler(mu, make_rng(seed, STREAM_REPLICAS, r)) for r in range(replicas)
    ]
    diagonal = ifs.is_diagonal
    if diagonal:
        totals = np.zeros((replicas, ifs.dim))
    else:
        accumulator = SpectrumAccumulator(ifs.dim, replicas)

    done = 0
    while done < steps:
        length = min(SAMPLE_BLOCK, steps - done)
        draws = positions[np.concatenate([s.next(length) for s in samplers], axis=0)]
        if diagonal:
            totals += ifs.log_diagonals[draws].sum(axis=1)
        else:
            for step in range(length):
                # pushing transposes in draw order builds the transpose of the product
                accumulator.push_left(np.swapaxes(ifs.matrix_stack(draws[:, step]), 1, 2))
        done += length
        log_verbose(f"Monte Carlo: {done}/{steps} steps for {replicas} replicas")

    if diagonal:
        log_values = -np.sort(-totals, axis=1)
    else:
        log_values = accumulator.log_singular_values()
    estimates = log_values / steps
    means = estimates.mean(axis=0)
    if replicas > 1:
        stderr = estimates.std(axis=0, ddof=1) / math.sqrt(replicas)
    else:
        stderr = np.zeros(ifs.dim)
    flagged = tuple(bool(m < floor) for m in means)
    if any(flagged):
        log_warning(f"Exponents below the floor {floor} may be -inf: {means[np.array(flagged)].tolist()}")
    return LyapunovSpectrum(
        exponents=tuple(ExtendedReal.finite(m) for m in means),
        method=Method.MONTE_CARLO,
        steps=steps,
        replicas=replicas,
        stderr=tuple(float(e) for e in stderr),
        possibly_minus_infinity=flagged,
    )


def energy(spec: LyapunovSpectrum, s: float) -> EnergyValue:
    """
    Lambda(s) = lambda_1 + ... + lambda_k + (s - k) lambda_{k+1} for s < d,
    (s/d)(lambda_1 + ... + lambda_d) for s >= d, with 0 * (-inf) = 0.
    """
    if s < 0:
        raise NegativeExponent(f"Energy needs s >= 0, got {s}")
    exponents = spec.exponents
    dim = len(exponents)
    if s >= dim:
        return EnergyValue(float(s), sum(exponents, ZERO).scale(s / dim))
    k = int(math.floor(s))
    head = sum(exponents[:k], ZERO)
    return EnergyValue(float(s), head + exponents[k].scale(s - k))


def measure_pressure(h: float, spec: LyapunovSpectrum, s: float) -> ExtendedReal:
    """P_mu(s) = h + Lambda(s); -inf absorbs"""
    if not math.isfinite(h) or h < 0:
        raise ValueError(f"Measure pressure needs a finite entropy h >= 0, got {h}")
    return ExtendedReal.finite(h) + energy(spec, s).value


def lyapunov_dimension(h: float, spec: LyapunovSpectrum) -> LyapunovDimension:
    """
    Exact root of the piecewise linear map s -> h + Lambda(s).

    Walks the segments [k, k + 1) with running partial sums of the exponents;
    on the segment where the sign changes the linear equation is solved in
    closed form. An exponent of -inf ends the walk at the discontinuity.
    """
    if not math.isfinite(h) or h < 0:
        raise ValueError(f"Lyapunov dimension needs a finite entropy h >= 0, got {h}")
    if h == 0:
        return LyapunovDimension(0.0, (0.0, 0.0))

    dim = spec.dim
    level = h
    for k, exponent in enumerate(spec.exponents):
        if exponent.is_minus_infinity:
            return LyapunovDimension(float(k), (float(k), float(k)), discontinuity_hit=True)
        slope = exponent.value
        following = level + slope
        if following <= 0:
            return LyapunovDimension(k + level / -slope, (k + level / -slope,) * 2)
        level = following

    total = math.fsum(e.value for e in spec.exponents)
    if total >= 0:
        raise NoRoot(
            "Pressure stays positive: the exponents do not contract",
            diagnostic={"h": h, "exponents": [e.to_json() for e in spec.exponents]},
        )
    # beyond d: h + (s/d) total = 0
    root = dim * h / -total
    return LyapunovDimension(root, (root, root))


def lyapunov_dimension_bisect(
    h: float, spec: LyapunovSpectrum, tolerance: float = BISECTION_TOLERANCE
) -> LyapunovDimension:
    """inf{s : P_mu(s) < 0} by bisection on measure_pressure, as a cross-check"""
    if not math.isfinite(h) or h < 0:
        raise ValueError(f"Lyapunov dimension needs a finite entropy h >= 0, got {h}")
    if h == 0:
        return LyapunovDimension(0.0, (0.0, 0.0), exact=False)

    low, high = 0.0, 1.0
    while measure_pressure(h, spec, high) >= 0:
        low, high = high, 2.0 * high
        if high > MAX_BISECTION_UPPER:
            raise NoRoot(
                f"Pressure stays non-negative up to s = {MAX_BISECTION_UPPER:g}",
                diagnostic={"h": h, "exponents": [e.to_json() for e in spec.exponents]},
            )
    while high - low > tolerance:
        middle = 0.5 * (low + high)
        if measure_pressure(h, spec, middle) >= 0:
            low = middle
        else:
            high = middle
    jump = measure_pressure(h, spec, high).is_minus_infinity and measure_pressure(h, spec, low) > 0
    return LyapunovDimension(
        0.5 * (low + high), (low, high), discontinuity_hit=bool(jump), exact=False
    )
