"""
Built-in regression table of worked systems with known answers.

Each check builds its system in code, runs the library end to end and
compares against the stored expectation. `run_regressions` returns a
RegressionBatch in the same shape as any other batch of per-item results.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import console
from .console import log_verbose
from .families import GeometricWeights, InverseSquareWeights, LogSquaredWeights, TruncationPolicy
from .ifs import AffineIFS, InverseSquareDiagonal, LogSquaredDiagonal
from .pressure import pressure_estimate, pressure_zero, s_infinity
from .spectrum import exponents_exact_diagonal, lyapunov_dimension, measure_pressure
from .symbolic_measure import Alphabet, MeasureSpec, entropy

ENTROPY_TOLERANCE = 1e-6
PRESSURE_TOLERANCE = 1e-6
ROOT_TOLERANCE = 1e-8
S_INFINITY_MAX_WIDTH = 1e-3
EXPONENT_TOLERANCE = 1e-6
INVERSE_SQUARE_EPSILON = 1e-7
REFERENCE_TERMS = 1_000_000
LOG_SQUARED_N0 = 100


@dataclass
class RegressionResult:
    """Outcome of a single regression check"""
    name: str
    passed: bool
    expected: str
    observed: str
    notes: Dict[str, object] = field(default_factory=dict)
    error_message: Optional[str] = None
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "expected": self.expected,
            "observed": self.observed,
            "notes": self.notes,
            "error": self.error_message,
        }


@dataclass
class RegressionBatch:
    """Summary of a regression run"""
    total: int
    passed: int
    failed: int
    results: List[RegressionResult]

    def print_summary(self) -> None:
        """Print a formatted pass/fail table"""
        if console.QUIET:
            return
        print("\n" + "=" * 60)
        print("REGRESSION SUMMARY")
        print("=" * 60)
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.name:<28} {r.observed}")
        print("-" * 60)
        print(f"Checks run: {self.total}")
        print(f"Passed:     {self.passed}")
        print(f"Failed:     {self.failed}")
        print("=" * 60)

        if self.failed > 0:
            print("\nFAILED CHECKS:")
            for r in self.results:
                if not r.passed:
                    print(f"  - {r.name}: expected {r.expected}")
                    if r.error_message:
                        print(f"    Error: {r.error_message}")


def check_geometric_entropy() -> RegressionResult:
    """p_i = 2^-i has entropy 2 log 2"""
    mu = MeasureSpec.from_family(GeometricWeights(0.5), TruncationPolicy(epsilon=1e-10))
    h = entropy(mu)
    expected = 2.0 * math.log(2.0)
    return RegressionResult(
        name="geometric_entropy",
        passed=not h.infinite and abs(h.value - expected) <= ENTROPY_TOLERANCE,
        expected=f"h = 2 log 2 = {expected:.12f}",
        observed=f"h = {h.value:.12f}",
        notes={"symbols": mu.alphabet.size, "deficit": mu.alphabet.deficit},
    )


def check_log_squared_entropy() -> RegressionResult:
    """p_i = c / ((i + 1) log^2 (i + 1)) has infinite entropy"""
    mu = MeasureSpec.from_family(LogSquaredWeights(), TruncationPolicy(epsilon=1e-10))
    h = entropy(mu)
    certified = h.certificate is not None and h.certificate.floor > 0
    return RegressionResult(
        name="log_squared_entropy",
        passed=h.infinite and certified,
        expected="infinite entropy with a positive tail floor",
        observed="infinite" if h.infinite else f"h = {h.value:.6g}",
        notes={"certificate": None if h.certificate is None else h.certificate.to_dict()},
    )


def inverse_square_system(
    epsilon: float = INVERSE_SQUARE_EPSILON, max_symbols: int = REFERENCE_TERMS
) -> Tuple[AffineIFS, MeasureSpec]:
    policy = TruncationPolicy(epsilon=epsilon, max_symbols=max_symbols)
    mu = MeasureSpec.from_family(InverseSquareWeights(), policy)
    alphabet = Alphabet(mu.alphabet.symbols, countable=True)
    return AffineIFS.from_family(InverseSquareDiagonal(), alphabet), mu


def inverse_square_reference(terms: int = REFERENCE_TERMS) -> float:
    """sum_{i <= terms} p_i log(2 p_i) with p_i = c (i + 1)^-2, summed directly"""
    c = 1.0 / (math.pi ** 2 / 6.0 - 1.0)
    p = c / np.arange(2, terms + 2, dtype=float) ** 2
    return math.fsum(p * np.log(2.0 * p))


def check_inverse_square_diagonal() -> RegressionResult:
    """
    diag(2 p_i, c 4^-i) under p: lambda_2 = -inf, lambda_1 = log 2 - h,
    P_mu(1) >= log 2 and P_mu(1.1) = -inf, so dim_LY = 1 at the jump.
    """
    ifs, mu = inverse_square_system()
    h = entropy(mu)
    spectrum = exponents_exact_diagonal(ifs, mu)
    first, second = spectrum.exponents
    deficit = mu.alphabet.deficit
    reference = inverse_square_reference(mu.alphabet.size)
    at_one = measure_pressure(h.value, spectrum, 1.0)
    past_one = measure_pressure(h.value, spectrum, 1.1)
    dimension = lyapunov_dimension(h.value, spectrum)
    log2 = math.log(2.0)

    checks = {
        "lambda_2 = -inf": second.is_minus_infinity,
        "lambda_1 matches the direct partial sum": first.is_finite
        and abs(first.value - reference) <= EXPONENT_TOLERANCE,
        # h is the entropy of the renormalised truncation
        "lambda_1 = log 2 - h": first.is_finite
        and abs(first.value - (log2 - h.value)) <= deficit * (abs(log2 - h.value) + 2.0),
        "P_mu(1) >= log 2 - tol": float(at_one) >= log2 - PRESSURE_TOLERANCE,
        "P_mu(1.1) = -inf": past_one.is_minus_infinity,
        "dim_LY = 1 at the jump": dimension.value == 1.0 and dimension.discontinuity_hit,
    }
    failed = [name for name, ok in checks.items() if not ok]
    return RegressionResult(
        name="inverse_square_diagonal",
        passed=not failed,
        expected="; ".join(checks),
        observed=f"lambda = ({first}, {second}), P(1) = {at_one}, dim_LY = {dimension.value:g}",
        notes={
            "reference": reference,
            "symbols": mu.alphabet.size,
            "deficit": deficit,
            "lambda_1_tail_bound": spectrum.tail_bounds[0],
            "norm_sup": ifs.norm_sup,
            "half_norm": ifs.half_norm,
        },
        error_message=f"failed: {', '.join(failed)}" if failed else None,
    )


def check_log_squared_diagonal(n0: int = LOG_SQUARED_N0) -> RegressionResult:
    """diag(j^-1/2, j^-1), j = floor(i log^2 i): P(3/2) < 0, P(t) = +inf below 3/2"""
    family = LogSquaredDiagonal(n0=n0)
    alphabet = Alphabet.range(TruncationPolicy().max_symbols, family.first_symbol)
    ifs = AffineIFS.from_family(family, Alphabet(alphabet.symbols, countable=True))
    at_threshold = pressure_estimate(ifs, 1.5, 1)
    below = {t: pressure_estimate(ifs, t, 1).upper for t in (1.2, 1.3, 1.4)}
    threshold = s_infinity(ifs)
    width = threshold.above - threshold.below

    checks = {
        "P(3/2) < 0": at_threshold.upper.is_finite and float(at_threshold.upper) < 0,
        "P(t) = +inf for t in 1.2, 1.3, 1.4": all(v.is_plus_infinity for v in below.values()),
        "s_inf bracket holds 3/2": threshold.below <= 1.5 <= threshold.above,
        "s_inf bracket width <= 1e-3": width <= S_INFINITY_MAX_WIDTH,
    }
    failed = [name for name, ok in checks.items() if not ok]
    return RegressionResult(
        name="log_squared_diagonal",
        passed=not failed,
        expected="; ".join(checks),
        observed=(
            f"P(1.5) <= {at_threshold.upper}, "
            f"s_inf in [{threshold.below:.7f}, {threshold.above:.7f}]"
        ),
        notes={"n0": n0, "symbols": ifs.size},
        error_message=f"failed: {', '.join(failed)}" if failed else None,
    )


def check_two_similarity() -> RegressionResult:
    """Two similarities of ratio 1/3: dim_LY and the pressure zero are log 2 / log 3"""
    ifs = AffineIFS.from_matrices([[[1 / 3]], [[1 / 3]]], [[-1 / 3], [1 / 3]])
    mu = MeasureSpec.bernoulli([0.5, 0.5])
    h = entropy(mu)
    dimension = lyapunov_dimension(h.value, exponents_exact_diagonal(ifs, mu))
    root = pressure_zero(ifs, 1)
    expected = math.log(2.0) / math.log(3.0)
    return RegressionResult(
        name="two_similarity",
        passed=abs(dimension.value - expected) <= ROOT_TOLERANCE
        and abs(root.root - expected) <= ROOT_TOLERANCE,
        expected=f"log 2 / log 3 = {expected:.10f}",
        observed=f"dim_LY = {dimension.value:.10f}, pressure zero = {root.root:.10f}",
    )


REGRESSIONS: List[Callable[[], RegressionResult]] = [
    check_geometric_entropy,
    check_log_squared_entropy,
    check_inverse_square_diagonal,
    check_log_squared_diagonal,
    check_two_similarity,
]


def run_regressions(checks: Optional[List[Callable[[], RegressionResult]]] = None) -> RegressionBatch:
    """Run every check; an exception marks that check failed and the run continues"""
    results = []
    for check in checks or REGRESSIONS:
        name = check.__name__.replace("check_", "")
        log_verbose(f"Running {name}")
        start = time.perf_counter()
        try:
            result = check()
        except Exception as e:
            result = RegressionResult(
                name=name, passed=False, expected="no error", observed="error", error_message=str(e)
            )
        result.elapsed = time.perf_counter() - start
        results.append(result)
    passed = sum(1 for r in results if r.passed)
    return RegressionBatch(total=len(results), passed=passed, failed=len(results) - passed, results=results)
