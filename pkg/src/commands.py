"""
The analyses behind the analyze, simulate and pressure commands.

Each function takes a parsed SystemSpec and returns a RunReport; the click
layer in main.py only handles options, output and exit codes.
"""

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .console import log_info, log_verbose, log_warning
from .errors import DegenerateFit, InsufficientSamples, IntegrabilityFailure, SpecError
from .extended_real import ExtendedReal
from .geometry import (
    TranslationMode,
    feng_bounds,
    generate_cloud,
    local_dimension,
    projection_entropy_estimate,
    sample_translations,
)
from .pressure import alpha1_zero, feasible_level, pressure_curve, pressure_zero, s_infinity
from .report import DRAW_SUMMARY_COLUMNS, RunReport, local_dimension_frame, pressure_curve_frame, provenance
from .rng import STREAM_DRAWS, STREAM_WORDS, derive_seed
from .spec_parser import SystemSpec
from .spectrum import (
    MIN_MONTE_CARLO_STEPS,
    LyapunovSpectrum,
    exponents_exact_diagonal,
    exponents_monte_carlo,
    lyapunov_dimension,
    lyapunov_dimension_bisect,
    measure_pressure,
)
from .symbolic_measure import EntropyResult, MeasureSpec, entropy

# Slopes further than this below the prediction are flagged
SLOPE_TOLERANCE = 0.1
EXCEPTIONAL = "exceptional translation"


@dataclass
class RunOptions:
    """Command-line overrides of the spec"""
    seed: Optional[int] = None
    threads: int = 1


class Stopwatch:
    """Wall times per phase, kept apart from the numeric results"""

    def __init__(self):
        self.times: Dict[str, float] = {}
        self._phase: Optional[str] = None
        self._start = 0.0

    def start(self, phase: str) -> None:
        self.stop()
        self._phase = phase
        self._start = time.perf_counter()

    def stop(self) -> None:
        if self._phase is not None:
            self.times[self._phase] = time.perf_counter() - self._start
            self._phase = None


def resolve_measure(spec: SystemSpec) -> MeasureSpec:
    """The spec's measure, or uniform Bernoulli weights on a finite system"""
    if spec.measure is not None:
        return spec.measure
    if spec.ifs.family is not None:
        raise SpecError("Countable map families need a [measure] block", field="measure")
    log_verbose("No measure given; using uniform Bernoulli weights")
    size = spec.ifs.size
    return MeasureSpec.bernoulli(np.full(size, 1.0 / size), spec.ifs.symbols)


def compute_spectrum(spec: SystemSpec, mu: MeasureSpec, seed: int) -> LyapunovSpectrum:
    """Exact exponents for diagonal Bernoulli systems, Monte Carlo otherwise"""
    if spec.ifs.is_diagonal and mu.is_bernoulli:
        log_verbose("Computing exact diagonal exponents")
        return exponents_exact_diagonal(spec.ifs, mu)
    steps = max(spec.experiment.mc_steps, MIN_MONTE_CARLO_STEPS)
    log_info(f"Estimating exponents by Monte Carlo ({steps} steps, {spec.experiment.mc_replicas} replicas)...")
    return exponents_monte_carlo(spec.ifs, mu, steps, spec.experiment.mc_replicas, seed)


def _effective_seed(spec: SystemSpec, options: RunOptions) -> int:
    return spec.experiment.seed if options.seed is None else int(options.seed)


def _flag(value: ExtendedReal) -> str:
    if value.is_plus_infinity:
        return "+inf"
    if value.is_minus_infinity:
        return "-inf"
    return "finite"


def _dimension_results(h: EntropyResult, spectrum: LyapunovSpectrum, dim: int) -> dict:
    """dim_LY, its bisection cross-check and the clamp at d"""
    if h.infinite:
        log_warning("Entropy is infinite; the Lyapunov dimension is not defined")
        return {"lyapunov_dimension": None, "lyapunov_dimension_bisect": None, "predicted_local_dimension": None}
    solved = lyapunov_dimension(h.value, spectrum)
    checked = lyapunov_dimension_bisect(h.value, spectrum)
    if abs(solved.value - checked.value) > 1e-8:
        log_warning(f"Segment solver {solved.value:.12g} and bisection {checked.value:.12g} disagree")
    return {
        "lyapunov_dimension": solved.to_dict(),
        "lyapunov_dimension_bisect": checked.to_dict(),
        "predicted_local_dimension": min(float(dim), solved.value),
    }


def cmd_analyze(spec: SystemSpec, options: Optional[RunOptions] = None) -> RunReport:
    """Entropy, Lyapunov spectrum, measure pressure grid, dim_LY and the half-norm flag"""
    options = options or RunOptions()
    seed = _effective_seed(spec, options)
    clock = Stopwatch()
    ifs = spec.ifs

    clock.start("entropy")
    mu = resolve_measure(spec)
    h = entropy(mu)
    log_verbose(f"Entropy: {h.value}")

    clock.start("spectrum")
    spectrum = compute_spectrum(spec, mu, seed)

    clock.start("dimension")
    results = {
        "entropy": h.to_dict(),
        "spectrum": spectrum.to_dict(),
        "norm_sup": ifs.norm_sup,
        "half_norm": ifs.half_norm,
        "dimension": ifs.dim,
    }
    if h.infinite:
        results["measure_pressure"] = None
    else:
        results["measure_pressure"] = [
            {"s": s, "value": measure_pressure(h.value, spectrum, s).to_json()}
            for s in spec.experiment.s_grid
        ]
    results.update(_dimension_results(h, spectrum, ifs.dim))
    if ifs.family is not None:
        results["s_infinity"] = s_infinity(ifs).to_dict()
    clock.stop()

    return RunReport(
        command="analyze",
        spec_name=spec.name,
        inputs=spec.echo(),
        results=results,
        provenance=provenance(seed, options.threads),
        wall_times=clock.times,
    )


def _draw_mode(spec: SystemSpec, draw: int) -> TranslationMode:
    if spec.experiment.zero_draw and draw == 0:
        return TranslationMode.ZERO
    return spec.experiment.translations


def _projection_entropy(
    spec: SystemSpec, mu: MeasureSpec, spectrum: LyapunovSpectrum, seed: int
) -> Optional[dict]:
    """Binned projection entropy, the dimension bounds it gives and dim_LY with it"""
    experiment = spec.experiment
    if not experiment.bin_widths:
        return None
    translations = sample_translations(spec.ifs, seed, 0, _draw_mode(spec, 0))
    try:
        estimate = projection_entropy_estimate(
            spec.ifs,
            mu,
            translations,
            experiment.projection_m,
            experiment.bin_widths,
            experiment.points,
            derive_seed(seed, STREAM_WORDS, 0),
            min_coverage=experiment.bin_coverage,
        )
    except InsufficientSamples as e:
        log_warning(f"Projection entropy skipped: {e}")
        return {"error": str(e)}
    hpi = max(estimate.value, 0.0)
    section = {
        "value": estimate.value,
        "width": estimate.width,
        "stderr": estimate.stderr,
        "dropped_mass": estimate.dropped_mass,
        "trace": list(estimate.trace),
        "heuristic": True,
    }
    try:
        section["bounds"] = feng_bounds(spec.ifs, mu, hpi).to_dict()
    except IntegrabilityFailure as e:
        log_warning(str(e))
        section["bounds"] = {"error": str(e)}
    section["dim_ly_projection"] = lyapunov_dimension(hpi, spectrum).to_dict()
    return section


def cmd_simulate(spec: SystemSpec, options: Optional[RunOptions] = None) -> RunReport:
    """
    Local dimension slopes over independent translation draws.

    Every draw gets its own translations and cloud; a draw whose slopes fall
    more than SLOPE_TOLERANCE below min{d, dim_LY}, or whose fit degenerates,
    is recorded as an exceptional translation without stopping the run.
    """
    options = options or RunOptions()
    if not spec.has_experiment:
        raise SpecError("simulate needs an [experiment] block", field="experiment")
    seed = _effective_seed(spec, options)
    experiment = spec.experiment
    clock = Stopwatch()
    ifs = spec.ifs

    clock.start("spectrum")
    mu = resolve_measure(spec)
    h = entropy(mu)
    spectrum = compute_spectrum(spec, mu, seed)
    dimension = _dimension_results(h, spectrum, ifs.dim)
    target = dimension["predicted_local_dimension"]

    clock.start("local_dimension")
    rows: List[dict] = []
    frames: List[pd.DataFrame] = []
    for draw in range(experiment.draws):
        mode = _draw_mode(spec, draw)
        draw_seed = derive_seed(seed, STREAM_DRAWS, draw)
        translations = sample_translations(ifs, seed, draw, mode)
        log_info(f"Draw {draw + 1}/{experiment.draws}: {experiment.points} points, {mode.value} translations")
        cloud = generate_cloud(ifs, mu, translations, experiment.points, experiment.depth, draw_seed)
        row = {"draw": draw, "mode": mode.value, "target": target}
        try:
            estimate = local_dimension(
                cloud,
                sample_centers=experiment.centers,
                seed=draw_seed,
                workers=options.threads,
                radii_count=experiment.radii,
            )
        except DegenerateFit as e:
            log_warning(f"Draw {draw}: {e}")
            # no slope was measured
            row.update(
                median=math.nan, iqr=math.nan, r_min=math.nan, r_max=math.nan,
                status=EXCEPTIONAL, error=str(e),
            )
            rows.append(row)
            continue
        frames.append(local_dimension_frame(draw, estimate))
        row.update(estimate.summary())
        if target is not None and estimate.median < target - SLOPE_TOLERANCE:
            row["status"] = EXCEPTIONAL
        else:
            row["status"] = "ok"
        log_verbose(f"Draw {draw}: median slope {estimate.median:.4f} (IQR {estimate.iqr:.4f})")
        rows.append(row)

    clock.start("projection_entropy")
    projection = _projection_entropy(spec, mu, spectrum, seed)
    clock.stop()

    draws = pd.DataFrame(rows)
    medians = [r["median"] for r in rows if r["status"] == "ok"]
    results = {
        "entropy": h.to_dict(),
        "spectrum": spectrum.to_dict(),
        "half_norm": ifs.half_norm,
        "norm_sup": ifs.norm_sup,
        **dimension,
        "draws": [dict(r) for r in rows],
        "exceptional_draws": [r["draw"] for r in rows if r["status"] == EXCEPTIONAL],
        "median_of_medians": float(np.median(medians)) if medians else None,
        "projection_entropy": projection,
    }
    tables = {"draws": draws.reindex(columns=DRAW_SUMMARY_COLUMNS)}
    if frames:
        tables["local_dimension"] = pd.concat(frames, ignore_index=True)
    return RunReport(
        command="simulate",
        spec_name=spec.name,
        inputs=spec.echo(),
        results=results,
        provenance=provenance(seed, options.threads),
        wall_times=clock.times,
        tables=tables,
    )


def cmd_pressure(spec: SystemSpec, options: Optional[RunOptions] = None) -> RunReport:
    """Pressure curve over the s grid, its zero, the alpha_1 zero and s_infinity"""
    options = options or RunOptions()
    seed = _effective_seed(spec, options)
    clock = Stopwatch()
    ifs = spec.ifs
    requested = spec.experiment.max_level

    clock.start("pressure_curve")
    level = feasible_level(ifs, requested)
    if level < requested:
        log_warning(f"Enumeration cap limits the pressure to level {level} (requested {requested})")
    curve = pressure_curve(ifs, spec.experiment.s_grid, level)
    flags = [_flag(v) for v in curve.values]

    clock.start("roots")
    threshold = s_infinity(ifs)
    root = pressure_zero(ifs, level)
    norm_root = alpha1_zero(ifs, level)
    clock.stop()

    results = {
        "max_level": level,
        "curve": [
            {"s": s, "upper": v.to_json(), "lower": low, "exact": exact, "flag": flag}
            for s, v, low, exact, flag in zip(
                curve.s_grid, curve.values, curve.lower, curve.exact, flags
            )
        ],
        "root": root.to_dict(),
        "alpha1_zero": norm_root.to_dict(),
        "s_infinity": threshold.to_dict(),
    }
    return RunReport(
        command="pressure",
        spec_name=spec.name,
        inputs=spec.echo(),
        results=results,
        provenance=provenance(seed, options.threads),
        wall_times=clock.times,
        tables={"pressure_curve": pressure_curve_frame(curve, flags)},
    )
