"""
Projected attractor samples and the empirical dimension quantities computed
from them: translation draws, the canonical projection of words, point
clouds with their truncation error, exact ball counts with a k-d tree, local
dimension slopes, the dimension bounds from projection entropy and a binned
projection-entropy estimator.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from .console import log_verbose
from .errors import DegenerateFit, InsufficientSamples, IntegrabilityFailure
from .ifs import AffineIFS
from .rng import STREAM_CENTERS, STREAM_TRANSLATIONS, make_rng
from .series import sum_series
from .symbolic_measure import MeasureSpec, Word, sample_positions

DEFAULT_CENTERS = 256
DEFAULT_RADII = 12
MIN_RADII = 5
NEIGHBOUR_RANK = 20
CLOUD_CHUNK = 1 << 15
BIN_SAMPLE_FLOOR = 10
INTEGRABILITY_THRESHOLD = 1e6


class TranslationMode(Enum):
    RANDOM = "random"
    ZERO = "zero"
    FIXED = "fixed"


@dataclass(frozen=True, eq=False)
class TranslationDraw:
    """
    Translation vectors a_i, drawn uniformly from [-1/2, 1/2]^d per symbol.

    Random draws are lazy: the vector of a symbol comes from the stream
    (seed, translations, draw, symbol), so drawing new symbols never changes
    vectors already handed out.
    """
    dim: int
    seed: int = 0
    draw: int = 0
    mode: TranslationMode = TranslationMode.RANDOM
    fixed: Optional[Dict[int, np.ndarray]] = None
    _cache: Dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def vector(self, symbol: int) -> np.ndarray:
        symbol = int(symbol)
        if self.mode is TranslationMode.ZERO:
            return np.zeros(self.dim)
        if self.mode is TranslationMode.FIXED:
            return np.asarray(self.fixed.get(symbol, np.zeros(self.dim)), dtype=float)
        if symbol not in self._cache:
            rng = make_rng(self.seed, STREAM_TRANSLATIONS, self.draw, symbol)
            self._cache[symbol] = rng.uniform(-0.5, 0.5, self.dim)
        return self._cache[symbol]

    def vectors(self, symbols: Sequence[int]) -> np.ndarray:
        """Translation vectors for the given symbols, shape (len(symbols), dim)"""
        if len(symbols) == 0:
            return np.zeros((0, self.dim))
        return np.stack([self.vector(s) for s in symbols])

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "seed": self.seed, "draw": self.draw}


def sample_translations(
    ifs: AffineIFS,
    seed: int,
    draw: int = 0,
    mode: TranslationMode = TranslationMode.RANDOM,
) -> TranslationDraw:
    """A translation draw for the system; FIXED mode uses the system's own vectors"""
    fixed = None
    if mode is TranslationMode.FIXED:
        vectors = ifs.translation_vectors()
        fixed = {int(s): vectors[i] for i, s in enumerate(ifs.symbols)}
    return TranslationDraw(dim=ifs.dim, seed=seed, draw=draw, mode=mode, fixed=fixed)


def project_positions(
    ifs: AffineIFS, a: TranslationDraw, positions: np.ndarray, used: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    f_{w_1} o ... o f_{w_n}(0) for every row of alphabet positions, shape (N, d).

    Folds right to left: x <- A_{w_j} x + a_{w_j} for j = n, ..., 1.
    """
    positions = np.atleast_2d(positions)
    if used is None:
        used = np.unique(positions)
    matrices = np.zeros((ifs.size, ifs.dim, ifs.dim))
    translations = np.zeros((ifs.size, ifs.dim))
    matrices[used] = ifs.matrix_stack(used)
    translations[used] = a.vectors(ifs.symbols[used])
    points = np.zeros((positions.shape[0], ifs.dim))
    for column in range(positions.shape[1] - 1, -1, -1):
        letters = positions[:, column]
        points = np.einsum("nij,nj->ni", matrices[letters], points) + translations[letters]
    return points


def project(ifs: AffineIFS, a: TranslationDraw, w: Word) -> np.ndarray:
    """Image of the origin under f_{w_1} o ... o f_{w_n}"""
    if len(w) == 0:
        raise ValueError("project needs a non-empty word")
    positions = ifs.alphabet.positions(w.symbols)
    return project_positions(ifs, a, positions[None, :])[0]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Projected sample points with the error bound of their finite depth"""
    points: np.ndarray
    depth: int
    truncation_error: float
    translations: TranslationDraw
    words: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def diameter(self) -> float:
        """Bounding-box diagonal, an upper bound on the diameter"""
        return float(np.linalg.norm(np.ptp(self.points, axis=0)))


def truncation_error(ifs: AffineIFS, depth: int) -> float:
    return ifs.enclosing_radius * ifs.norm_sup ** depth


def generate_cloud(
    ifs: AffineIFS,
    mu: MeasureSpec,
    a: TranslationDraw,
    count: int,
    depth: int,
    seed: int,
    keep_words: bool = False,
) -> PointCloud:
    """Project `count` words of length depth sampled from mu"""
    if count < 1 or depth < 1:
        raise ValueError("count and depth must be positive")
    words = ifs.alphabet.positions(mu.alphabet.symbols)[sample_positions(mu, count, depth, seed)]
    used = np.unique(words)
    points = np.empty((count, ifs.dim))
    for start in range(0, count, CLOUD_CHUNK):
        stop = min(start + CLOUD_CHUNK, count)
        points[start:stop] = project_positions(ifs, a, words[start:stop], used)
    error = truncation_error(ifs, depth)
    log_verbose(f"Generated {count} points at depth {depth}, truncation error {error:.3e}")
    return PointCloud(
        points=points,
        depth=depth,
        truncation_error=error,
        translations=a,
        words=ifs.symbols[words] if keep_words else None,
    )


class BallCounter:
    """Exact counts of cloud points within distance r of query centers"""

    def __init__(self, points: np.ndarray, workers: int = 1):
        self.points = np.asarray(points, dtype=float)
        self.workers = workers
        self.tree = cKDTree(self.points)

    def counts(self, centers: np.ndarray, radii: Sequence[float]) -> np.ndarray:
        """Counts (center included) of shape (len(centers), len(radii))"""
        columns = [
            self.tree.query_ball_point(centers, r, return_length=True, workers=self.workers)
            for r in radii
        ]
        return np.stack(columns, axis=1).astype(np.int64)

    def neighbour_distance(self, centers: np.ndarray, rank: int) -> np.ndarray:
        """Distance to the rank-th nearest other point"""
        distances, _ = self.tree.query(centers, k=rank + 1, workers=self.workers)
        return distances[:, rank]


@dataclass(frozen=True, eq=False)
class LocalDimEstimate:
    """Per-center log-log slopes of ball mass against radius, with summaries"""
    centers: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    residuals: np.ndarray
    radii: np.ndarray
    r_min: float
    r_max: float

    @property
    def median(self) -> float:
        return float(np.median(self.slopes))

    @property
    def iqr(self) -> float:
        upper, lower = np.percentile(self.slopes, [75, 25])
        return float(upper - lower)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "center": self.centers,
            "slope": self.slopes,
            "intercept": self.intercepts,
            "residual": self.residuals,
        })

    def summary(self) -> dict:
        return {
            "median": self.median,
            "iqr": self.iqr,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "radii": len(self.radii),
            "centers": len(self.centers),
        }


def default_radii(
    cloud: PointCloud, counter: BallCounter, centers: np.ndarray, count: int = DEFAULT_RADII
) -> np.ndarray:
    """
    Geometric radii between max(10 x truncation error, median distance to the
    20th neighbour) and diameter / 8.
    """
    diameter = cloud.diameter()
    if diameter <= 0:
        raise DegenerateFit("The cloud has collapsed to a single point")
    rank = min(NEIGHBOUR_RANK, cloud.size - 1)
    if rank < 1:
        raise DegenerateFit("A local dimension fit needs at least two points")
    neighbour = float(np.median(counter.neighbour_distance(cloud.points[centers], rank)))
    r_min = max(10.0 * cloud.truncation_error, neighbour)
    r_max = diameter / 8.0
    if not 0 < r_min < r_max:
        raise DegenerateFit(f"Empty fit range: r_min = {r_min:.3e}, r_max = {r_max:.3e}")
    return np.geomspace(r_min, r_max, count)


def local_dimension(
    cloud: PointCloud,
    radii: Optional[Sequence[float]] = None,
    sample_centers: int = DEFAULT_CENTERS,
    seed: int = 0,
    workers: int = 1,
    counter: Optional[BallCounter] = None,
    radii_count: int = DEFAULT_RADII,
) -> LocalDimEstimate:
    """
    Least-squares slope of log mu(B(x, r)) against log r at sampled centers.

    Centers are drawn from the cloud without replacement. The empirical mass
    of a ball is its point count over the cloud size, center included.
    """
    counter = counter or BallCounter(cloud.points, workers)
    rng = make_rng(seed, STREAM_CENTERS)
    centers = np.sort(rng.choice(cloud.size, size=min(sample_centers, cloud.size), replace=False))

    if radii is None:
        radii = default_radii(cloud, counter, centers, radii_count)
    radii = np.asarray(radii, dtype=float)
    if radii.size < MIN_RADII:
        raise ValueError(f"A local dimension fit needs at least {MIN_RADII} radii, got {radii.size}")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("Radii must be strictly increasing")
    if radii[0] <= 2.0 * cloud.truncation_error:
        raise ValueError(
            f"Smallest radius {radii[0]:.3e} is within twice the truncation error "
            f"{cloud.truncation_error:.3e}"
        )

    counts = counter.counts(cloud.points[centers], radii)
    if np.any(counts == 0):
        raise DegenerateFit("A ball around a center is empty")
    saturated = np.all(counts == cloud.size, axis=1)
    if np.any(saturated):
        raise DegenerateFit(f"{int(saturated.sum())} centers see the whole cloud at every radius")

    log_r = np.log(radii)
    log_mass = np.log(counts / cloud.size).T
    coefficients, residual_sums, _, _, _ = np.polyfit(log_r, log_mass, 1, full=True)
    slopes, intercepts = coefficients
    if residual_sums.size == 0:
        residual_sums = np.zeros(len(centers))
    residuals = np.sqrt(residual_sums / radii.size)
    return LocalDimEstimate(
        centers=centers,
        slopes=slopes,
        intercepts=intercepts,
        residuals=residuals,
        radii=radii,
        r_min=float(radii[0]),
        r_max=float(radii[-1]),
    )


@dataclass(frozen=True)
class DimensionBounds:
    """
    h / (-sum mu_i log alpha_d(i)) <= local dimension <= h / (-sum mu_i log alpha_1(i)).

    similarity_dimension is set when every map is a similarity and both
    bounds coincide.
    """
    lower: float
    upper: float
    similarity_dimension: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "similarity_dimension": self.similarity_dimension,
        }


def _mean_log_singular(ifs: AffineIFS, mu: MeasureSpec, index: int) -> float:
    """-sum mu_i log alpha_index(i); IntegrabilityFailure when the series diverges"""
    positions = ifs.alphabet.positions(mu.alphabet.symbols)
    terms = -ifs.log_spectra[positions, index]
    value = math.fsum(mu.marginal * terms)
    if mu.family is not None and ifs.family is not None:
        weights = np.exp(mu.family.log_weights(mu.ranks))
        model = mu.family.weight_model().times(ifs.family.singular_growth(index))
        series = sum_series(weights * terms, mu.alphabet.symbols, model, INTEGRABILITY_THRESHOLD)
        if series.divergent:
            raise IntegrabilityFailure(
                f"sum mu_i log alpha_{index + 1}(i) diverges for {ifs.family.describe()}"
            )
    return value


def feng_bounds(ifs: AffineIFS, mu: MeasureSpec, hpi: float) -> DimensionBounds:
    """Lower and upper local-dimension bounds from a projection entropy hpi"""
    if hpi < 0 or not math.isfinite(hpi):
        raise ValueError(f"Projection entropy must be finite and non-negative, got {hpi}")
    smallest = _mean_log_singular(ifs, mu, ifs.dim - 1)
    largest = _mean_log_singular(ifs, mu, 0)
    lower = hpi / smallest
    upper = hpi / largest
    similarity = hpi / largest if ifs.similarity else None
    return DimensionBounds(lower=lower, upper=upper, similarity_dimension=similarity)


def similarity_dimension(ifs: AffineIFS, mu: MeasureSpec, hpi: float) -> float:
    """hpi / (-lambda_1) for systems of similarities"""
    bounds = feng_bounds(ifs, mu, hpi)
    if bounds.similarity_dimension is None:
        raise ValueError("similarity_dimension needs every map to be a similarity")
    return bounds.similarity_dimension


@dataclass(frozen=True)
class ProjectionEntropyEstimate:
    """
    Binned estimate of the projection entropy.

    trace rows hold, per bin width, both conditional entropies, their
    difference, its standard error, the fraction of samples in the bins used
    and the number of occupied bins below the sample floor. dropped_mass is
    the fraction of samples left out at the chosen width; it is 0 unless a
    minimum coverage was requested.
    """
    value: float
    width: float
    stderr: float
    trace: Tuple[dict, ...]
    dropped_mass: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.trace))


@dataclass(frozen=True)
class _BinnedEntropy:
    value: float
    variance: float
    coverage: float
    sparse_bins: int


def _conditional_entropy(labels: np.ndarray, bins: np.ndarray, drop_sparse: bool) -> _BinnedEntropy:
    """
    Plug-in H(label | bin) with the variance of its sample mean.

    With drop_sparse only bins holding at least BIN_SAMPLE_FLOOR samples
    enter the estimate; coverage is the fraction of samples they hold.
    """
    frame = pd.DataFrame({"bin": bins, "label": labels})
    bin_sizes = frame.groupby("bin").size()
    sparse = int((bin_sizes < BIN_SAMPLE_FLOOR).sum())
    kept = bin_sizes[bin_sizes >= BIN_SAMPLE_FLOOR] if drop_sparse else bin_sizes
    if kept.empty:
        return _BinnedEntropy(math.nan, math.nan, 0.0, sparse)
    n = float(kept.sum())
    frame = frame[frame["bin"].isin(kept.index)]
    joint = frame.groupby(["bin", "label"]).size()
    totals = kept.reindex(joint.index.get_level_values("bin")).to_numpy()
    joint = joint.to_numpy()
    information = -np.log(joint / totals)
    mean = float(np.sum(joint * information)) / n
    second = float(np.sum(joint * information ** 2)) / n
    return _BinnedEntropy(mean, max(second - mean * mean, 0.0) / n, n / len(labels), sparse)


def _bin_ids(points: np.ndarray, width: float) -> np.ndarray:
    """Ids of the half-open, origin-aligned cubes of side width containing each point"""
    cells = np.floor(points / width).astype(np.int64)
    _, ids = np.unique(cells, axis=0, return_inverse=True)
    return ids.reshape(-1)


def projection_entropy_estimate(
    ifs: AffineIFS,
    mu: MeasureSpec,
    a: TranslationDraw,
    m: int,
    bin_widths: Sequence[float],
    count: int,
    seed: int,
    depth: Optional[int] = None,
    min_coverage: Optional[float] = None,
) -> ProjectionEntropyEstimate:
    """
    Estimate H(first m symbols | pi(shifted sequence)) - H(first m symbols | pi(sequence)).

    Both conditionings are approximated by bins of the projected points and
    the value is read at the finest width; the whole trace is returned. Any
    occupied bin with fewer than BIN_SAMPLE_FLOOR samples at that width
    raises InsufficientSamples.

    With min_coverage, sparse bins are dropped instead and the value is read
    at the finest width whose remaining bins hold at least that fraction of
    the samples for both conditionings; the dropped fraction is reported.
    This is a heuristic estimator.
    """
    widths = np.asarray(bin_widths, dtype=float)
    if widths.size == 0 or np.any(widths <= 0) or np.any(np.diff(widths) >= 0):
        raise ValueError("Bin widths must be positive and strictly decreasing")
    if m < 1:
        raise ValueError("m must be at least 1")
    if min_coverage is not None and not 0 < min_coverage <= 1:
        raise ValueError(f"min_coverage must lie in (0, 1], got {min_coverage}")
    if depth is None:
        depth = m + 1
        while truncation_error(ifs, depth - 1) > widths[-1] / 10.0 and depth < 200:
            depth += 1

    words = ifs.alphabet.positions(mu.alphabet.symbols)[sample_positions(mu, count, depth, seed)]
    used = np.unique(words)
    points = project_positions(ifs, a, words, used)
    shifted = project_positions(ifs, a, words[:, 1:], used)
    _, labels = np.unique(words[:, :m], axis=0, return_inverse=True)
    labels = labels.reshape(-1)

    drop_sparse = min_coverage is not None
    trace: List[dict] = []
    for width in widths:
        given_shifted = _conditional_entropy(labels, _bin_ids(shifted, width), drop_sparse)
        given_point = _conditional_entropy(labels, _bin_ids(points, width), drop_sparse)
        trace.append({
            "width": float(width),
            "h_given_shifted": given_shifted.value,
            "h_given_point": given_point.value,
            "estimate": given_shifted.value - given_point.value,
            "stderr": math.sqrt(given_shifted.variance + given_point.variance),
            "coverage": min(given_shifted.coverage, given_point.coverage),
            "sparse_bins": given_shifted.sparse_bins + given_point.sparse_bins,
        })

    if drop_sparse:
        qualifying = [row for row in trace if row["coverage"] >= min_coverage]
        if not qualifying:
            raise InsufficientSamples(
                f"No bin width keeps {min_coverage:.0%} of {count} samples in bins of "
                f"at least {BIN_SAMPLE_FLOOR}"
            )
        chosen = qualifying[-1]
    else:
        chosen = trace[-1]
        if chosen["sparse_bins"]:
            raise InsufficientSamples(
                f"{chosen['sparse_bins']} occupied bins hold fewer than {BIN_SAMPLE_FLOOR} of "
                f"{count} samples at bin width {chosen['width']:.3e}"
            )
    dropped = 1.0 - chosen["coverage"]
    log_verbose(
        f"Projection entropy {chosen['estimate']:.6g} +- {chosen['stderr']:.2g} at bin width "
        f"{chosen['width']:.3e} (dropped mass {dropped:.3g})"
    )
    return ProjectionEntropyEstimate(
        value=float(chosen["estimate"]),
        width=float(chosen["width"]),
        stderr=float(chosen["stderr"]),
        trace=tuple(trace),
        dropped_mass=dropped,
    )
