"""
Small dense matrix arithmetic and singular value bookkeeping.

Products of many contractions underflow any raw floating point product, so
word products are accumulated as P = U diag(exp(ell)) T: U orthogonal, ell the
log row scales, T a well conditioned matrix with unit-norm rows. Each new
letter is absorbed by an orthogonal-triangular refactorisation with the
columns taken in decreasing scale order, and the log magnitudes of the
triangular diagonal are added to ell. The singular values of the product are
read off at the end by a one-sided Jacobi sweep carried out in log scale,
which keeps small singular values accurate relative to themselves.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NegativeExponent, SingularMatrix

INVERTIBILITY_TOLERANCE = 1e-300
JACOBI_TOLERANCE = 1e-15
MAX_JACOBI_SWEEPS = 30


@dataclass(frozen=True, eq=False)
class Matrix:
    """An invertible d x d real matrix"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise DimensionMismatch(f"Matrix must be square and non-empty, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("Matrix entries must be finite")
        row_peaks = np.abs(entries).max(axis=1)
        if np.any(row_peaks == 0):
            raise SingularMatrix("Matrix has a zero row")
        determinant = np.linalg.det(entries / row_peaks[:, None])
        if abs(determinant) < INVERTIBILITY_TOLERANCE:
            raise SingularMatrix(f"Matrix is singular (scaled determinant {determinant:.3e})")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "Matrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def scalar(cls, value: float, dim: int) -> "Matrix":
        return cls(value * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.entries - np.diag(np.diagonal(self.entries)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())

    def __repr__(self) -> str:
        return f"Matrix({self.entries.tolist()})"


@dataclass(frozen=True)
class LogSingularSpectrum:
    """Natural logs of the singular values, largest first"""
    log_alphas: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.log_alphas)
        if not values:
            raise DimensionMismatch("A singular spectrum needs at least one value")
        if any(values[i] < values[i + 1] for i in range(len(values) - 1)):
            raise ValueError(f"Singular spectrum must be sorted decreasing: {values}")
        object.__setattr__(self, "log_alphas", values)

    @property
    def dim(self) -> int:
        return len(self.log_alphas)

    @property
    def log_norm(self) -> float:
        return self.log_alphas[0]

    @property
    def log_det(self) -> float:
        return math.fsum(self.log_alphas)


@dataclass(frozen=True)
class SvfValue:
    s: float
    log_phi: float


def singular_spectrum(m: Matrix) -> LogSingularSpectrum:
    """Log singular values of a single matrix"""
    values = scipy.linalg.svd(m.entries, compute_uv=False)
    return LogSingularSpectrum(tuple(np.sort(np.log(values))[::-1]))


class SpectrumAccumulator:
    """
    Accumulates left products A_k ... A_1 for a batch of words at once.

    All words in the batch advance together; push_left accepts either one
    matrix for the whole batch or one matrix per word.
    """

    def __init__(self, dim: int, batch: int = 1):
        if dim < 1 or batch < 1:
            raise ValueError("dim and batch must be positive")
        self.dim = dim
        self.batch = batch
        self.steps = 0
        self._frame = np.tile(np.eye(dim), (batch, 1, 1))
        self._rows = np.tile(np.eye(dim), (batch, 1, 1))
        self._log_scales = np.zeros((batch, dim))
        self._upper = np.triu(np.ones((dim, dim), dtype=bool))

    def copy(self) -> "SpectrumAccumulator":
        clone = SpectrumAccumulator.__new__(SpectrumAccumulator)
        clone.dim = self.dim
        clone.batch = self.batch
        clone.steps = self.steps
        clone._frame = self._frame.copy()
        clone._rows = self._rows.copy()
        clone._log_scales = self._log_scales.copy()
        clone._upper = self._upper
        return clone

    def repeat(self, times: int) -> "SpectrumAccumulator":
        """Each word of the batch repeated `times` times, in blocks"""
        clone = self.copy()
        clone.batch = self.batch * times
        clone._frame = np.tile(self._frame, (times, 1, 1))
        clone._rows = np.tile(self._rows, (times, 1, 1))
        clone._log_scales = np.tile(self._log_scales, (times, 1))
        return clone

    def push_left(self, matrices: np.ndarray) -> None:
        matrices = np.asarray(matrices, dtype=float)
        if matrices.shape[-2:] != (self.dim, self.dim):
            raise DimensionMismatch(
                f"Expected {self.dim}x{self.dim} matrices, got shape {matrices.shape}"
            )
        order = np.argsort(-self._log_scales, axis=1, kind="stable")
        scales = np.take_along_axis(self._log_scales, order, axis=1)
        image = np.matmul(matrices, self._frame)
        image = np.take_along_axis(image, order[:, None, :], axis=2)
        rows = np.take_along_axis(self._rows, order[:, :, None], axis=1)

        frame, triangle = np.linalg.qr(image)
        pivots = np.diagonal(triangle, axis1=1, axis2=2)
        gaps = scales[:, None, :] - scales[:, :, None]
        grading = np.exp(np.where(self._upper, gaps, 0.0))
        # dividing by |pivot| leaves the pivot signs inside the triangle, so D T stays exact
        unit_triangle = np.where(self._upper, triangle / np.abs(pivots)[:, :, None] * grading, 0.0)

        rows = np.matmul(unit_triangle, rows)
        norms = np.linalg.norm(rows, axis=2)
        self._rows = rows / norms[:, :, None]
        self._log_scales = scales + np.log(np.abs(pivots)) + np.log(norms)
        self._frame = frame
        self.steps += 1

    def log_singular_values(self) -> np.ndarray:
        """Log singular values of every accumulated product, shape (batch, dim), largest first"""
        columns = np.swapaxes(self._rows, 1, 2).copy()
        values = _graded_jacobi(columns, self._log_scales.copy())
        return -np.sort(-values, axis=1)

    def spectra(self) -> Tuple[LogSingularSpectrum, ...]:
        return tuple(LogSingularSpectrum(tuple(row)) for row in self.log_singular_values())


def _graded_jacobi(columns: np.ndarray, log_scales: np.ndarray) -> np.ndarray:
    """
    One-sided Jacobi on matrices whose column j is exp(log_scales[j]) * columns[:, j].

    Rotations are computed in the scale of the larger column so that no
    quantity overflows or underflows. Returns the log column norms after
    orthogonalisation, which are the log singular values.
    """
    batch, dim, _ = columns.shape
    norms = np.linalg.norm(columns, axis=1)
    columns /= norms[:, None, :]
    log_scales += np.log(norms)
    if dim == 1:
        return log_scales

    pairs = [(p, q) for p in range(dim - 1) for q in range(p + 1, dim)]
    for _ in range(MAX_JACOBI_SWEEPS):
        rotated = False
        for p, q in pairs:
            flip = log_scales[:, q] > log_scales[:, p]
            if np.any(flip):
                columns[flip, :, p], columns[flip, :, q] = (
                    columns[flip, :, q].copy(), columns[flip, :, p].copy()
                )
                log_scales[flip, p], log_scales[flip, q] = (
                    log_scales[flip, q].copy(), log_scales[flip, p].copy()
                )
            big = columns[:, :, p]
            small = columns[:, :, q]
            a = np.einsum("bi,bi->b", big, big)
            b = np.einsum("bi,bi->b", small, small)
            g = np.einsum("bi,bi->b", big, small)
            active = np.abs(g) > JACOBI_TOLERANCE * np.sqrt(a * b)
            if not np.any(active):
                continue
            rotated = True
            rho = np.exp(log_scales[:, q] - log_scales[:, p])
            safe_g = np.where(active, g, 1.0)
            eta = (rho * rho * b - a) / (2.0 * safe_g)
            sign = np.where(eta >= 0.0, 1.0, -1.0)
            t_over_rho = sign / (np.abs(eta) + np.hypot(rho, eta))
            tangent = t_over_rho * rho
            cosine = 1.0 / np.sqrt(1.0 + tangent * tangent)
            new_big = cosine[:, None] * big - (cosine * tangent * rho)[:, None] * small
            new_small = (cosine * t_over_rho)[:, None] * big + cosine[:, None] * small
            columns[:, :, p] = np.where(active[:, None], new_big, big)
            columns[:, :, q] = np.where(active[:, None], new_small, small)
            for index in (p, q):
                lengths = np.linalg.norm(columns[:, :, index], axis=1)
                columns[:, :, index] /= lengths[:, None]
                log_scales[:, index] += np.log(lengths)
        if not rotated:
            break
    return log_scales


def product_spectrum(word: Sequence[Matrix]) -> LogSingularSpectrum:
    """Log singular values of the ordered product word[0] @ word[1] @ ... @ word[-1]"""
    if not word:
        raise ValueError("product_spectrum needs a non-empty word")
    dim = word[0].dim
    for m in word:
        if m.dim != dim:
            raise DimensionMismatch(f"Word mixes dimensions {dim} and {m.dim}")
    accumulator = SpectrumAccumulator(dim)
    for m in reversed(word):
        accumulator.push_left(m.entries)
    return accumulator.spectra()[0]


def svf(spec: LogSingularSpectrum, s: float) -> SvfValue:
    """The singular value function, in log form"""
    if s < 0:
        raise NegativeExponent(f"Singular value function needs s >= 0, got {s}")
    return SvfValue(float(s), float(svf_array(np.asarray([spec.log_alphas]), s)[0]))


def svf_array(log_alphas: np.ndarray, s: float) -> np.ndarray:
    """Vectorised log singular value function over rows of log singular values"""
    if s < 0:
        raise NegativeExponent(f"Singular value function needs s >= 0, got {s}")
    log_alphas = np.asarray(log_alphas, dtype=float)
    dim = log_alphas.shape[-1]
    if s >= dim:
        return (s / dim) * log_alphas.sum(axis=-1)
    k = int(math.floor(s))
    head = log_alphas[..., :k].sum(axis=-1)
    fraction = s - k
    if fraction == 0.0:
        return head
    return head + fraction * log_alphas[..., k]
