"""Exception types raised by the affinedim library and CLI."""

from typing import Optional


class AffineDimError(Exception):
    """Base class for every error raised by affinedim"""

    exit_code = 1


class SingularMatrix(AffineDimError, ValueError):
    """A matrix failed the invertibility check"""


class DimensionMismatch(AffineDimError, ValueError):
    """Matrices or vectors of different dimensions were combined"""


class NegativeExponent(AffineDimError, ValueError):
    """A singular value function or energy was asked for s < 0"""


class UnknownSymbol(AffineDimError, KeyError):
    """A word uses a symbol outside the alphabet"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown symbol"


class NotDiagonal(AffineDimError, ValueError):
    """An exact diagonal computation received a non-diagonal matrix"""


class NotBernoulli(AffineDimError, ValueError):
    """An operation that needs a Bernoulli measure received another kind"""


class NumericalError(AffineDimError):
    """A computation could not produce a certified result"""

    exit_code = 3


class NoRoot(NumericalError):
    """The Lyapunov dimension has no sign change to solve for"""

    def __init__(self, message: str, diagnostic: Optional[dict] = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class TooLarge(NumericalError):
    """A level sum would enumerate more words than the enumeration cap"""

    def __init__(self, words: int, cap: int):
        super().__init__(
            f"Level sum needs {words} words, above the cap of {cap}; "
            f"use pressure_estimate on a smaller level or a diagonal system"
        )
        self.words = words
        self.cap = cap


class NoCertificate(NumericalError):
    """A series test was inconclusive at the requested width"""


class NoSignChange(NumericalError):
    """The pressure never changed sign on the searched interval"""


class DegenerateFit(NumericalError):
    """Ball counts cannot support a log-log regression"""


class IntegrabilityFailure(NumericalError):
    """The mean of log alpha_d diverges, so the dimension bounds are undefined"""


class InsufficientSamples(NumericalError):
    """No bin width has enough samples per occupied bin"""


class SpecError(AffineDimError, ValueError):
    """A system spec file could not be parsed or validated"""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line
