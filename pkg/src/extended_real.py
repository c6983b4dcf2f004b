"""
Extended real numbers with explicit infinite variants.

Exponents, energies and pressures can be genuinely infinite. They are carried
as ExtendedReal values so that the 0 * (-inf) = 0 convention is applied by
construction instead of by float arithmetic.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union


class Kind(Enum):
    FINITE = "finite"
    MINUS_INFINITY = "-inf"
    PLUS_INFINITY = "+inf"


@dataclass(frozen=True)
class ExtendedReal:
    """A real number or one of the two infinities"""
    kind: Kind
    value: float = 0.0

    def __post_init__(self):
        if self.kind is Kind.FINITE and not math.isfinite(self.value):
            raise ValueError(f"Finite ExtendedReal needs a finite value, got {self.value}")
        if self.kind is not Kind.FINITE and self.value != 0.0:
            object.__setattr__(self, "value", 0.0)

    @classmethod
    def finite(cls, value: float) -> "ExtendedReal":
        return cls(Kind.FINITE, float(value))

    @classmethod
    def from_float(cls, value: float) -> "ExtendedReal":
        """Convert a float, mapping float infinities to the explicit variants"""
        if value == math.inf:
            return PLUS_INFINITY
        if value == -math.inf:
            return MINUS_INFINITY
        if math.isnan(value):
            raise ValueError("NaN has no ExtendedReal representation")
        return cls.finite(value)

    @property
    def is_finite(self) -> bool:
        return self.kind is Kind.FINITE

    @property
    def is_minus_infinity(self) -> bool:
        return self.kind is Kind.MINUS_INFINITY

    @property
    def is_plus_infinity(self) -> bool:
        return self.kind is Kind.PLUS_INFINITY

    def __float__(self) -> float:
        if self.kind is Kind.MINUS_INFINITY:
            return -math.inf
        if self.kind is Kind.PLUS_INFINITY:
            return math.inf
        return self.value

    def __add__(self, other: Union["ExtendedReal", float, int]) -> "ExtendedReal":
        other = _coerce(other)
        if self.is_finite and other.is_finite:
            return ExtendedReal.finite(self.value + other.value)
        kinds = {self.kind, other.kind}
        if Kind.MINUS_INFINITY in kinds and Kind.PLUS_INFINITY in kinds:
            raise ValueError("(+inf) + (-inf) is undefined")
        return MINUS_INFINITY if Kind.MINUS_INFINITY in kinds else PLUS_INFINITY

    __radd__ = __add__

    def __neg__(self) -> "ExtendedReal":
        if self.is_finite:
            return ExtendedReal.finite(-self.value)
        return PLUS_INFINITY if self.is_minus_infinity else MINUS_INFINITY

    def scale(self, factor: float) -> "ExtendedReal":
        """Multiply by a non-negative real with 0 * (+-inf) = 0"""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        if self.is_finite:
            return ExtendedReal.finite(self.value * factor)
        if factor == 0:
            return ZERO
        return self

    def __lt__(self, other) -> bool:
        return float(self) < float(_coerce(other))

    def __le__(self, other) -> bool:
        return float(self) <= float(_coerce(other))

    def __gt__(self, other) -> bool:
        return float(self) > float(_coerce(other))

    def __ge__(self, other) -> bool:
        return float(self) >= float(_coerce(other))

    def to_json(self) -> Union[float, str]:
        """JSON-safe form: a float, or the strings '-inf' / '+inf'"""
        if self.is_finite:
            return self.value
        return self.kind.value

    @classmethod
    def from_json(cls, raw: Union[float, int, str]) -> "ExtendedReal":
        if isinstance(raw, str):
            if raw == Kind.MINUS_INFINITY.value:
                return MINUS_INFINITY
            if raw == Kind.PLUS_INFINITY.value:
                return PLUS_INFINITY
            raise ValueError(f"Unknown extended real literal: {raw!r}")
        return cls.finite(raw)

    def __str__(self) -> str:
        if self.is_finite:
            return repr(self.value)
        return self.kind.value


def _coerce(other) -> ExtendedReal:
    if isinstance(other, ExtendedReal):
        return other
    return ExtendedReal.from_float(float(other))


MINUS_INFINITY = ExtendedReal(Kind.MINUS_INFINITY)
PLUS_INFINITY = ExtendedReal(Kind.PLUS_INFINITY)
ZERO = ExtendedReal(Kind.FINITE, 0.0)
