"""Exact and log-space scalars.

Exact mode is plain :class:`fractions.Fraction`. Log mode carries a sign and
``log|x|`` so that values far outside double range can still be compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError

Number = int | Fraction | float


def parse_lambda(text: str | Number) -> Fraction | float:
    """Parse a fugacity from ``"p/q"``, an integer or a decimal string.

    Rational and decimal strings give an exact Fraction; a Python float stays a
    float (estimate mode).
    """
    if isinstance(text, Fraction):
        value: Fraction | float = text
    elif isinstance(text, int):
        value = Fraction(text)
    elif isinstance(text, float):
        value = text
    else:
        try:
            value = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"cannot parse lambda {text!r}") from exc
    if not value > 0:
        raise ParameterError(f"lambda must be positive, got {text!r}")
    return value


def fmt_rational(x: Fraction | int) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def fmt_float(x: float) -> float | str:
    """17 significant digits; non-finite values become strings for JSON."""
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return float(f"{x:.17g}")


def log_of(x: Number) -> float:
    """Natural log of a positive exact value without float overflow."""
    if isinstance(x, float):
        return math.log(x)
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of non-positive value")
    num, den = x.numerator, x.denominator
    return _log_int(num) - _log_int(den)


def _log_int(m: int) -> float:
    shift = max(m.bit_length() - 900, 0)
    return math.log(m >> shift) + shift * math.log(2)


@dataclass(frozen=True)
class LogScalar:
    """Signed value stored as (sign, log|x|)."""

    sign: int
    log_abs: float

    @classmethod
    def of(cls, x: Number) -> "LogScalar":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, log_of(abs(x)))

    def __float__(self) -> float:
        return self.sign * math.exp(self.log_abs) if self.sign else 0.0

    def __mul__(self, other: "LogScalar") -> "LogScalar":
        return LogScalar(self.sign * other.sign, self.log_abs + other.log_abs)

    def __add__(self, other: "LogScalar") -> "LogScalar":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_abs >= other.log_abs else (other, self)
        r = math.exp(lo.log_abs - hi.log_abs)
        if hi.sign == lo.sign:
            return LogScalar(hi.sign, hi.log_abs + math.log1p(r))
        if r == 1.0:
            return LogScalar(0, -math.inf)
        return LogScalar(hi.sign, hi.log_abs + math.log1p(-r))


def power_table(base: Number, top: int) -> list:
    """``[base**0, ..., base**top]`` built by repeated multiplication."""
    out = [base ** 0]
    for _ in range(top):
        out.append(out[-1] * base)
    return out
