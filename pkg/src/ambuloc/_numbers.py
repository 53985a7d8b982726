"""Exact rational helpers shared by the JSON and MPS writers."""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from numbers import Rational

# floats with at most this many significant digits round-trip through repr exactly
_MAX_FLOAT_DIGITS = 15


def to_fraction(value, where: str = "value") -> Fraction:
    """Coerce a JSON scalar (int, Fraction, decimal or "p/q" string) to a Fraction."""
    if isinstance(value, bool):
        raise TypeError(f"{where}: expected a number, got a boolean")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        # only reachable when callers bypass the Fraction-aware JSON loader
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{where}: cannot parse {value!r} as a rational") from exc
    raise TypeError(f"{where}: expected a number, got {type(value).__name__}")


def terminating_decimal(value: Fraction) -> str | None:
    """Exact decimal string for ``value`` or None when the expansion does not terminate."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    places = max(twos, fives)
    scaled = value * 10**places
    assert scaled.denominator == 1
    text = str(Decimal(scaled.numerator).scaleb(-places))
    if "E" in text or "e" in text:
        text = format(Decimal(scaled.numerator).scaleb(-places), "f")
    return text


def encode_json_number(value: Fraction) -> int | float | str:
    """JSON encoding that loads back to the identical Fraction.

    Integers stay integers, short terminating decimals become JSON numbers and
    everything else is written as a ``"p/q"`` string.
    """
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    text = terminating_decimal(value)
    if text is not None:
        digits = len(text.replace("-", "").replace(".", "").lstrip("0"))
        if digits <= _MAX_FLOAT_DIGITS:
            as_float = float(text)
            if Fraction(repr(as_float)) == value:
                return as_float
    return f"{value.numerator}/{value.denominator}"


def format_fraction(value: Fraction, places: int = 4) -> str:
    """Human-readable decimal rendering (not exact)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{float(value):.{places}f}"
