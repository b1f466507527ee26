"""Exact score arithmetic.

All scores are computed as :class:`fractions.Fraction` so that leaderboard
ties can never flip due to floating-point drift. Values are rounded (half-up,
two decimal places) only when rendered for presentation; serialized forms
always carry the raw numerator/denominator alongside the decimal string.
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from typing import Union

Rational = Union[int, str, Fraction]

_TWO_PLACES = Decimal("0.01")


def as_fraction(value: Rational | float) -> Fraction:
    """Convert a config/JSON value to an exact Fraction.

    Floats are routed through their shortest decimal repr, so a JSON ``0.6``
    becomes exactly 3/5 rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a numeric value")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def render_decimal(value: Fraction, places: int = 2) -> str:
    """Render a Fraction as a fixed-point decimal string, rounding half-up."""
    quantum = Decimal(1).scaleb(-places)
    dec = Decimal(value.numerator) / Decimal(value.denominator)
    return str(dec.quantize(quantum, rounding=ROUND_HALF_UP))


def fraction_payload(value: Fraction) -> dict:
    """JSON form of an exact score: 2-dp decimal plus the audit rational."""
    return {
        "decimal": render_decimal(value),
        "numerator": value.numerator,
        "denominator": value.denominator,
    }


def fraction_from_payload(payload: dict) -> Fraction:
    return Fraction(int(payload["numerator"]), int(payload["denominator"]))
