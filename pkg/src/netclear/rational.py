"""Exact rational money arithmetic.

All amounts in this package are `fractions.Fraction` values.  Fraction already
maintains the canonical form we rely on (positive denominator, coprime
numerator/denominator, zero as 0/1), so this module only supplies parsing and
formatting for the text formats used in market files and CLI output.
"""

from __future__ import annotations

from fractions import Fraction

Rational = Fraction

_POW10 = (1, 10, 100, 1000, 10000, 100000)


def parse_rational(text) -> Fraction:
    """Parse a decimal string ("12.5", "-0.01"), a fraction string ("3/7"),
    or a number into an exact Fraction.

    Floats are rejected: a float argument almost always means an unintended
    binary rounding already happened upstream.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError(f"refusing to parse float {text!r}; pass a string or Fraction")
    if not isinstance(text, str):
        raise TypeError(f"cannot parse {type(text).__name__} as rational")
    s = text.strip()
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational literal: {text!r}") from exc


def format_rational(value: Fraction) -> str:
    """Render a Fraction as a decimal string when that is exact, else "p/q".

    A fraction has a finite decimal expansion iff its denominator is 2^a * 5^b.
    """
    value = Fraction(value)
    den = value.denominator
    if den == 1:
        return str(value.numerator)
    two = 0
    while den % 2 == 0:
        den //= 2
        two += 1
    five = 0
    while den % 5 == 0:
        den //= 5
        five += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(two, five)
    scaled = value.numerator * 10**digits // value.denominator
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}" if digits else f"{sign}{whole}"


def from_decimal_float(x: float, places: int = 2) -> Fraction:
    """Round a float onto a 10^-places grid and return the exact grid value.

    Used by the instance generators: sampled floats are snapped to a fixed
    decimal grid so that files round-trip and MILP scaling stays small.
    """
    scale = _POW10[places] if places < len(_POW10) else 10**places
    return Fraction(round(x * scale), scale)
