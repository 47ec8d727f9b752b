"""Exact rational scalars and points.

Everything the package asserts on is a fractions.Fraction (or int); floats
appear only in human-readable report columns. Rationals serialize as 'p/q'
strings ('p' when the denominator is 1).
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

Point = Tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Coerce an int, Fraction or 'p/q' string to Fraction. Floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad rational literal {value!r}: {exc}") from None
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def frac_str(value: Fraction) -> str:
    return str(Fraction(value))


def point(coords: Iterable) -> Point:
    return tuple(frac(c) for c in coords)


def point_str(pt: Sequence[Fraction]) -> str:
    return "(" + ", ".join(frac_str(c) for c in pt) + ")"


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    acc = ZERO
    for x, y in zip(a, b):
        acc += x * y
    return acc


def vadd(a: Sequence[Fraction], b: Sequence[Fraction]) -> Point:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Point:
    return tuple(x - y for x, y in zip(a, b))


def vscale(t: Fraction, a: Sequence[Fraction]) -> Point:
    return tuple(t * x for x in a)


def ceil_frac(x: Fraction) -> int:
    return math.ceil(x)


def floor_frac(x: Fraction) -> int:
    return math.floor(x)


def lcm_of(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v)
    return out


def primitive_same_direction(vec: Sequence[Fraction]) -> Tuple[Tuple[int, ...], Fraction]:
    """Scale a nonzero rational vector by a positive factor s to coprime
    integers; returns (integer vector, s)."""
    denom = lcm_of(Fraction(c).denominator for c in vec)
    ints = [int(c * denom) for c in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(v // g for v in ints), Fraction(denom, g)


def primitive_integer_vector(vec: Sequence[Fraction]) -> Tuple[int, ...]:
    """Scale a nonzero rational vector to coprime integers, first nonzero > 0."""
    denom = lcm_of(Fraction(c).denominator for c in vec)
    ints = [int(c * denom) for c in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    ints = [v // g for v in ints]
    for v in ints:
        if v != 0:
            if v < 0:
                ints = [-w for w in ints]
            break
    return tuple(ints)
