"""Exact sheaf cohomology tables for invariant divisors on a projective line
and on three smooth toric surface families, with asymptotic growth, Morse-type
upper bounds and twist-perturbation stability checks.

Supported families: P1 (Picard rank 1, curve), P2, P1xP1, and the Hirzebruch
surfaces F_a for a >= 0 (basis: a section S with S^2 = a and a fibre F).
h^0 is a lattice-point / section count in closed form, h^top comes from Serre
duality, and the middle h^1 on surfaces is determined by Riemann-Roch; all
values are exact integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import PreconditionError
from .polytope import Polytope
from .rational import ZERO, ceil_frac, frac, point


Class = Tuple[Fraction, ...]


def _as_class(data: Sequence, rank: int) -> Class:
    cls = tuple(frac(c) for c in data)
    if len(cls) != rank:
        raise PreconditionError(f"divisor class needs {rank} coordinates, got {len(cls)}")
    return cls


class ToricFamily:
    """One of the supported varieties, with its intersection theory and
    closed-form section counts."""

    def __init__(self, name: str):
        name = name.strip()
        if name == "P1":
            self.dim, self.rank = 1, 1
            self.canonical = (Fraction(-2),)
        elif name == "P2":
            self.dim, self.rank = 2, 1
            self.canonical = (Fraction(-3),)
        elif name == "P1xP1":
            self.dim, self.rank = 2, 2
            self.canonical = (Fraction(-2), Fraction(-2))
        elif name.startswith("F") and name[1:].isdigit():
            self.dim, self.rank = 2, 2
            self.hirzebruch_a = int(name[1:])
            self.canonical = (Fraction(-2), Fraction(self.hirzebruch_a - 2))
        else:
            raise PreconditionError(
                f"unsupported family {name!r}; use P1, P2, P1xP1 or Fa (a >= 0)")
        self.name = name

    def __eq__(self, other) -> bool:
        return isinstance(other, ToricFamily) and self.name == other.name

    def __hash__(self) -> int:
        return hash(self.name)

    def __repr__(self) -> str:
        return f"ToricFamily({self.name})"

    # -- intersection theory -------------------------------------------------
    def intersection(self, d1: Sequence, d2: Sequence) -> Fraction:
        """Intersection number of two (rational) classes; degree product on P1."""
        a = _as_class(d1, self.rank)
        b = _as_class(d2, self.rank)
        if self.name == "P1":
            raise PreconditionError("P1 is a curve: use degree, not intersection")
        if self.name == "P2":
            return a[0] * b[0]
        if self.name == "P1xP1":
            return a[0] * b[1] + a[1] * b[0]
        h = self.hirzebruch_a
        return h * a[0] * b[0] + a[0] * b[1] + a[1] * b[0]

    def intersection_matrix(self) -> List[List[Fraction]]:
        basis = [tuple(Fraction(int(i == j)) for j in range(self.rank))
                 for i in range(self.rank)]
        if self.name == "P1":
            return [[Fraction(1)]]
        return [[self.intersection(e, f) for f in basis] for e in basis]

    def degree(self, d: Sequence) -> Fraction:
        if self.name != "P1":
            raise PreconditionError("degree is the curve-side notion; use intersection")
        return _as_class(d, 1)[0]

    def top_power(self, d: Sequence, e: Sequence, q: int) -> Fraction:
        """D^(n-q) . E^q as a rational number."""
        if self.name == "P1":
            return self.degree(d) if q == 0 else self.degree(e)
        if q == 0:
            return self.intersection(d, d)
        if q == 1:
            return self.intersection(d, e)
        return self.intersection(e, e)

    def is_nef(self, d: Sequence) -> bool:
        cls = _as_class(d, self.rank)
        return all(c >= 0 for c in cls)

    # -- section counts ------------------------------------------------------
    def h0_integral(self, d: Sequence[int]) -> int:
        """Number of global sections of the line bundle of an integral class."""
        cls = tuple(int(c) for c in d)
        if self.name == "P1":
            (deg,) = cls
            return deg + 1 if deg >= 0 else 0
        if self.name == "P2":
            (deg,) = cls
            return (deg + 1) * (deg + 2) // 2 if deg >= 0 else 0
        if self.name == "P1xP1":
            a, b = cls
            return (a + 1) * (b + 1) if a >= 0 and b >= 0 else 0
        p, q = cls
        if p < 0:
            return 0
        h = self.hirzebruch_a
        return sum(max(0, h * y + q + 1) for y in range(p + 1))

    def polytope(self, d: Sequence) -> Polytope:
        """Divisor polytope of a nef rational class."""
        cls = _as_class(d, self.rank)
        if not self.is_nef(cls):
            raise PreconditionError(f"class {cls} is not nef on {self.name}")
        zero = Fraction(0)
        if self.name == "P1":
            return Polytope.from_points([(zero,), (cls[0],)])
        if self.name == "P2":
            deg = cls[0]
            return Polytope.from_points([(zero, zero), (deg, zero), (zero, deg)])
        if self.name == "P1xP1":
            a, b = cls
            return Polytope.from_points([(zero, zero), (a, zero), (zero, b), (a, b)])
        p, q = cls
        h = Fraction(self.hirzebruch_a)
        return Polytope.from_points(
            [(zero, zero), (q, zero), (q + h * p, p), (zero, p)])

    def euler_characteristic(self, d: Sequence[int]) -> Fraction:
        """chi of the line bundle of an integral class, by Riemann-Roch."""
        cls = _as_class(d, self.rank)
        if self.name == "P1":
            return cls[0] + 1
        self_int = self.intersection(cls, cls)
        against_k = self.intersection(cls, self.canonical)
        return 1 + (self_int - against_k) / 2


def toric_family(name: str) -> ToricFamily:
    return ToricFamily(name)


@dataclass(frozen=True)
class RealDivisor:
    """Rational-coefficient divisor with a chosen decomposition: a list of
    (rational coefficient, integral basis class) terms. Round-up is applied
    per term, so two decompositions of the same class may round differently."""
    family: ToricFamily
    terms: Tuple[Tuple[Fraction, Tuple[int, ...]], ...]

    @staticmethod
    def make(family: ToricFamily, terms: Sequence[Tuple[object, Sequence[int]]]
             ) -> "RealDivisor":
        packed = []
        for coeff, base in terms:
            base_t = tuple(int(c) for c in base)
            if len(base_t) != family.rank:
                raise PreconditionError(
                    f"basis divisor {base_t} needs {family.rank} coordinates")
            packed.append((frac(coeff), base_t))
        return RealDivisor(family, tuple(packed))

    @staticmethod
    def integral(family: ToricFamily, cls: Sequence[int]) -> "RealDivisor":
        return RealDivisor.make(family, [(1, cls)])

    def total(self) -> Class:
        acc = [ZERO] * self.family.rank
        for coeff, base in self.terms:
            for i, c in enumerate(base):
                acc[i] += coeff * c
        return tuple(acc)

    def round_up(self, m: int = 1) -> Tuple[int, ...]:
        """Integral class sum of ceil(m * a_i) * D_i over the decomposition."""
        acc = [0] * self.family.rank
        for coeff, base in self.terms:
            scaled = int(ceil_frac(m * coeff))
            for i, c in enumerate(base):
                acc[i] += scaled * c
        return tuple(acc)

    def scaled(self, t) -> "RealDivisor":
        t = frac(t)
        return RealDivisor(self.family,
                           tuple((t * c, b) for c, b in self.terms))

    def minus(self, other: "RealDivisor") -> "RealDivisor":
        if other.family != self.family:
            raise PreconditionError("divisors live on different families")
        return RealDivisor(self.family,
                           self.terms + tuple((-c, b) for c, b in other.terms))


def hq(family: ToricFamily, divisor: RealDivisor, m: int, q: int) -> int:
    """Exact h^q of the round-up of m times the divisor."""
    if q not in (0, 1, 2):
        raise PreconditionError("q must be 0, 1 or 2")
    if m < 1:
        raise PreconditionError("level m must be >= 1")
    cls = divisor.round_up(m)
    return _hq_integral(family, cls, q)


def _hq_integral(family: ToricFamily, cls: Sequence[int], q: int) -> int:
    k = tuple(int(c) for c in family.canonical)
    if family.name == "P1":
        if q == 0:
            return family.h0_integral(cls)
        if q == 1:
            dual = tuple(ki - c for ki, c in zip(k, cls))
            return family.h0_integral(dual)
        return 0
    if q == 0:
        return family.h0_integral(cls)
    dual = tuple(ki - c for ki, c in zip(k, cls))
    h2 = family.h0_integral(dual)
    if q == 2:
        return h2
    chi = family.euler_characteristic(cls)
    h1 = family.h0_integral(cls) + h2 - chi
    if h1.denominator != 1:
        raise PreconditionError(f"Riemann-Roch gave non-integral h1 for {cls}")
    return int(h1)


@dataclass
class CohomologyTable:
    family: ToricFamily
    divisor: RealDivisor
    rows: List[Tuple[int, int, int, Fraction]]  # (m, q, h^q, normalized)

    def h1_all_nonnegative(self) -> bool:
        return all(h >= 0 for _, q, h, _ in self.rows if q == 1)

    def serre_consistent(self) -> bool:
        """h^n(mD) recomputed independently as h^0 of K minus the round-up."""
        fam = self.family
        top = fam.dim
        k = tuple(int(c) for c in fam.canonical)
        for m, q, h, _ in self.rows:
            if q != top:
                continue
            cls = self.divisor.round_up(m)
            dual = tuple(ki - c for ki, c in zip(k, cls))
            if h != fam.h0_integral(dual):
                return False
        return True


def cohomology_table(family: ToricFamily, divisor: RealDivisor,
                     schedule: Sequence[int],
                     qs: Optional[Sequence[int]] = None) -> CohomologyTable:
    if qs is None:
        qs = tuple(range(family.dim + 1))
    n = family.dim
    factorial = 1 if n == 1 else 2
    rows = []
    for m in schedule:
        for q in qs:
            h = hq(family, divisor, m, q)
            rows.append((m, q, h, Fraction(factorial * h, m ** n)))
    return CohomologyTable(family, divisor, rows)


@dataclass
class AsymptoticReport:
    q: int
    rows: List[Tuple[int, int, Fraction]]  # (m, h^q, normalized)
    estimate: Fraction
    exact: Optional[Fraction]


def asymptotic_hq(family: ToricFamily, divisor: RealDivisor, q: int,
                  schedule: Sequence[int]) -> AsymptoticReport:
    """Normalized series h^q(mD) n!/m^n with the exact limit when known:
    q=0 for nef classes (n! times the polytope volume) and the two mirror
    cases reachable by duality / the product formula."""
    if list(schedule) != sorted(set(schedule)) or not schedule:
        raise PreconditionError("schedule must be strictly increasing and nonempty")
    n = family.dim
    factorial = 1 if n == 1 else 2
    rows = []
    for m in schedule:
        h = hq(family, divisor, m, q)
        rows.append((m, h, Fraction(factorial * h, m ** n)))
    return AsymptoticReport(q=q, rows=rows, estimate=rows[-1][2],
                            exact=asymptotic_hq_exact(family, divisor, q))


def asymptotic_hq_exact(family: ToricFamily, divisor: RealDivisor,
                        q: int) -> Optional[Fraction]:
    total = divisor.total()
    n = family.dim
    factorial = 1 if n == 1 else 2
    if q == 0 and family.is_nef(total):
        return factorial * family.polytope(total).volume()
    neg = tuple(-c for c in total)
    if q == n and family.is_nef(neg):
        return factorial * family.polytope(neg).volume()
    if family.name == "P1xP1" and q == 1:
        a, b = total
        if a > 0 and b < 0:
            return 2 * a * (-b)
        if a < 0 and b > 0:
            return 2 * (-a) * b
    return None


@dataclass
class MorseReport:
    q: int
    leading: Fraction          # binom(n,q) * D^(n-q).E^q
    fitted_constant: Fraction  # C in the m^(n-1) remainder
    rows: List[Tuple[int, int, Fraction, Fraction]]  # (m, h^q, bound, margin)
    passed: bool


def morse_check(family: ToricFamily, d: RealDivisor, e: RealDivisor, q: int,
                schedule: Sequence[int]) -> MorseReport:
    """Upper bound h^q(m(D-E)) <= binom(n,q) D^(n-q).E^q m^n/n! + C m^(n-1)
    for nef D, E; C is fitted on the first half of the schedule and the bound
    is verified with that C on the second half."""
    for div, label in ((d, "D"), (e, "E")):
        if not family.is_nef(div.total()):
            raise PreconditionError(f"{label} = {div.total()} is not nef on {family.name}")
    n = family.dim
    factorial = 1 if n == 1 else 2
    leading = math.comb(n, q) * family.top_power(d.total(), e.total(), q)
    diff = d.minus(e)
    schedule = list(schedule)
    half = max(1, len(schedule) // 2)
    values = [(m, hq(family, diff, m, q)) for m in schedule]
    fitted = ZERO
    for m, h in values[:half]:
        main = leading * m ** n / factorial
        excess = (h - main) / m ** (n - 1)
        if excess > fitted:
            fitted = excess
    rows = []
    passed = True
    for idx, (m, h) in enumerate(values):
        bound = leading * m ** n / factorial + fitted * m ** (n - 1)
        margin = bound - h
        rows.append((m, h, bound, margin))
        if idx >= half and margin < 0:
            passed = False
    return MorseReport(q=q, leading=leading, fitted_constant=fitted,
                       rows=rows, passed=passed)


@dataclass
class PerturbationReport:
    q: int
    fitted_constant: Fraction
    rows: List[Tuple[int, int, int, Fraction]]  # (m, p, left, bound)
    passed: bool


def perturbation_scan(family: ToricFamily, d_list: Sequence[RealDivisor],
                      p_list: Sequence[RealDivisor], q: int,
                      grid_max: int) -> PerturbationReport:
    """Twist stability |h^q(mA + pB) - h^q(pB)| <= C m (m+p)^(n-1), probing
    the diagonal A = sum of d_list, B = sum of p_list over the full grid
    0 <= m <= grid_max, 1 <= p <= grid_max; C is fitted on the half of the
    grid with m + p <= grid_max and verified on the rest."""
    if not d_list or not p_list:
        raise PreconditionError("perturbation scan needs nonempty divisor lists")
    a = d_list[0]
    for extra in d_list[1:]:
        a = RealDivisor(family, a.terms + extra.terms)
    b = p_list[0]
    for extra in p_list[1:]:
        b = RealDivisor(family, b.terms + extra.terms)
    n = family.dim

    def left(m: int, p: int) -> int:
        combo = RealDivisor(family,
                            a.scaled(m).terms + b.scaled(p).terms)
        twisted = _hq_integral(family, combo.round_up(1), q)
        plain = _hq_integral(family, b.scaled(p).round_up(1), q)
        return abs(twisted - plain)

    cells = [(m, p) for p in range(1, grid_max + 1)
             for m in range(0, grid_max + 1)]
    fitted = ZERO
    for m, p in cells:
        if m == 0 or m + p > grid_max:
            continue
        ratio = Fraction(left(m, p), m * (m + p) ** (n - 1))
        if ratio > fitted:
            fitted = ratio
    rows = []
    passed = True
    for m, p in cells:
        lhs = left(m, p)
        bound = fitted * m * (m + p) ** (n - 1)
        rows.append((m, p, lhs, bound))
        if lhs > bound:
            passed = False
    return PerturbationReport(q=q, fitted_constant=fitted, rows=rows, passed=passed)


@dataclass
class RoundUpReport:
    q: int
    fitted_constant: Fraction
    rows: List[Tuple[int, int, int, Fraction]]  # (m, h_first, h_second, bound)
    passed: bool


def round_up_independence(family: ToricFamily, first: RealDivisor,
                          second: RealDivisor, q: int,
                          fit_schedule: Sequence[int],
                          extension: Sequence[int]) -> RoundUpReport:
    """Two decompositions of one rational class differ in h^q by at most
    C m^(n-1); C is fitted on fit_schedule and must keep working on the
    extension grid unchanged."""
    if first.total() != second.total():
        raise PreconditionError("round-up comparison needs equal total classes")
    n = family.dim
    fitted = ZERO
    for m in fit_schedule:
        gap = abs(hq(family, first, m, q) - hq(family, second, m, q))
        ratio = Fraction(gap, m ** (n - 1)) if n > 1 else Fraction(gap)
        if ratio > fitted:
            fitted = ratio
    rows = []
    passed = True
    for m in list(fit_schedule) + list(extension):
        h1 = hq(family, first, m, q)
        h2 = hq(family, second, m, q)
        bound = fitted * m ** (n - 1)
        rows.append((m, h1, h2, bound))
        if abs(h1 - h2) > bound:
            passed = False
    return RoundUpReport(q=q, fitted_constant=fitted, rows=rows, passed=passed)
