"""Non-archimedean volumes via lattice-point counting.

The volume of a metric pair is the large-m limit of n!/m^n times the lattice
length at level m: the sum over u in mP of integer lattice lengths
ceil(m g2(u/m)) - ceil(m g1(u/m)) of the induced norm quotients, where g_i
is the Legendre transform of metric i. The exact limit equals the energy of
the pair of convex envelopes; the series rows exist to demonstrate this and
to power the finite-level Lipschitz and proportionality checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import PreconditionError
from .measures import energy
from .plmetric import PLMetric, RoofFunction, distance, envelope, is_semipositive, legendre, metric_shift
from .rational import ZERO, ceil_frac, frac, lcm_of


def default_schedule(dim: int) -> List[int]:
    if dim <= 1:
        return list(range(1, 21)) + [50, 100, 200]
    if dim == 2:
        return list(range(1, 11)) + [20, 40]
    return list(range(1, 11))


def _integer_roof(roof: RoofFunction) -> Tuple[int, List[Tuple[Tuple[int, ...], int]]]:
    """Common-denominator form: returns (L, pieces) with integer slope/constant
    data so that max_k(<A_k,u> + m*B_k) = L * m * roof(u/m) for integer u."""
    denoms: List[int] = []
    for slope, const in roof.pieces:
        denoms.extend(c.denominator for c in slope)
        denoms.append(const.denominator)
    scale = lcm_of(denoms)
    pieces = [(tuple(int(c * scale) for c in slope), int(const * scale))
              for slope, const in roof.pieces]
    return scale, pieces


def _ceil_values(roof: RoofFunction, pts: Sequence[Tuple[int, ...]], m: int) -> List[int]:
    """ceil(m * roof(u/m)) for each integer point u in m*P, exactly."""
    scale, pieces = _integer_roof(roof)
    dim = len(pts[0]) if pts else 0
    out: List[int] = []
    if dim == 1:
        data = [(a[0], m * b) for a, b in pieces]
        for (x,) in pts:
            best = max(a * x + mb for a, mb in data)
            out.append(-((-best) // scale))
    elif dim == 2:
        data = [(a[0], a[1], m * b) for a, b in pieces]
        for x, y in pts:
            best = max(a0 * x + a1 * y + mb for a0, a1, mb in data)
            out.append(-((-best) // scale))
    else:
        data = [(a, m * b) for a, b in pieces]
        for u in pts:
            best = max(sum(c * x for c, x in zip(a, u)) + mb for a, mb in data)
            out.append(-((-best) // scale))
    return out


def lattice_length(m1: PLMetric, m2: PLMetric, m: int) -> int:
    """Total lattice length at level m of the norm quotient of the pair."""
    if m1.polytope != m2.polytope:
        raise PreconditionError("lattice_length needs metrics on the same polytope")
    if m < 1:
        raise PreconditionError("lattice_length needs a positive level m")
    pts = m1.polytope.lattice_points(m)
    if not pts:
        return 0
    c2 = _ceil_values(legendre(m2), pts, m)
    c1 = _ceil_values(legendre(m1), pts, m)
    return sum(b - a for a, b in zip(c1, c2))


@dataclass
class SeriesRow:
    m: int
    length: int
    normalized: Fraction  # n! * length / m^(n+1)


@dataclass
class VolumeResult:
    rows: List[SeriesRow]
    exact: Fraction
    dim: int
    semipositive_pair: bool
    max_gap: Fraction = ZERO  # max |normalized - exact| over the schedule tail

    @property
    def estimate(self) -> Fraction:
        return self.rows[-1].normalized if self.rows else ZERO


def navol_series(m1: PLMetric, m2: PLMetric,
                 schedule: Optional[Sequence[int]] = None) -> List[SeriesRow]:
    n = m1.dim
    factorial = 1
    for i in range(2, n + 1):
        factorial *= i
    if schedule is None:
        schedule = default_schedule(n)
    rows = []
    for m in schedule:
        length = lattice_length(m1, m2, m)
        rows.append(SeriesRow(m, length, Fraction(factorial * length, m ** (n + 1))))
    return rows


def navol(m1: PLMetric, m2: PLMetric,
          schedule: Optional[Sequence[int]] = None) -> VolumeResult:
    """Non-archimedean volume of a metric pair: lattice-length series plus the
    exact limit, which is the energy of the pair of convex envelopes."""
    rows = navol_series(m1, m2, schedule)
    exact = energy(envelope(m1), envelope(m2))
    semi = is_semipositive(m1) and is_semipositive(m2)
    tail = rows[len(rows) // 2:] if rows else []
    gap = max((abs(r.normalized - exact) for r in tail), default=ZERO)
    return VolumeResult(rows=rows, exact=exact, dim=m1.dim,
                        semipositive_pair=semi, max_gap=gap)


@dataclass
class LipschitzReport:
    distance: Fraction
    rows: List[Tuple[int, int, int]]  # (m, |delta length|, integer bound)
    limit_lhs: Fraction
    limit_rhs: Fraction
    passed: bool


def lipschitz_check(m1: PLMetric, m1_alt: PLMetric, m2: PLMetric,
                    schedule: Optional[Sequence[int]] = None) -> LipschitzReport:
    """Stability of volumes under sup-distance perturbation of one argument.

    Finite level: replacing m1 by m1_alt moves each lattice length by at most
    ceil(m*d) with d the sup distance, so the total moves by at most
    N_m * ceil(m*d). In the limit: |vol' - vol| <= n!vol(P) * d.
    """
    d = distance(m1, m1_alt)
    if schedule is None:
        schedule = default_schedule(m1.dim)
    rows: List[Tuple[int, int, int]] = []
    ok = True
    for m in schedule:
        base = lattice_length(m1, m2, m)
        alt = lattice_length(m1_alt, m2, m)
        bound = len(m1.polytope.lattice_points(m)) * int(ceil_frac(m * d))
        delta = abs(alt - base)
        rows.append((m, delta, bound))
        ok = ok and delta <= bound
    vol_base = energy(envelope(m1), envelope(m2))
    vol_alt = energy(envelope(m1_alt), envelope(m2))
    n = m1.dim
    factorial = 1
    for i in range(2, n + 1):
        factorial *= i
    limit_lhs = abs(vol_alt - vol_base)
    limit_rhs = factorial * m1.polytope.volume() * d
    ok = ok and limit_lhs <= limit_rhs
    return LipschitzReport(distance=d, rows=rows, limit_lhs=limit_lhs,
                           limit_rhs=limit_rhs, passed=ok)


@dataclass
class ProportionalityReport:
    shift: Fraction
    rows: List[Tuple[int, int, int, int]]  # (m, delta, lower, upper)
    exact_rows: int
    passed: bool


def proportionality_check(m1: PLMetric, m2: PLMetric, t: Fraction,
                          schedule: Optional[Sequence[int]] = None) -> ProportionalityReport:
    """Shifting a metric by the constant t shifts each lattice length by
    exactly t*m when t*m is an integer, and by a value in
    [floor(t*m), ceil(t*m)] otherwise; summed over the N_m lattice points."""
    t = frac(t)
    shifted = metric_shift(m1, t)
    if schedule is None:
        schedule = default_schedule(m1.dim)
    rows: List[Tuple[int, int, int, int]] = []
    exact_rows = 0
    ok = True
    for m in schedule:
        n_pts = len(m1.polytope.lattice_points(m))
        delta = lattice_length(shifted, m2, m) - lattice_length(m1, m2, m)
        tm = t * m
        if tm.denominator == 1:
            lower = upper = int(tm) * n_pts
            exact_rows += 1
        else:
            lower = (tm.numerator // tm.denominator) * n_pts
            upper = int(ceil_frac(tm)) * n_pts
        rows.append((m, delta, lower, upper))
        ok = ok and lower <= delta <= upper
    return ProportionalityReport(shift=t, rows=rows, exact_rows=exact_rows, passed=ok)
