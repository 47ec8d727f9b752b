"""Exact rational polytopes in ambient dimension 1 to 3.

A Polytope is the convex hull of finitely many rational points. There are no
tolerances anywhere: hulls, membership, lattice point enumeration and volumes
are computed with Fraction arithmetic only. Lower-dimensional polytopes are
supported (their volume is 0) via an exact affine chart; lattice enumeration
and volume work for ambient dimension up to 3, all other operations are used
in dimensions 1 and 2.

Vertices are stored in canonical order: counterclockwise starting from the
lexicographic minimum for full-dimensional planar polytopes, lexicographically
sorted otherwise. Facets are half-spaces <a, x> <= b with primitive integer
normal a; lower-dimensional polytopes additionally carry affine-hull equations
<c, x> = d.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import PreconditionError
from .linalg import cross2, det3, nullspace, rank, row_reduce, solve
from .rational import (Point, ZERO, dot, frac, point, primitive_integer_vector,
                       primitive_same_direction, vadd, vscale, vsub)

IntVector = Tuple[int, ...]
HalfSpace = Tuple[IntVector, Fraction]   # <a, x> <= b
Equation = Tuple[IntVector, Fraction]    # <a, x> = b


def _dedupe_points(points: Sequence[Point]) -> List[Point]:
    seen = set()
    out = []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _hull_1d(points: Sequence[Point]) -> List[Point]:
    lo = min(points)
    hi = max(points)
    return [lo] if lo == hi else [lo, hi]


def _hull_2d(points: Sequence[Point]) -> List[Point]:
    """Andrew's monotone chain; returns the hull counterclockwise, collinear
    boundary points dropped, starting at the lexicographic minimum."""
    pts = sorted(_dedupe_points(points))
    if len(pts) <= 2:
        return pts
    lower: List[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear
        return [min(pts), max(pts)]
    return hull


def _left_inverse(columns: List[Point], ambient: int) -> List[List[Fraction]]:
    """Exact left inverse L (k x n) of the n x k matrix with the given columns."""
    k = len(columns)
    gram = [[dot(columns[i], columns[j]) for j in range(k)] for i in range(k)]
    out: List[List[Fraction]] = [[ZERO] * ambient for _ in range(k)]
    for col in range(ambient):
        rhs = [columns[i][col] for i in range(k)]
        sol = solve(gram, rhs)
        assert sol is not None
        for i in range(k):
            out[i][col] = sol[i]
    return out


class Polytope:
    """Convex hull of rational points; construct with Polytope.from_points."""

    def __init__(self, vertices: Sequence[Point], ambient_dim: int,
                 affine_dim: int, inequalities: Sequence[HalfSpace],
                 equalities: Sequence[Equation]):
        self.vertices: Tuple[Point, ...] = tuple(vertices)
        self.ambient_dim = ambient_dim
        self.affine_dim = affine_dim
        self.inequalities: Tuple[HalfSpace, ...] = tuple(inequalities)
        self.equalities: Tuple[Equation, ...] = tuple(equalities)
        self._vertex_set = frozenset(self.vertices)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_points(cls, points: Sequence[Sequence]) -> "Polytope":
        pts = [point(p) for p in points]
        if not pts:
            raise PreconditionError("a polytope needs at least one point")
        n = len(pts[0])
        if n not in (1, 2, 3):
            raise PreconditionError(f"ambient dimension {n} unsupported (need 1..3)")
        if any(len(p) != n for p in pts):
            raise PreconditionError("points of mixed dimension")
        pts = _dedupe_points(pts)

        base = pts[0]
        basis: List[Point] = []
        for p in pts[1:]:
            d = vsub(p, base)
            if rank([list(b) for b in basis] + [list(d)]) > len(basis):
                basis.append(d)
        k = len(basis)

        equalities: List[Equation] = []
        if k < n:
            if k == 0:
                for i in range(n):
                    normal = tuple(1 if j == i else 0 for j in range(n))
                    equalities.append((normal, base[i]))
            else:
                for null in nullspace([list(b) for b in basis]):
                    normal = primitive_integer_vector(null)
                    equalities.append((normal, dot(normal, base)))

        if k == n:
            return cls._from_full_dimensional(pts, n)

        # lower-dimensional: hull in an exact chart, constraints pulled back
        if k == 0:
            return cls([base], n, 0, [], equalities)
        left = _left_inverse(basis, n)
        chart_pts = [tuple(dot(row, vsub(p, base)) for row in left) for p in pts]
        inner = cls.from_points(chart_pts)
        back: Dict[Point, Point] = {cp: p for cp, p in zip(chart_pts, pts)}
        verts = sorted(back[cv] for cv in inner.vertices)
        inequalities: List[HalfSpace] = []
        for alpha, beta in inner.inequalities:
            ambient_normal = tuple(
                sum(frac(alpha[i]) * left[i][j] for i in range(k)) for j in range(n)
            )
            if all(c == 0 for c in ambient_normal):
                continue
            rhs = beta + dot(ambient_normal, base)
            prim, s = primitive_same_direction(ambient_normal)
            inequalities.append((prim, rhs * s))
        return cls(verts, n, k, inequalities, equalities)

    @classmethod
    def _from_full_dimensional(cls, pts: List[Point], n: int) -> "Polytope":
        if n == 1:
            verts = _hull_1d(pts)
            lo, hi = verts[0][0], verts[-1][0]
            ineqs = [((1,), hi), ((-1,), -lo)]
            return cls(verts, 1, 1, ineqs, [])
        if n == 2:
            hull = _hull_2d(pts)
            start = hull.index(min(hull))
            hull = hull[start:] + hull[:start]
            ineqs = []
            for a, b in zip(hull, hull[1:] + hull[:1]):
                d = vsub(b, a)
                normal, _ = primitive_same_direction((d[1], -d[0]))
                ineqs.append((normal, dot(normal, a)))
            return cls(hull, 2, 2, ineqs, [])
        return cls._from_full_3d(pts)

    @classmethod
    def _from_full_3d(cls, pts: List[Point]) -> "Polytope":
        planes: Dict[Tuple[IntVector, Fraction], None] = {}
        for i, j, k in itertools.combinations(range(len(pts)), 3):
            u = vsub(pts[j], pts[i])
            v = vsub(pts[k], pts[i])
            normal_raw = (
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            )
            if all(c == 0 for c in normal_raw):
                continue
            normal = primitive_integer_vector(normal_raw)
            rhs = dot(normal, pts[i])
            sides = [dot(normal, p) - rhs for p in pts]
            if all(s <= 0 for s in sides):
                planes[(normal, rhs)] = None
            elif all(s >= 0 for s in sides):
                planes[(tuple(-c for c in normal), -rhs)] = None
        facets = list(planes.keys())
        verts = []
        for p in pts:
            active = [a for a, b in facets if dot(a, p) == b]
            if rank([[frac(c) for c in a] for a in active]) == 3:
                verts.append(p)
        return cls(sorted(verts), 3, 3, facets, [])

    # -- queries ----------------------------------------------------------

    def contains(self, pt: Sequence, scale: Fraction = Fraction(1)) -> bool:
        """Exact membership of pt in scale*P."""
        x = point(pt)
        for a, b in self.equalities:
            if dot(a, x) != scale * b:
                return False
        for a, b in self.inequalities:
            if dot(a, x) > scale * b:
                return False
        return True

    def lattice_points(self, m: int = 1) -> List[IntVector]:
        """Integer points of m*P in lexicographic order (m >= 0)."""
        if m < 0:
            raise PreconditionError("dilation factor must be nonnegative")
        if m == 0:
            origin = tuple(0 for _ in range(self.ambient_dim))
            return [origin]
        lows, highs = [], []
        for c in range(self.ambient_dim):
            coords = [m * v[c] for v in self.vertices]
            lo, hi = min(coords), max(coords)
            lows.append(-(-lo.numerator // lo.denominator))
            highs.append(hi.numerator // hi.denominator)
        eqs = [(a, m * b) for a, b in self.equalities]
        ineqs = [(a, m * b) for a, b in self.inequalities]
        out: List[IntVector] = []
        ranges = [range(lo, hi + 1) for lo, hi in zip(lows, highs)]
        for x in itertools.product(*ranges):
            ok = True
            for a, b in eqs:
                if sum(ai * xi for ai, xi in zip(a, x)) != b:
                    ok = False
                    break
            if ok:
                for a, b in ineqs:
                    if sum(ai * xi for ai, xi in zip(a, x)) > b:
                        ok = False
                        break
            if ok:
                out.append(x)
        return out

    def volume(self) -> Fraction:
        """Euclidean volume (length/area/volume); 0 if not full-dimensional."""
        if self.affine_dim < self.ambient_dim:
            return ZERO
        v = self.vertices
        if self.ambient_dim == 1:
            return v[-1][0] - v[0][0]
        if self.ambient_dim == 2:
            acc = ZERO
            for a, b in zip(v, v[1:] + v[:1]):
                acc += a[0] * b[1] - b[0] * a[1]
            return abs(acc) / 2
        return self._volume_3d()

    def _volume_3d(self) -> Fraction:
        nverts = len(self.vertices)
        centroid = tuple(
            sum(v[c] for v in self.vertices) / nverts for c in range(3)
        )
        total = ZERO
        for a, b in self.inequalities:
            on_facet = [v for v in self.vertices if dot(a, v) == b]
            drop = max(range(3), key=lambda i: abs(a[i]))
            keep = [i for i in range(3) if i != drop]
            proj = {(v[keep[0]], v[keep[1]]): v for v in on_facet}
            ring = _hull_2d(list(proj.keys()))
            cycle = [proj[q] for q in ring]
            if len(cycle) < 3:
                continue
            w0 = cycle[0]
            for w1, w2 in zip(cycle[1:], cycle[2:]):
                total += abs(det3(vsub(w0, centroid), vsub(w1, centroid),
                                  vsub(w2, centroid)))
        return total / 6

    def minkowski_sum(self, other: "Polytope") -> "Polytope":
        if self.ambient_dim != other.ambient_dim:
            raise PreconditionError("Minkowski sum needs equal ambient dimension")
        sums = [vadd(a, b) for a in self.vertices for b in other.vertices]
        return Polytope.from_points(sums)

    def dilate(self, t: Fraction) -> "Polytope":
        t = frac(t)
        if t < 0:
            raise PreconditionError("dilation factor must be nonnegative")
        return Polytope.from_points([vscale(t, v) for v in self.vertices])

    def is_full_dimensional(self) -> bool:
        return self.affine_dim == self.ambient_dim

    def edges_ccw(self) -> List[Tuple[Point, Point]]:
        """Boundary edges of a full-dimensional planar polytope, CCW."""
        if self.ambient_dim != 2 or not self.is_full_dimensional():
            raise PreconditionError("edges_ccw needs a full-dimensional planar polytope")
        v = list(self.vertices)
        return list(zip(v, v[1:] + v[:1]))

    # -- identity ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polytope)
                and self.ambient_dim == other.ambient_dim
                and self._vertex_set == other._vertex_set)

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self._vertex_set))

    def __repr__(self) -> str:
        verts = ", ".join(str(tuple(map(str, v))) for v in self.vertices)
        return f"Polytope[{verts}]"


def unit_box(n: int) -> Polytope:
    """The cube [0,1]^n."""
    corners = list(itertools.product((0, 1), repeat=n))
    return Polytope.from_points(corners)


def simplex(n: int, size: int = 1) -> Polytope:
    """size times the standard simplex conv(0, e_1, ..., e_n)."""
    pts = [tuple(0 for _ in range(n))]
    for i in range(n):
        pts.append(tuple(size if j == i else 0 for j in range(n)))
    return Polytope.from_points(pts)


def segment(a, b) -> Polytope:
    """1-dimensional polytope [a, b] in the line."""
    return Polytope.from_points([(frac(a),), (frac(b),)])
