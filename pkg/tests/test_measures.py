"""Discrete curvature measures: atoms, masses, mixed pairings, energy."""

import random
from fractions import Fraction

import pytest

from navol.errors import PreconditionError
from navol.harness import bump_metric, random_convex_metric, tent_metric
from navol.measures import (DiscreteMeasure, energy, integrate, monge_ampere,
                            mixed_monge_ampere)
from navol.plmetric import (canonical_metric, envelope, legendre, metric_shift,
                            metric_sum)
from navol.polytope import segment, simplex, unit_box

from _oracles import (curvature_atoms_1d_oracle,
                      curvature_atoms_2d_convex_oracle)

F = Fraction
SEG = segment(0, 1)
BOX = unit_box(2)


# --------------------------------------------------------------------------
# the measure container
# --------------------------------------------------------------------------

def test_measure_merges_and_drops_zeros():
    mu = DiscreteMeasure([((F(0),), F(1, 2)), ((F(0),), F(1, 2)),
                          ((F(1),), F(3)), ((F(2),), F(0))])
    assert mu.atoms == {(F(0),): F(1), (F(1),): F(3)}
    assert mu.total_mass == 4
    assert mu.is_nonnegative()
    assert mu.items_sorted() == [((F(0),), F(1)), ((F(1),), F(3))]
    assert mu.integrate(lambda v: v[0]) == 3


def test_measure_cancellation_empties():
    mu = DiscreteMeasure([("a", F(2)), ("a", F(-2))])
    assert mu.atoms == {}
    assert mu.total_mass == 0


# --------------------------------------------------------------------------
# curvature atoms
# --------------------------------------------------------------------------

def test_tent_curvature_atoms():
    mu = monge_ampere(tent_metric(SEG))
    assert mu.atoms == {(F(-1),): F(1, 2), (F(1),): F(1, 2)}


def test_canonical_curvature_is_a_single_atom_at_the_origin():
    assert monge_ampere(canonical_metric(SEG)).atoms == {(F(0),): F(1)}
    assert monge_ampere(canonical_metric(BOX)).atoms == {(F(0), F(0)): F(2)}
    assert monge_ampere(canonical_metric(simplex(2))).atoms == {(F(0), F(0)): F(1)}


def test_curvature_matches_slope_jump_oracle_on_the_line():
    rng = random.Random(210)
    for _ in range(12):
        psi = random_convex_metric(SEG, rng, denom_bound=5, size=3)
        got = monge_ampere(psi).atoms
        want = curvature_atoms_1d_oracle(psi.blocks)
        assert got == want, psi


def test_curvature_matches_subdifferential_oracle_in_the_plane():
    rng = random.Random(211)
    bodies = [BOX, simplex(2), unit_box(2).dilate(2)]
    for P in bodies:
        for _ in range(6):
            psi = random_convex_metric(P, rng, denom_bound=4, size=2)
            got = monge_ampere(psi).atoms
            want = curvature_atoms_2d_convex_oracle(psi.blocks[0])
            assert got == want, psi


def test_nonconvex_metric_rejected_by_curvature():
    with pytest.raises(PreconditionError):
        monge_ampere(bump_metric(SEG))


def test_total_mass_is_factorial_times_volume():
    rng = random.Random(212)
    cases = [(tent_metric(SEG), 1), (canonical_metric(BOX), 2),
             (envelope(bump_metric(SEG)), 1),
             (canonical_metric(simplex(2, size=2)), 4)]
    for _ in range(5):
        cases.append((random_convex_metric(SEG, rng), 1))
        cases.append((random_convex_metric(BOX, rng), 2))
    for psi, want in cases:
        assert monge_ampere(psi).total_mass == want


# --------------------------------------------------------------------------
# mixed measures
# --------------------------------------------------------------------------

def test_mixed_measure_of_equal_arguments_is_plain_curvature():
    rng = random.Random(213)
    for _ in range(4):
        psi = random_convex_metric(BOX, rng)
        assert mixed_monge_ampere([psi, psi]) == monge_ampere(psi)


def test_mixed_measure_against_independent_oracle():
    rng = random.Random(214)
    for _ in range(4):
        a = random_convex_metric(BOX, rng)
        b = random_convex_metric(BOX, rng)
        got = mixed_monge_ampere([a, b]).atoms
        # polarization computed purely from the subdifferential oracle
        sum_block = [(tuple(x + y for x, y in zip(s1, s2)), c1 + c2)
                     for s1, c1 in a.blocks[0] for s2, c2 in b.blocks[0]]
        combo = dict(curvature_atoms_2d_convex_oracle(sum_block))
        for block in (a.blocks[0], b.blocks[0]):
            for key, mass in curvature_atoms_2d_convex_oracle(block).items():
                combo[key] = combo.get(key, F(0)) - mass
        want = {k: v / 2 for k, v in combo.items() if v != 0}
        assert got == want


def test_mixed_measure_mass_and_argument_count():
    rng = random.Random(215)
    a = random_convex_metric(BOX, rng)
    b = random_convex_metric(BOX, rng)
    assert mixed_monge_ampere([a, b]).total_mass == 2
    with pytest.raises(PreconditionError):
        mixed_monge_ampere([a])
    with pytest.raises(PreconditionError):
        mixed_monge_ampere([])


# --------------------------------------------------------------------------
# energy
# --------------------------------------------------------------------------

def test_energy_of_tent_pair():
    assert energy(tent_metric(SEG), canonical_metric(SEG)) == F(1, 4)


def test_energy_of_shifted_canonical_square():
    can = canonical_metric(BOX)
    assert energy(metric_shift(can, 1), can) == 2


def test_energy_shift_formula():
    rng = random.Random(216)
    for P, factorial in ((SEG, 1), (BOX, 2)):
        psi = random_convex_metric(P, rng)
        for t in (F(1), F(-2, 3), F(7, 5)):
            assert energy(metric_shift(psi, t), psi) == t * factorial * P.volume()


def test_energy_antisymmetry_and_cocycle():
    rng = random.Random(217)
    for P in (SEG, BOX):
        a = random_convex_metric(P, rng)
        b = random_convex_metric(P, rng)
        c = random_convex_metric(P, rng)
        assert energy(a, b) == -energy(b, a)
        assert energy(a, c) == energy(a, b) + energy(b, c)
        assert energy(a, a) == 0


def test_energy_agrees_with_roof_integral_gap():
    # primal route (atoms of the mixed measures) versus dual route (exact
    # integrals of the conjugate roofs over the polytope)
    rng = random.Random(218)
    for P, factorial in ((SEG, 1), (BOX, 2)):
        for _ in range(4):
            a = random_convex_metric(P, rng)
            b = random_convex_metric(P, rng)
            dual = factorial * (legendre(b).integral() - legendre(a).integral())
            assert energy(a, b) == dual


def test_integrate_helper():
    mu = monge_ampere(tent_metric(SEG))
    assert integrate(lambda v: abs(v[0]), mu) == 1
    assert integrate(lambda v: v[0], mu) == 0


def test_energy_requires_shared_polytope():
    can = canonical_metric(SEG)
    other = canonical_metric(segment(0, 2))
    with pytest.raises(PreconditionError):
        energy(can, other)
