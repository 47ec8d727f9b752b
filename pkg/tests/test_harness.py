"""End-to-end verification drivers and the bundled instance suite."""

import random
from fractions import Fraction

import pytest

from navol.errors import PreconditionError
from navol.harness import (bump_metric, random_convex_metric,
                           random_direction, random_nonconvex_metric,
                           random_tree, random_tree_measures, run_bundled_suite,
                           tent_direction, tent_metric, verify_differentiability,
                           verify_h0_envelope_equality, verify_length_cocycle,
                           verify_orthogonality, verify_tree_solvability,
                           verify_vol_is_energy)
from navol.plmetric import canonical_metric
from navol.polytope import segment, unit_box

F = Fraction
SEG = segment(0, 1)
BOX = unit_box(2)
EPS = [F(1, 2), F(1, 4), F(1, 8), F(1, 16), F(1, 32)]


def test_vol_is_energy_on_the_tent():
    rep = verify_vol_is_energy(tent_metric(SEG), canonical_metric(SEG))
    assert rep.passed
    assert rep.theorem == "vol-is-energy"
    assert rep.exact["energy"] == "1/4"
    assert rep.series[0] == ("m", "length", "normalized")


def test_vol_is_energy_envelope_label_for_nonconvex_input():
    rep = verify_vol_is_energy(bump_metric(SEG), canonical_metric(SEG),
                               schedule=list(range(1, 13)))
    assert rep.passed
    assert rep.theorem == "vol-is-energy-envelope"


def test_differentiability_on_the_tent_direction():
    pos, neg = tent_direction(SEG)
    rep = verify_differentiability(canonical_metric(SEG), pos, neg, EPS,
                                   fit_count=2)
    assert rep.passed
    assert rep.exact["derivative"] == "1/2"
    assert rep.exact["fitted_constant"] == "1/4"


def test_differentiability_needs_semipositive_base():
    pos, neg = tent_direction(SEG)
    with pytest.raises(PreconditionError):
        verify_differentiability(bump_metric(SEG), pos, neg, EPS)
    with pytest.raises(PreconditionError):
        verify_differentiability(canonical_metric(SEG), pos, neg, [F(0)])


def test_differentiability_survives_growing_residual_ratio():
    # residual/eps^2 may increase towards eps -> 0 within the last linearity
    # window; the affine extrapolation in the fit must absorb that
    rng = random.Random(2000)
    P = BOX
    psi = random_convex_metric(P, rng)
    pos, neg = random_direction(P, rng)
    rep = verify_differentiability(psi, pos, neg, EPS, fit_count=2)
    assert rep.passed


def test_orthogonality_on_the_bump():
    rep = verify_orthogonality(bump_metric(SEG), instance="bump")
    assert rep.passed
    assert rep.exact["residual"] == "0"
    assert rep.exact["gap_sup"] != "0"


def test_h0_envelope_equality_reports():
    rep = verify_h0_envelope_equality(bump_metric(SEG),
                                      schedule=list(range(1, 26)))
    assert rep.passed
    assert rep.exact["max_abs_length"] == "0"
    assert rep.exact["volume_gap"] == "0"


def test_length_cocycle_on_seeded_triples():
    rng = random.Random(2001)
    for P in (SEG, BOX):
        a = random_nonconvex_metric(P, rng)
        b = random_convex_metric(P, rng)
        c = random_nonconvex_metric(P, rng)
        rep = verify_length_cocycle(a, b, c, schedule=[1, 2, 3, 5])
        assert rep.passed
        assert rep.exact["max_defect"] == "0"


def test_tree_solvability_report():
    rng = random.Random(2002)
    tree = random_tree(rng)
    target, base = random_tree_measures(tree, rng)
    rep = verify_tree_solvability(tree, target, base)
    assert rep.passed
    assert rep.exact["defect_atoms"] == "0"
    assert rep.exact["laplacian_mass"] == "0"


def test_report_line_format():
    rep = verify_orthogonality(bump_metric(SEG), instance="bump")
    line = rep.line()
    assert line.startswith("[PASS]")
    assert "envelope-orthogonality" in line
    assert "bump" in line


def test_generators_are_deterministic_per_seed():
    a = random_nonconvex_metric(BOX, random.Random(7))
    b = random_nonconvex_metric(BOX, random.Random(7))
    assert a == b
    t1 = random_tree(random.Random(8))
    t2 = random_tree(random.Random(8))
    assert t1.vertices == t2.vertices and t1.edges == t2.edges


def test_bundled_suite_all_pass():
    reports = run_bundled_suite(seed=0)
    assert len(reports) >= 20
    failures = [r for r in reports if not r.passed]
    assert not failures, [r.line() for r in failures]
    theorems = {r.theorem for r in reports}
    assert {"vol-is-energy", "volume-differentiability",
            "envelope-orthogonality", "h0-envelope-equality",
            "length-cocycle", "tree-monge-ampere-solvability"} <= theorems


def test_bundled_suite_is_seed_stable():
    first = [(r.theorem, r.instance, r.passed, r.exact)
             for r in run_bundled_suite(seed=3)]
    second = [(r.theorem, r.instance, r.passed, r.exact)
              for r in run_bundled_suite(seed=3)]
    assert first == second
