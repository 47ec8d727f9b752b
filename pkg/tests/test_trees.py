"""Potential theory on metric trees: Laplacians, curvature, exact solving."""

import random
from fractions import Fraction

import pytest

from navol.errors import PreconditionError
from navol.harness import random_tree, random_tree_measures
from navol.measures import DiscreteMeasure
from navol.trees import (MetricTree, TreeFunction, curvature,
                         extend_to_subdivision, ma_solve, tree_laplacian)

F = Fraction


def _star():
    return MetricTree(["r", "a", "b", "c"],
                      [("r", "a", F(1)), ("r", "b", F(1, 2)), ("r", "c", F(2))])


def _laplacian_oracle(tree, f):
    atoms = {}
    for v in tree.vertices:
        acc = F(0)
        for w, length in tree.adjacency[v]:
            acc += (f(w) - f(v)) / length
        if acc != 0:
            atoms[v] = acc
    return atoms


def test_star_solve_frozen_solution():
    tree = _star()
    target = DiscreteMeasure([("a", F(1)), ("b", F(1)), ("c", F(1))])
    base = DiscreteMeasure([("r", F(3))])
    phi = ma_solve(tree, target, base)
    assert phi("r") == 0
    assert phi("a") == -1
    assert phi("b") == F(-1, 2)
    assert phi("c") == -2
    assert curvature(tree, base, phi) == target


def test_laplacian_matches_direct_formula():
    rng = random.Random(410)
    for _ in range(15):
        tree = random_tree(rng, max_vertices=14)
        f = TreeFunction({v: F(rng.randint(-9, 9), rng.randint(1, 4))
                          for v in tree.vertices})
        lap = tree_laplacian(tree, f)
        assert lap.atoms == _laplacian_oracle(tree, f)
        assert lap.total_mass == 0


def test_laplacian_is_linear_and_kills_constants():
    rng = random.Random(411)
    tree = random_tree(rng, max_vertices=10)
    f = TreeFunction({v: F(rng.randint(-5, 5)) for v in tree.vertices})
    g = TreeFunction({v: F(rng.randint(-5, 5), 2) for v in tree.vertices})
    const = TreeFunction({v: F(7, 3) for v in tree.vertices})
    assert tree_laplacian(tree, const).atoms == {}
    fg = TreeFunction({v: f(v) + g(v) for v in tree.vertices})
    summed = DiscreteMeasure(
        list(tree_laplacian(tree, f).atoms.items())
        + list(tree_laplacian(tree, g).atoms.items()))
    assert tree_laplacian(tree, fg) == summed


def test_solve_roundtrip_on_seeded_trees():
    rng = random.Random(412)
    for _ in range(15):
        tree = random_tree(rng)
        target, base = random_tree_measures(tree, rng)
        phi = ma_solve(tree, target, base)
        assert phi(tree.root) == 0
        assert curvature(tree, base, phi) == target


def test_solve_rejects_mass_mismatch():
    tree = _star()
    target = DiscreteMeasure([("a", F(2))])
    base = DiscreteMeasure([("r", F(1))])
    with pytest.raises(PreconditionError):
        ma_solve(tree, target, base)


def test_solve_rejects_atoms_off_the_tree():
    tree = _star()
    target = DiscreteMeasure([("nope", F(1))])
    base = DiscreteMeasure([("r", F(1))])
    with pytest.raises(PreconditionError):
        ma_solve(tree, target, base)


def test_subdivision_preserves_curvature():
    tree = _star()
    target = DiscreteMeasure([("a", F(1)), ("b", F(1)), ("c", F(1))])
    base = DiscreteMeasure([("r", F(3))])
    phi = ma_solve(tree, target, base)
    fine = tree.with_subdivided_edge("r", "c", "mid", F(1, 4))
    phi_fine = extend_to_subdivision(tree, fine, phi, "mid", "r", "c", F(1, 4))
    assert phi_fine("mid") == phi("r") + (phi("c") - phi("r")) * F(1, 4)
    assert curvature(fine, base, phi_fine) == target
    assert tree_laplacian(fine, phi_fine).atoms.get("mid") is None


def test_tree_requires_connected_acyclic_input():
    with pytest.raises(PreconditionError):
        MetricTree(["a", "b", "c"], [("a", "b", F(1))])  # c unreachable
    with pytest.raises(PreconditionError):
        MetricTree(["a", "b", "c"],
                   [("a", "b", F(1)), ("b", "c", F(1)), ("c", "a", F(1))])
    with pytest.raises(PreconditionError):
        MetricTree(["a", "b"], [("a", "b", F(0))])  # zero-length edge
