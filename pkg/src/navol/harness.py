"""End-to-end verification of the four headline identities on concrete
instances: volume equals energy, one-sided differentiability of the volume,
orthogonality of the envelope, and section-space equality along the envelope.

Asymptotic statements use a split fit/verify protocol (constant fitted on one
part of the schedule, bound enforced on the rest); identities the theory makes
exact are checked with no tolerance at all. Every report stores the exact
rationals needed to re-derive its pass/fail bit.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import PreconditionError
from .measures import DiscreteMeasure, energy, monge_ampere
from .plmetric import (MetricDifference, PLMetric, canonical_metric, distance,
                       envelope, is_semipositive, legendre, metric_deform,
                       metric_shift)
from .polytope import Polytope, segment, unit_box
from .rational import ZERO, frac, frac_str
from .trees import MetricTree, curvature, ma_solve, tree_laplacian
from .volumes import VolumeResult, default_schedule, lattice_length, navol_series


@dataclass
class VerificationReport:
    theorem: str
    instance: str
    passed: bool
    exact: Dict[str, str] = field(default_factory=dict)   # name -> exact rational
    series: List[Tuple[str, ...]] = field(default_factory=list)
    runtime: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.theorem} :: {self.instance}"


def _fit_window(count: int, requested: Optional[int], default_fraction: int) -> int:
    if requested is not None:
        return max(1, min(requested, count - 1)) if count > 1 else count
    return max(1, count // default_fraction)


def verify_vol_is_energy(m1: PLMetric, m2: PLMetric,
                         schedule: Optional[Sequence[int]] = None,
                         fit_count: Optional[int] = None,
                         instance: str = "pair") -> VerificationReport:
    """Normalized lattice-length series converges to the energy of the pair of
    envelopes, with a C/m envelope fitted on the leading third of the schedule
    and enforced on the rest. For semipositive pairs this is the volume=energy
    identity; in general it is its envelope corollary."""
    start = time.monotonic()
    if schedule is None:
        schedule = default_schedule(m1.dim)
    schedule = list(schedule)
    target = energy(envelope(m1), envelope(m2))
    rows = navol_series(m1, m2, schedule)
    window = _fit_window(len(rows), fit_count, 3)
    constant = ZERO
    for row in rows[:window]:
        constant = max(constant, abs(row.normalized - target) * row.m)
    passed = all(abs(row.normalized - target) * row.m <= constant
                 for row in rows[window:])
    semi = is_semipositive(m1) and is_semipositive(m2)
    theorem = "vol-is-energy" if semi else "vol-is-energy-envelope"
    series = [("m", "length", "normalized")] + [
        (str(r.m), str(r.length), frac_str(r.normalized)) for r in rows]
    return VerificationReport(
        theorem=theorem, instance=instance, passed=passed,
        exact={"energy": frac_str(target), "fitted_constant": frac_str(constant),
               "fit_window": str(window)},
        series=series, runtime=time.monotonic() - start)


def verify_differentiability(psi: PLMetric, pos: PLMetric, neg: PLMetric,
                             eps_schedule: Sequence[Fraction],
                             fit_count: Optional[int] = None,
                             instance: str = "direction") -> VerificationReport:
    """vol(psi + eps*f, psi) = eps * integral of f against MA(psi) + O(eps^2)
    for the bounded direction f = pos - neg; the quadratic constant is fitted
    on the largest eps values and verified on the smallest."""
    start = time.monotonic()
    if not is_semipositive(psi):
        raise PreconditionError("differentiability base metric must be semipositive")
    direction = MetricDifference(pos, neg)
    mu = monge_ampere(psi)
    derivative = mu.integrate(direction.evaluate)
    eps_values = sorted({frac(e) for e in eps_schedule if frac(e) != 0},
                        reverse=True)
    if not eps_values:
        raise PreconditionError("differentiability needs a nonzero eps schedule")
    base_env = envelope(psi)
    residuals: List[Tuple[Fraction, Fraction, Fraction]] = []
    for eps in eps_values:
        deformed = metric_deform(psi, eps, pos, neg)
        vol = energy(envelope(deformed), base_env)
        residuals.append((eps, vol, abs(vol - eps * derivative)))
    window = _fit_window(len(residuals), fit_count, 2)
    constant = ZERO
    ratios = [(eps, res / (eps * eps)) for eps, _, res in residuals[:window]]
    for _, ratio in ratios:
        constant = max(constant, ratio)
    if len(ratios) >= 2:
        # The exact volume is piecewise polynomial of degree <= n+1 in eps, so
        # residual/eps^2 is affine in eps on the final linearity window.  When
        # the ratio still grows as eps shrinks, the admissible constant is the
        # eps -> 0 intercept of the line through the two smallest fitted
        # points; a wrong derivative makes the ratio grow like 1/eps, which
        # this extrapolation can never absorb.
        (ea, ra), (eb, rb) = ratios[-2], ratios[-1]
        intercept = rb + (rb - ra) * eb / (ea - eb)
        constant = max(constant, intercept)
    passed = all(res <= constant * eps * eps
                 for eps, _, res in residuals[window:])
    series = [("eps", "volume", "residual")] + [
        (frac_str(e), frac_str(v), frac_str(r)) for e, v, r in residuals]
    return VerificationReport(
        theorem="volume-differentiability", instance=instance, passed=passed,
        exact={"derivative": frac_str(derivative),
               "fitted_constant": frac_str(constant),
               "fit_window": str(window)},
        series=series, runtime=time.monotonic() - start)


def verify_orthogonality(psi: PLMetric,
                         instance: str = "metric") -> VerificationReport:
    """The gap between a metric and its envelope integrates to exactly zero
    against the Monge-Ampere measure of the envelope."""
    start = time.monotonic()
    env = envelope(psi)
    mu = monge_ampere(env)
    residual = mu.integrate(lambda v: psi.evaluate(v) - env.evaluate(v))
    return VerificationReport(
        theorem="envelope-orthogonality", instance=instance,
        passed=(residual == 0),
        exact={"residual": frac_str(residual),
               "gap_sup": frac_str(distance(psi, env)),
               "measure_mass": frac_str(mu.total_mass)},
        runtime=time.monotonic() - start)


def verify_h0_envelope_equality(psi: PLMetric,
                                schedule: Optional[Sequence[int]] = None,
                                instance: str = "metric") -> VerificationReport:
    """Lattice lengths between a metric and its envelope vanish at every
    level: the section lattices agree, hence so does the volume."""
    start = time.monotonic()
    if schedule is None:
        schedule = default_schedule(psi.dim)
    env = envelope(psi)
    lengths = [(m, lattice_length(psi, env, m)) for m in schedule]
    passed = all(length == 0 for _, length in lengths)
    series = [("m", "length")] + [(str(m), str(v)) for m, v in lengths]
    factorial = 1 if psi.dim == 1 else 2
    volume_gap = factorial * (legendre(env).integral() - legendre(psi).integral())
    passed = passed and volume_gap == 0
    return VerificationReport(
        theorem="h0-envelope-equality", instance=instance, passed=passed,
        exact={"max_abs_length": str(max((abs(v) for _, v in lengths), default=0)),
               "volume_gap": frac_str(volume_gap)},
        series=series, runtime=time.monotonic() - start)


def verify_length_cocycle(a: PLMetric, b: PLMetric, c: PLMetric,
                          schedule: Optional[Sequence[int]] = None,
                          instance: str = "triple") -> VerificationReport:
    """Lengths are antisymmetric and additive along triples at every level."""
    start = time.monotonic()
    if schedule is None:
        schedule = default_schedule(a.dim)
    passed = True
    worst = 0
    for m in schedule:
        ab = lattice_length(a, b, m)
        bc = lattice_length(b, c, m)
        ac = lattice_length(a, c, m)
        ba = lattice_length(b, a, m)
        gap = abs(ab + bc - ac) + abs(ab + ba)
        worst = max(worst, gap)
        if gap != 0:
            passed = False
    return VerificationReport(
        theorem="length-cocycle", instance=instance, passed=passed,
        exact={"max_defect": str(worst)},
        runtime=time.monotonic() - start)


# -- seeded instance generators ---------------------------------------------

def _random_constant(rng: random.Random, denom_bound: int, size: int) -> Fraction:
    den = rng.randint(1, denom_bound)
    num = rng.randint(-size * den, size * den)
    return Fraction(num, den)


def random_convex_metric(P: Polytope, rng: random.Random,
                         denom_bound: int = 4, size: int = 2) -> PLMetric:
    """Single-branch metric whose slopes are exactly the vertices of P."""
    block = [(v, _random_constant(rng, denom_bound, size)) for v in P.vertices]
    return PLMetric(P, [block])


def random_nonconvex_metric(P: Polytope, rng: random.Random,
                            branches: int = 2, denom_bound: int = 4,
                            size: int = 2) -> PLMetric:
    """Minimum of several random convex branches; usually non-convex."""
    blocks = []
    for _ in range(branches):
        blocks.append([(v, _random_constant(rng, denom_bound, size))
                       for v in P.vertices])
    return PLMetric(P, blocks)


def random_direction(P: Polytope, rng: random.Random,
                     denom_bound: int = 4) -> Tuple[PLMetric, PLMetric]:
    """Bounded deformation direction as a difference of two convex metrics."""
    pos = random_convex_metric(P, rng, denom_bound, size=1)
    neg = random_convex_metric(P, rng, denom_bound, size=1)
    return pos, neg


def random_tree(rng: random.Random, max_vertices: int = 20) -> MetricTree:
    count = rng.randint(2, max_vertices)
    names = [f"v{i}" for i in range(count)]
    edges = []
    for i in range(1, count):
        parent = names[rng.randrange(i)]
        length = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        edges.append((parent, names[i], length))
    return MetricTree(names, edges)


def random_tree_measures(tree: MetricTree, rng: random.Random
                         ) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Target and base measures with exactly matching total mass."""
    target_atoms = []
    base_atoms = []
    for v in tree.vertices:
        if rng.random() < 0.6:
            target_atoms.append((v, Fraction(rng.randint(-6, 6), rng.randint(1, 3))))
        if rng.random() < 0.4:
            base_atoms.append((v, Fraction(rng.randint(-4, 4), rng.randint(1, 3))))
    target = DiscreteMeasure(target_atoms)
    base = DiscreteMeasure(base_atoms)
    correction = target.total_mass - base.total_mass
    base = DiscreteMeasure(list(base.atoms.items()) + [(tree.root, correction)])
    return target, base


def verify_tree_solvability(tree: MetricTree, target: DiscreteMeasure,
                            base: DiscreteMeasure,
                            instance: str = "tree") -> VerificationReport:
    """Curvature of the solved potential reproduces the target measure."""
    start = time.monotonic()
    phi = ma_solve(tree, target, base)
    recovered = curvature(tree, base, phi)
    defect = DiscreteMeasure(
        list(recovered.atoms.items())
        + [(k, -v) for k, v in target.atoms.items()])
    laplacian_mass = tree_laplacian(tree, phi).total_mass
    passed = (not defect.atoms) and laplacian_mass == 0
    return VerificationReport(
        theorem="tree-monge-ampere-solvability", instance=instance, passed=passed,
        exact={"defect_atoms": str(len(defect.atoms)),
               "laplacian_mass": frac_str(laplacian_mass),
               "vertices": str(len(tree.vertices))},
        runtime=time.monotonic() - start)


# -- bundled suite -----------------------------------------------------------

def tent_metric(P: Polytope) -> PLMetric:
    return PLMetric(P, [[((ZERO,), ZERO),
                         ((Fraction(1, 2),), Fraction(1, 2)),
                         ((Fraction(1),), ZERO)]])


def bump_metric(P: Polytope) -> PLMetric:
    return PLMetric(P, [
        [((ZERO,), ZERO), ((Fraction(3, 4),), Fraction(3, 4)), ((Fraction(1),), ZERO)],
        [((ZERO,), ZERO), ((Fraction(1, 4),), Fraction(3, 4)), ((Fraction(1),), ZERO)],
    ])


def tent_direction(P: Polytope) -> Tuple[PLMetric, PLMetric]:
    pos = PLMetric(P, [[((ZERO,), ZERO),
                        ((Fraction(1, 2),), Fraction(1, 2)),
                        ((Fraction(1),), ZERO)]])
    neg = canonical_metric(P)
    return pos, neg


def run_bundled_suite(seed: int = 0) -> List[VerificationReport]:
    """The instance suite behind `verify-all`: bundled named instances plus a
    deterministic seeded batch per theorem."""
    rng = random.Random(seed)
    seg = segment(0, 1)
    box = unit_box(2)
    reports: List[VerificationReport] = []

    tent = tent_metric(seg)
    can1 = canonical_metric(seg)
    reports.append(verify_vol_is_energy(tent, can1, instance="tent"))
    can2 = canonical_metric(box)
    reports.append(verify_vol_is_energy(metric_shift(can2, 1), can2,
                                        instance="square-shift"))
    for i in range(3):
        pair = (random_convex_metric(seg, rng), random_convex_metric(seg, rng))
        reports.append(verify_vol_is_energy(*pair, instance=f"seg-convex-{i}"))
    for i in range(2):
        pair = (random_convex_metric(box, rng), random_convex_metric(box, rng))
        reports.append(verify_vol_is_energy(*pair, instance=f"box-convex-{i}"))

    pos, neg = tent_direction(seg)
    eps = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8),
           Fraction(1, 16), Fraction(1, 32)]
    reports.append(verify_differentiability(can1, pos, neg, eps,
                                            instance="tent-direction"))

    reports.append(verify_orthogonality(bump_metric(seg),
                                        instance="bump"))
    for i in range(3):
        psi = random_nonconvex_metric(seg, rng)
        reports.append(verify_orthogonality(psi, instance=f"seg-nonconvex-{i}"))
    for i in range(2):
        psi = random_nonconvex_metric(box, rng)
        reports.append(verify_orthogonality(psi, instance=f"box-nonconvex-{i}"))

    reports.append(verify_h0_envelope_equality(
        bump_metric(seg), schedule=list(range(1, 26)),
        instance="bump"))
    for i in range(2):
        psi = random_nonconvex_metric(seg, rng)
        reports.append(verify_h0_envelope_equality(
            psi, schedule=list(range(1, 26)), instance=f"seg-nonconvex-{i}"))

    triple = [random_convex_metric(seg, rng) for _ in range(2)]
    triple.append(random_nonconvex_metric(seg, rng))
    reports.append(verify_length_cocycle(*triple, instance="seeded-triple"))

    for i in range(3):
        tree = random_tree(rng, max_vertices=12)
        target, base = random_tree_measures(tree, rng)
        reports.append(verify_tree_solvability(tree, target, base,
                                               instance=f"tree-{i}"))
    return reports
