"""Exact toolkit for non-archimedean volumes of piecewise-linear metrics.

Submodules:
  polytope    exact rational polytopes, lattice points, volumes
  plmetric    PL metrics on a polytope, Legendre transforms, envelopes
  measures    discrete Monge-Ampere measures, mixed measures, energy
  volumes     lattice lengths of section quotients and their limits
  trees       potential theory on metric trees (Laplacian, exact solver)
  cohomology  toric surface cohomology tables and asymptotic invariants
  harness     theorem verification reports and seeded instance generators
  serialize   instance file parsing and deterministic artifact output
  cli         the `navol` command line tool
"""
from __future__ import annotations

from .errors import InstanceFormatError, PreconditionError
from .polytope import Polytope, segment, simplex, unit_box

__all__ = [
    "InstanceFormatError",
    "PreconditionError",
    "Polytope",
    "segment",
    "simplex",
    "unit_box",
]

__version__ = "0.1.0"
