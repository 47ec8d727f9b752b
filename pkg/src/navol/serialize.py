"""Instance files and tabular artifacts.

Instances are JSON objects with a required ``kind`` tag:

* ``toric``: a polytope (vertex list) plus named piecewise-linear metrics,
  each either the literal string ``"canonical"`` or a list of blocks, every
  block a list of ``{"slope": [...], "constant": ...}`` pieces (the metric is
  the minimum over blocks of the maximum over pieces).
* ``tree``: a metric tree (vertices, edges with positive rational lengths,
  optional root) plus named vertex functions and named measures.
* ``surface``: a toric surface family name, named rational divisors (lists of
  ``{"coeff": ..., "class": [...]}`` decomposition terms), and optional scan
  parameters.

All rationals are written as ``"p/q"`` strings (or plain JSON integers);
decimal literals are refused so floats can never contaminate exact data.
Unknown fields are rejected with their full path.  Serialization emits a
normalized form — explicit blocks, reduced fractions, canonical vertex order —
and is idempotent after that one normalization pass.

Artifact writers keep CSV bodies byte-deterministic: the only
run-dependent line is a leading ``#`` comment carrying the timestamp.
"""
from __future__ import annotations

import datetime
import io
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .cohomology import RealDivisor, ToricFamily, toric_family
from .errors import InstanceFormatError, PreconditionError
from .measures import DiscreteMeasure
from .plmetric import PLMetric, canonical_metric
from .polytope import Polytope
from .rational import frac, frac_str
from .trees import MetricTree, TreeFunction


# ---------------------------------------------------------------------------
# strict JSON loading


class _FloatLiteral(str):
    """Marker for decimal literals so validators can refuse them."""


def _loads(text: str, origin: str) -> object:
    def bad_constant(name: str):
        raise InstanceFormatError(f"{origin}: non-finite number {name!r}")

    try:
        return json.loads(text, parse_float=_FloatLiteral,
                          parse_constant=bad_constant)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{origin}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None


# ---------------------------------------------------------------------------
# schema helpers (every validator takes the value and its field path)


def _as_object(value, path: str) -> Dict[str, object]:
    if not isinstance(value, dict):
        raise InstanceFormatError(f"{path}: expected an object")
    return value


def _as_array(value, path: str) -> List[object]:
    if not isinstance(value, list):
        raise InstanceFormatError(f"{path}: expected an array")
    return value


def _as_string(value, path: str) -> str:
    if isinstance(value, _FloatLiteral) or not isinstance(value, str):
        raise InstanceFormatError(f"{path}: expected a string")
    return value


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{path}: expected an integer")
    return value


def _as_rational(value, path: str) -> Fraction:
    if isinstance(value, _FloatLiteral):
        raise InstanceFormatError(
            f"{path}: decimal literal {value!r} is not exact; "
            "write rationals as 'p/q' strings")
    if isinstance(value, bool):
        raise InstanceFormatError(f"{path}: expected a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        if "." in value or "e" in value or "E" in value:
            raise InstanceFormatError(
                f"{path}: decimal notation {value!r} is not accepted; "
                "write rationals as 'p/q' strings")
        try:
            return frac(value)
        except ValueError as exc:
            raise InstanceFormatError(f"{path}: {exc}") from None
    raise InstanceFormatError(
        f"{path}: expected a rational as integer or 'p/q' string")


def _check_keys(obj: Dict[str, object], path: str,
                required: Sequence[str], optional: Sequence[str] = ()) -> None:
    for key in obj:
        if key not in required and key not in optional:
            raise InstanceFormatError(f"{path}.{key}: unknown field")
    for key in required:
        if key not in obj:
            raise InstanceFormatError(f"{path}: missing required field {key!r}")


def _as_point(value, path: str) -> Tuple[Fraction, ...]:
    arr = _as_array(value, path)
    if not arr:
        raise InstanceFormatError(f"{path}: a point needs coordinates")
    return tuple(_as_rational(c, f"{path}[{i}]") for i, c in enumerate(arr))


# ---------------------------------------------------------------------------
# instance containers


@dataclass
class ToricInstance:
    name: str
    polytope: Polytope
    metrics: Dict[str, PLMetric]
    canonical_names: Tuple[str, ...]
    schedule: Optional[List[int]] = None
    eps_schedule: Optional[List[Fraction]] = None
    seed: Optional[int] = None
    kind: str = field(default="toric", init=False)

    def metric(self, name: str, command: str) -> PLMetric:
        if name not in self.metrics:
            have = ", ".join(sorted(self.metrics)) or "none"
            raise PreconditionError(
                f"command {command!r} needs a metric named {name!r} "
                f"(instance has: {have})")
        return self.metrics[name]

    def single_metric(self, command: str) -> PLMetric:
        if "psi" in self.metrics:
            return self.metrics["psi"]
        non_canonical = [n for n in self.metrics if n not in self.canonical_names]
        if len(non_canonical) == 1:
            return self.metrics[non_canonical[0]]
        if len(self.metrics) == 1:
            return next(iter(self.metrics.values()))
        return self.metric("psi", command)

    def metric_pair(self, command: str) -> Tuple[PLMetric, PLMetric]:
        first = self.metric("psi1", command)
        if "psi2" in self.metrics:
            return first, self.metrics["psi2"]
        return first, self.metric("canonical", command)


@dataclass
class TreeInstance:
    name: str
    tree: MetricTree
    functions: Dict[str, TreeFunction]
    measures: Dict[str, DiscreteMeasure]
    seed: Optional[int] = None
    kind: str = field(default="tree", init=False)

    def measure(self, name: str, command: str) -> DiscreteMeasure:
        if name not in self.measures:
            have = ", ".join(sorted(self.measures)) or "none"
            raise PreconditionError(
                f"command {command!r} needs a measure named {name!r} "
                f"(instance has: {have})")
        return self.measures[name]


@dataclass
class ScanParams:
    d_names: List[str]
    p_names: List[str]
    q: int
    grid_max: int


@dataclass
class SurfaceInstance:
    name: str
    family: ToricFamily
    divisors: Dict[str, RealDivisor]
    schedule: Optional[List[int]] = None
    q: Optional[int] = None
    scan: Optional[ScanParams] = None
    seed: Optional[int] = None
    kind: str = field(default="surface", init=False)

    def divisor(self, name: str, command: str) -> RealDivisor:
        if name not in self.divisors:
            have = ", ".join(sorted(self.divisors)) or "none"
            raise PreconditionError(
                f"command {command!r} needs a divisor named {name!r} "
                f"(instance has: {have})")
        return self.divisors[name]


Instance = Union[ToricInstance, TreeInstance, SurfaceInstance]


# ---------------------------------------------------------------------------
# parsing


def _parse_schedule(value, path: str) -> List[int]:
    arr = _as_array(value, path)
    out = []
    for i, entry in enumerate(arr):
        m = _as_int(entry, f"{path}[{i}]")
        if m < 1:
            raise InstanceFormatError(f"{path}[{i}]: schedule entries are >= 1")
        out.append(m)
    if not out:
        raise InstanceFormatError(f"{path}: schedule must be nonempty")
    return out


def _parse_metric(value, path: str, P: Polytope, name: str) -> PLMetric:
    if isinstance(value, str) and not isinstance(value, _FloatLiteral):
        if value != "canonical":
            raise InstanceFormatError(
                f"{path}: metric shorthand must be 'canonical'")
        return canonical_metric(P)
    blocks_raw = _as_array(value, path)
    if not blocks_raw:
        raise InstanceFormatError(f"{path}: a metric needs at least one block")
    blocks = []
    for bi, block_raw in enumerate(blocks_raw):
        pieces_raw = _as_array(block_raw, f"{path}[{bi}]")
        if not pieces_raw:
            raise InstanceFormatError(
                f"{path}[{bi}]: a block needs at least one piece")
        pieces = []
        for pi, piece_raw in enumerate(pieces_raw):
            ppath = f"{path}[{bi}][{pi}]"
            obj = _as_object(piece_raw, ppath)
            _check_keys(obj, ppath, required=("slope", "constant"))
            slope = _as_point(obj["slope"], f"{ppath}.slope")
            if len(slope) != P.ambient_dim:
                raise InstanceFormatError(
                    f"{ppath}.slope: needs {P.ambient_dim} coordinates")
            const = _as_rational(obj["constant"], f"{ppath}.constant")
            pieces.append((slope, const))
        blocks.append(pieces)
    try:
        return PLMetric(P, blocks)
    except PreconditionError as exc:
        raise PreconditionError(f"metric {name!r}: {exc}") from None


def _parse_toric(obj: Dict[str, object], name: str) -> ToricInstance:
    _check_keys(obj, name, required=("kind", "polytope", "metrics"),
                optional=("schedule", "eps_schedule", "seed"))
    verts_raw = _as_array(obj["polytope"], f"{name}.polytope")
    if not verts_raw:
        raise InstanceFormatError(f"{name}.polytope: needs at least one vertex")
    verts = [_as_point(v, f"{name}.polytope[{i}]")
             for i, v in enumerate(verts_raw)]
    if len({len(v) for v in verts}) != 1:
        raise InstanceFormatError(f"{name}.polytope: points of mixed dimension")
    try:
        P = Polytope.from_points(verts)
    except PreconditionError as exc:
        raise InstanceFormatError(f"{name}.polytope: {exc}") from None
    metrics_obj = _as_object(obj["metrics"], f"{name}.metrics")
    metrics: Dict[str, PLMetric] = {}
    canonical_names = []
    for mname, mval in metrics_obj.items():
        metrics[mname] = _parse_metric(mval, f"{name}.metrics.{mname}", P, mname)
        if isinstance(mval, str) and not isinstance(mval, _FloatLiteral):
            canonical_names.append(mname)
    schedule = (_parse_schedule(obj["schedule"], f"{name}.schedule")
                if "schedule" in obj else None)
    eps = None
    if "eps_schedule" in obj:
        arr = _as_array(obj["eps_schedule"], f"{name}.eps_schedule")
        eps = [_as_rational(e, f"{name}.eps_schedule[{i}]")
               for i, e in enumerate(arr)]
    seed = _as_int(obj["seed"], f"{name}.seed") if "seed" in obj else None
    return ToricInstance(name=name, polytope=P, metrics=metrics,
                         canonical_names=tuple(canonical_names),
                         schedule=schedule, eps_schedule=eps, seed=seed)


def _parse_tree(obj: Dict[str, object], name: str) -> TreeInstance:
    _check_keys(obj, name, required=("kind", "tree"),
                optional=("functions", "measures", "seed"))
    tobj = _as_object(obj["tree"], f"{name}.tree")
    _check_keys(tobj, f"{name}.tree", required=("vertices", "edges"),
                optional=("root",))
    verts = [_as_string(v, f"{name}.tree.vertices[{i}]")
             for i, v in enumerate(_as_array(tobj["vertices"],
                                             f"{name}.tree.vertices"))]
    edges = []
    for i, eraw in enumerate(_as_array(tobj["edges"], f"{name}.tree.edges")):
        epath = f"{name}.tree.edges[{i}]"
        eobj = _as_object(eraw, epath)
        _check_keys(eobj, epath, required=("ends", "length"))
        ends = _as_array(eobj["ends"], f"{epath}.ends")
        if len(ends) != 2:
            raise InstanceFormatError(f"{epath}.ends: exactly two endpoints")
        u = _as_string(ends[0], f"{epath}.ends[0]")
        v = _as_string(ends[1], f"{epath}.ends[1]")
        edges.append((u, v, _as_rational(eobj["length"], f"{epath}.length")))
    root = (_as_string(tobj["root"], f"{name}.tree.root")
            if "root" in tobj else None)
    try:
        tree = MetricTree(verts, edges, root=root)
    except PreconditionError as exc:
        raise InstanceFormatError(f"{name}.tree: {exc}") from None
    functions: Dict[str, TreeFunction] = {}
    if "functions" in obj:
        fobj = _as_object(obj["functions"], f"{name}.functions")
        for fname, fval in fobj.items():
            fpath = f"{name}.functions.{fname}"
            values = {}
            for vertex, val in _as_object(fval, fpath).items():
                if vertex not in tree.adjacency:
                    raise InstanceFormatError(
                        f"{fpath}.{vertex}: unknown vertex")
                values[vertex] = _as_rational(val, f"{fpath}.{vertex}")
            missing = [v for v in tree.vertices if v not in values]
            if missing:
                raise InstanceFormatError(
                    f"{fpath}: missing value for vertex {missing[0]!r}")
            functions[fname] = TreeFunction(values)
    measures: Dict[str, DiscreteMeasure] = {}
    if "measures" in obj:
        mobj = _as_object(obj["measures"], f"{name}.measures")
        for mname, mval in mobj.items():
            mpath = f"{name}.measures.{mname}"
            atoms = []
            for i, araw in enumerate(_as_array(mval, mpath)):
                apath = f"{mpath}[{i}]"
                aobj = _as_object(araw, apath)
                _check_keys(aobj, apath, required=("vertex", "mass"))
                vertex = _as_string(aobj["vertex"], f"{apath}.vertex")
                if vertex not in tree.adjacency:
                    raise InstanceFormatError(f"{apath}.vertex: unknown vertex")
                atoms.append((vertex, _as_rational(aobj["mass"],
                                                   f"{apath}.mass")))
            measures[mname] = DiscreteMeasure(atoms)
    seed = _as_int(obj["seed"], f"{name}.seed") if "seed" in obj else None
    return TreeInstance(name=name, tree=tree, functions=functions,
                        measures=measures, seed=seed)


def _parse_surface(obj: Dict[str, object], name: str) -> SurfaceInstance:
    _check_keys(obj, name, required=("kind", "family", "divisors"),
                optional=("schedule", "q", "scan", "seed"))
    fam_name = _as_string(obj["family"], f"{name}.family")
    try:
        family = toric_family(fam_name)
    except PreconditionError as exc:
        raise InstanceFormatError(f"{name}.family: {exc}") from None
    divisors: Dict[str, RealDivisor] = {}
    for dname, dval in _as_object(obj["divisors"], f"{name}.divisors").items():
        dpath = f"{name}.divisors.{dname}"
        terms = []
        for i, traw in enumerate(_as_array(dval, dpath)):
            tpath = f"{dpath}[{i}]"
            tobj = _as_object(traw, tpath)
            _check_keys(tobj, tpath, required=("coeff", "class"))
            coeff = _as_rational(tobj["coeff"], f"{tpath}.coeff")
            cls_arr = _as_array(tobj["class"], f"{tpath}.class")
            cls = [_as_int(c, f"{tpath}.class[{j}]")
                   for j, c in enumerate(cls_arr)]
            terms.append((coeff, cls))
        try:
            divisors[dname] = RealDivisor.make(family, terms)
        except PreconditionError as exc:
            raise InstanceFormatError(f"{dpath}: {exc}") from None
    schedule = (_parse_schedule(obj["schedule"], f"{name}.schedule")
                if "schedule" in obj else None)
    q = None
    if "q" in obj:
        q = _as_int(obj["q"], f"{name}.q")
        if not 0 <= q <= family.dim:
            raise InstanceFormatError(
                f"{name}.q: must be between 0 and {family.dim}")
    scan = None
    if "scan" in obj:
        spath = f"{name}.scan"
        sobj = _as_object(obj["scan"], spath)
        _check_keys(sobj, spath, required=("d", "p", "q", "grid_max"))
        d_names = [_as_string(x, f"{spath}.d[{i}]")
                   for i, x in enumerate(_as_array(sobj["d"], f"{spath}.d"))]
        p_names = [_as_string(x, f"{spath}.p[{i}]")
                   for i, x in enumerate(_as_array(sobj["p"], f"{spath}.p"))]
        for ref in d_names + p_names:
            if ref not in divisors:
                raise InstanceFormatError(
                    f"{spath}: references unknown divisor {ref!r}")
        sq = _as_int(sobj["q"], f"{spath}.q")
        if not 0 <= sq <= family.dim:
            raise InstanceFormatError(
                f"{spath}.q: must be between 0 and {family.dim}")
        grid_max = _as_int(sobj["grid_max"], f"{spath}.grid_max")
        if grid_max < 2:
            raise InstanceFormatError(f"{spath}.grid_max: must be >= 2")
        scan = ScanParams(d_names, p_names, sq, grid_max)
    seed = _as_int(obj["seed"], f"{name}.seed") if "seed" in obj else None
    return SurfaceInstance(name=name, family=family, divisors=divisors,
                           schedule=schedule, q=q, scan=scan, seed=seed)


def parse_instance_text(text: str, origin: str = "<instance>") -> Instance:
    data = _loads(text, origin)
    obj = _as_object(data, origin)
    if "kind" not in obj:
        raise InstanceFormatError(f"{origin}: missing required field 'kind'")
    kind = _as_string(obj["kind"], f"{origin}.kind")
    if kind == "toric":
        return _parse_toric(obj, origin)
    if kind == "tree":
        return _parse_tree(obj, origin)
    if kind == "surface":
        return _parse_surface(obj, origin)
    raise InstanceFormatError(
        f"{origin}.kind: unknown kind {kind!r} (expected toric, tree or surface)")


def parse_instance(path: str) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise InstanceFormatError(f"{path}: {exc.strerror or exc}") from None
    return parse_instance_text(text, origin=os.path.basename(path))


# ---------------------------------------------------------------------------
# serialization (normalized form)


def _rat_out(x: Fraction) -> Union[int, str]:
    x = Fraction(x)
    return int(x) if x.denominator == 1 else frac_str(x)


def _metric_out(metric: PLMetric) -> List[List[Dict[str, object]]]:
    return [[{"slope": [_rat_out(c) for c in slope],
              "constant": _rat_out(const)}
             for slope, const in block]
            for block in metric.blocks]


def serialize_instance(inst: Instance) -> Dict[str, object]:
    """Normalized JSON form; parse -> serialize is idempotent afterwards."""
    if isinstance(inst, ToricInstance):
        out: Dict[str, object] = {
            "kind": "toric",
            "polytope": [[_rat_out(c) for c in v]
                         for v in inst.polytope.vertices],
            "metrics": {name: _metric_out(metric)
                        for name, metric in inst.metrics.items()},
        }
        if inst.schedule is not None:
            out["schedule"] = list(inst.schedule)
        if inst.eps_schedule is not None:
            out["eps_schedule"] = [_rat_out(e) for e in inst.eps_schedule]
        if inst.seed is not None:
            out["seed"] = inst.seed
        return out
    if isinstance(inst, TreeInstance):
        out = {
            "kind": "tree",
            "tree": {
                "vertices": list(inst.tree.vertices),
                "edges": [{"ends": [u, v], "length": _rat_out(length)}
                          for u, v, length in inst.tree.edges],
                "root": inst.tree.root,
            },
        }
        if inst.functions:
            out["functions"] = {
                name: {v: _rat_out(fn.values[v]) for v in inst.tree.vertices}
                for name, fn in inst.functions.items()}
        if inst.measures:
            out["measures"] = {
                name: [{"vertex": k, "mass": _rat_out(mass)}
                       for k, mass in measure.items_sorted()]
                for name, measure in inst.measures.items()}
        if inst.seed is not None:
            out["seed"] = inst.seed
        return out
    if isinstance(inst, SurfaceInstance):
        out = {
            "kind": "surface",
            "family": inst.family.name,
            "divisors": {
                name: [{"coeff": _rat_out(coeff), "class": list(cls)}
                       for coeff, cls in div.terms]
                for name, div in inst.divisors.items()},
        }
        if inst.schedule is not None:
            out["schedule"] = list(inst.schedule)
        if inst.q is not None:
            out["q"] = inst.q
        if inst.scan is not None:
            out["scan"] = {"d": list(inst.scan.d_names),
                           "p": list(inst.scan.p_names),
                           "q": inst.scan.q,
                           "grid_max": inst.scan.grid_max}
        if inst.seed is not None:
            out["seed"] = inst.seed
        return out
    raise TypeError(f"not an instance: {inst!r}")


def instance_json(inst: Instance) -> str:
    return json.dumps(serialize_instance(inst), indent=2) + "\n"


# ---------------------------------------------------------------------------
# artifact writers


def decimal_str(x: Fraction, places: int = 12) -> str:
    """Fixed-point decimal rendering of an exact rational (reports only)."""
    x = Fraction(x)
    sign = "-" if x < 0 else ""
    x = abs(x)
    scaled = x * 10 ** places
    units = scaled.numerator // scaled.denominator
    if 2 * (scaled - units) >= 1:
        units += 1
    whole, fracpart = divmod(units, 10 ** places)
    digits = f"{fracpart:0{places}d}".rstrip("0") or "0"
    return f"{sign}{whole}.{digits}"


def csv_text(header: Sequence[str], rows: Sequence[Sequence[object]],
             timestamp: Optional[str] = None) -> str:
    """CSV with a single leading comment line; the body below it is
    deterministic for identical inputs."""
    import csv as _csv

    buf = io.StringIO()
    stamp = timestamp if timestamp is not None else (
        datetime.datetime.now(datetime.timezone.utc).isoformat())
    buf.write(f"# generated {stamp}\n")
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([str(cell) for cell in row])
    return buf.getvalue()


def write_text(out_dir: str, filename: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    return path


def write_json(out_dir: str, filename: str, payload: object) -> str:
    return write_text(out_dir, filename, json.dumps(payload, indent=2) + "\n")
