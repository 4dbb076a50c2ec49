"""Batch front end: ``fitzcalc run <spec.yaml> --out <dir>``.

A problem file is YAML with four named sections and an ordered task list::

    operators:
      g:   {kind: finite-graph, points: [[0, 0], [1, 1]]}   # rows (x..., x*...)
      A:   {kind: identity, dim: 2}
      B:   {kind: skew, B: [[0, -1], [1, 0]]}
      AB:  {kind: sum, left: A, right: B}
      I:   {kind: identity}
      S:   {kind: sampled, of: I, probe: box, drop: [[0.5, 0.5]]}
    maps:
      L:   {matrix: [[1], [1]]}
    sets:
      U:   {vertices: [[0, 0], [1, 0]]}
      C:   {G: [[1, 0], [-1, 0]], c: [1, 0]}
    probes:
      box: {lo: [0, 0], hi: [1, 1], resolution: 0.5}
    tasks:
      - {verb: monotone, operands: [g]}
      - {verb: sample-surface, operands: [g], probe: box}

The report is ``<out>/report.yaml``; ``sample-surface`` tasks write
``<out>/<task id>.csv``. Exit status: 0 when every task passes, 1 on any
``FAILS``/``ERROR``, 2 when the worst outcome is ``POSSIBLE_FAIL``, 64 for a
malformed problem file and 65 for a name that does not resolve.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
import time
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from .calculus import (chain_representative_value, convex_graph_chain_check, infconv2_value,
                       precompose, skew_shift_identity_check, sum_operator)
from .operators import (AffineMonotone, FiniteGraph, LinearMapRep, NormalCone, OperatorRep,
                        Precomp, Product, SkewLinear, SubdiffPL, Sum, abs_subdiff,
                        discretize_graph, identity_map, is_monotone_finite, l1_subdiff,
                        maximality_probe)
from .pairing import pairing_rows
from .polytope import GenPolytope
from .probe import DEFAULT_RESOLUTION, DEFAULT_TOL, BoxProbe
from .qualification import (ConvexSetRep, difference_map_equivalence, domain_invariance_check,
                            interiority_checks, linear_closedness_check, ncone_chain_check,
                            ncone_sum_check, qualification_chain, qualification_sum)
from .reports import CheckReport, Verdict
from .representatives import (RepFunction, RepKind, extension_on_grid, fitzpatrick_rows,
                              maximality_certificate, ni_probe, representability_probe)

EXIT_OK, EXIT_FAIL, EXIT_POSSIBLE = 0, 1, 2
EXIT_PARSE, EXIT_UNRESOLVED = 64, 65


class SpecError(Exception):
    def __init__(self, code: int, message: str, mark=None):
        super().__init__(message)
        self.code = code
        self.mark = mark

    def located(self, path: str) -> str:
        if self.mark is None:
            return f"{path}: {self}"
        return f"{path}:{self.mark.line + 1}:{self.mark.column + 1}: {self}"


# -- loading ------------------------------------------------------------------

class _Map(dict):
    mark = None


class _Seq(list):
    mark = None


class _Loader(yaml.SafeLoader):
    """Safe loader that remembers node positions and reads ``1e-9`` as a float."""


def _construct_map(loader, node):
    out = _Map(loader.construct_mapping(node, deep=True))
    out.mark = node.start_mark
    return out


def _construct_seq(loader, node):
    out = _Seq(loader.construct_sequence(node, deep=True))
    out.mark = node.start_mark
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?[0-9][0-9_]*(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"))


def load_spec(text: str) -> _Map:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise SpecError(EXIT_PARSE, getattr(exc, "problem", None) or str(exc),
                        getattr(exc, "problem_mark", None)) from None
    if not isinstance(data, dict):
        raise SpecError(EXIT_PARSE, "problem file must be a mapping")
    unknown = set(data) - {"operators", "maps", "sets", "probes", "tasks"}
    if unknown:
        raise SpecError(EXIT_PARSE, f"unknown section(s) {sorted(unknown)}", data.mark)
    return data


def _mark(node, fallback=None):
    return getattr(node, "mark", None) or fallback


def _field(node: dict, key: str, default: Any = ...):
    if key in node:
        return node[key]
    if default is ...:
        raise SpecError(EXIT_PARSE, f"missing field {key!r}", _mark(node))
    return default


def _array(node: dict, key: str, default: Any = ...) -> np.ndarray:
    raw = _field(node, key, default)
    try:
        return np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise SpecError(EXIT_PARSE, f"field {key!r} must be numeric", _mark(raw, _mark(node)))


def _number(node: dict, key: str, default: Any = ...) -> float:
    raw = _field(node, key, default)
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise SpecError(EXIT_PARSE, f"field {key!r} must be a number", _mark(node))


# -- resolving names ----------------------------------------------------------

class Problem:
    """Named objects of a problem file, built lazily with cycle detection."""

    def __init__(self, data: dict, resolution: Optional[float] = None,
                 tol: Optional[float] = None, seed: int = 0):
        self.data = data
        self.resolution = resolution
        self.tol = tol
        self.seed = seed
        self._built: dict[tuple[str, str], Any] = {}
        self._building: set[tuple[str, str]] = set()

    def _section(self, section: str) -> dict:
        sec = self.data.get(section) or {}
        if not isinstance(sec, dict):
            raise SpecError(EXIT_PARSE, f"section {section!r} must be a mapping", _mark(sec))
        return sec

    def get(self, section: str, name, mark=None):
        key = (section, str(name))
        if key in self._built:
            return self._built[key]
        sec = self._section(section)
        if name not in sec:
            raise SpecError(EXIT_UNRESOLVED, f"no {section[:-1]} named {name!r}", mark)
        if key in self._building:
            raise SpecError(EXIT_PARSE, f"{section[:-1]} {name!r} refers to itself", mark)
        node = sec[name]
        if not isinstance(node, dict):
            raise SpecError(EXIT_PARSE, f"{section[:-1]} {name!r} must be a mapping", mark)
        self._building.add(key)
        try:
            obj = getattr(self, "_build_" + section)(node)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SpecError(EXIT_PARSE, f"{section[:-1]} {name!r}: {exc}", _mark(node)) from None
        finally:
            self._building.discard(key)
        self._built[key] = obj
        return obj

    def _build_operators(self, node: dict) -> OperatorRep:
        kind = _field(node, "kind")
        ref = lambda key, section="operators": self.get(section, _field(node, key), _mark(node))
        if kind == "finite-graph":
            return FiniteGraph.from_array(_array(node, "points"))
        if kind == "identity":
            return identity_map(int(_field(node, "dim", 1)))
        if kind == "affine":
            q = node.get("q")
            return AffineMonotone(_array(node, "M"), None if q is None else _array(node, "q"))
        if kind == "skew":
            return SkewLinear(_array(node, "B"))
        if kind == "subdiff-pl":
            return SubdiffPL(_array(node, "slopes"), _array(node, "offsets"))
        if kind == "abs":
            return abs_subdiff()
        if kind == "l1":
            return l1_subdiff(int(_field(node, "dim")))
        if kind == "normal-cone":
            if "interval" in node:
                a, b = _array(node, "interval")
                return NormalCone.interval(a, b)
            if "lo" in node:
                return NormalCone.box(_array(node, "lo"), _array(node, "hi"))
            return NormalCone(_array(node, "G"), _array(node, "c"))
        if kind == "sum":
            return Sum(ref("left"), ref("right"))
        if kind == "product":
            return Product(ref("left"), ref("right"))
        if kind == "precomp":
            return Precomp(ref("map", "maps"), ref("inner"))
        if kind == "sampled":
            g = discretize_graph(ref("of"), ref("probe", "probes"))
            if "drop" not in node:
                return g
            drop = np.atleast_2d(_array(node, "drop"))
            A = g.as_array()
            keep = np.all(np.abs(A[:, None, :] - drop[None, :, :]).max(axis=2) > 1e-9, axis=1)
            return FiniteGraph.from_array(A[keep])
        raise SpecError(EXIT_PARSE, f"unknown operator kind {kind!r}", _mark(node))

    def _build_maps(self, node: dict) -> LinearMapRep:
        if "diagonal" in node:
            n = int(node["diagonal"])
            return LinearMapRep(np.vstack([np.eye(n), np.eye(n)]))
        return LinearMapRep(np.atleast_2d(_array(node, "matrix")))

    def _build_sets(self, node: dict) -> GenPolytope:
        if "interval" in node:
            a, b = _array(node, "interval")
            return ConvexSetRep.interval(a, b).base
        if "G" in node:
            return ConvexSetRep.from_halfspaces(_array(node, "G"), _array(node, "c")).base
        V = np.atleast_2d(_array(node, "vertices"))
        rays = node.get("rays")
        R = np.zeros((0, V.shape[1])) if rays is None else np.atleast_2d(_array(node, "rays"))
        return GenPolytope.of(V, R, V.shape[1])

    def _build_probes(self, node: dict) -> BoxProbe:
        resolution = self.resolution or _number(node, "resolution", DEFAULT_RESOLUTION)
        tol = self.tol or _number(node, "tol", DEFAULT_TOL)
        if "cube" in node:
            return BoxProbe.cube(int(node["cube"]), _number(node, "radius", 2.0), resolution, tol)
        return BoxProbe(tuple(_array(node, "lo")), tuple(_array(node, "hi")), resolution, tol)

    def halfspaces(self, name, mark=None) -> tuple[np.ndarray, np.ndarray]:
        node = self._section("sets").get(name)
        self.get("sets", name, mark)
        if "G" not in node:
            raise SpecError(EXIT_PARSE, f"set {name!r} must be given by halfspaces G, c",
                            _mark(node))
        return np.atleast_2d(_array(node, "G")), _array(node, "c")


# -- tasks ---------------------------------------------------------------------

class Task:
    def __init__(self, problem: Problem, node: dict, index: int, out_dir: Path):
        self.problem = problem
        self.node = node
        self.verb = _field(node, "verb")
        self.id = str(node.get("id", f"{index:02d}-{self.verb}"))
        self.out_dir = out_dir
        ops = node.get("operands", [])
        if not isinstance(ops, list):
            raise SpecError(EXIT_PARSE, "operands must be a list", _mark(node))
        self.operands = [str(o) for o in ops]

    def need(self, count: int):
        if len(self.operands) != count:
            raise SpecError(EXIT_PARSE, f"{self.verb} takes {count} operand(s)", _mark(self.node))

    def op(self, i: int) -> OperatorRep:
        return self.problem.get("operators", self.operands[i], _mark(self.node))

    def set(self, i: int) -> GenPolytope:
        return self.problem.get("sets", self.operands[i], _mark(self.node))

    def hset(self, i: int):
        return self.problem.halfspaces(self.operands[i], _mark(self.node))

    def map(self, required: bool = True) -> Optional[LinearMapRep]:
        if "map" not in self.node and not required:
            return None
        return self.problem.get("maps", _field(self.node, "map"), _mark(self.node))

    def probe(self, dim: Optional[int] = None) -> BoxProbe:
        if "probe" in self.node:
            return self.problem.get("probes", self.node["probe"], _mark(self.node))
        if dim is None:
            raise SpecError(EXIT_PARSE, f"{self.verb} needs a probe", _mark(self.node))
        return BoxProbe.cube(dim, resolution=self.problem.resolution or DEFAULT_RESOLUTION,
                             tol=self.problem.tol or DEFAULT_TOL)

    def points(self) -> np.ndarray:
        return np.atleast_2d(_array(self.node, "points"))

    def samples(self) -> Optional[np.ndarray]:
        return np.atleast_2d(_array(self.node, "samples")) if "samples" in self.node else None

    def resolve(self):
        """Resolve every referenced name up front (unresolved names exit 65)."""
        section = {"ncone-sum": "sets", "ncone-chain": "sets", "diff-map": "sets"}
        for name in self.operands:
            self.problem.get(section.get(self.verb, "operators"), name, _mark(self.node))
        for key, sec in (("map", "maps"), ("probe", "probes")):
            if key in self.node:
                self.problem.get(sec, self.node[key], _mark(self.node))


def _monotone(t: Task) -> CheckReport:
    t.need(1)
    op = t.op(0)
    if isinstance(op, FiniteGraph):
        return is_monotone_finite(op)
    rep = is_monotone_finite(discretize_graph(op, t.probe(op.dim)))
    if rep.verdict is Verdict.HOLDS:
        rep.verdict = Verdict.HOLDS_AT_RESOLUTION
    return rep


def _probe_check(fn) -> Callable[[Task], CheckReport]:
    def run(t: Task) -> CheckReport:
        t.need(1)
        op = t.op(0)
        return fn(op, t.probe(op.dim))
    return run


def _extension(t: Task) -> CheckReport:
    t.need(1)
    g = t.op(0)
    if not isinstance(g, FiniteGraph):
        raise ValueError("extension needs a finite graph")
    hits, tol = extension_on_grid(g, t.probe(g.dim))
    known = {tuple(np.round(a, 10) + 0.0) for a in g.as_array()}
    added = [h for h in hits if tuple(np.round(h, 10) + 0.0) not in known]
    ext = FiniteGraph.from_array(np.vstack([g.as_array()] + added))
    rep = is_monotone_finite(ext)
    rep.check = "extension"
    rep.details.update(added=[list(a) for a in added], graph_size=len(ext))
    rep.tolerances["match"] = tol
    return rep


def _sum(t: Task) -> CheckReport:
    t.need(2)
    A, B = t.op(0), t.op(1)
    rep = maximality_probe(sum_operator(A, B), t.probe(A.dim))
    qual = qualification_sum(A, B)
    rep.check = "sum"
    rep.details["qualification"] = qual.verdict.value
    return rep


def _compose(t: Task) -> CheckReport:
    t.need(1)
    L, M = t.map(), t.op(0)
    rep = maximality_probe(precompose(L, M), t.probe(L.in_dim))
    qual = qualification_chain(L, M)
    rep.check = "compose"
    rep.details["qualification"] = qual.verdict.value
    return rep


def _chain_representative(t: Task) -> CheckReport:
    t.need(1)
    L, M = t.map(), t.op(0)
    n = L.in_dim
    probe = t.probe(M.dim) if not isinstance(M, FiniteGraph) else None
    tol = t.problem.tol or DEFAULT_TOL
    values = []
    for z in t.points():
        v = float(chain_representative_value(L, M, z[:n], z[n:], probe))
        values.append(v)
        if v < float(z[:n] @ z[n:]) - tol:
            return CheckReport("chain-representative", Verdict.FAILS, witness=tuple(z),
                               details={"values": values}, tolerances={"tol": tol})
    return CheckReport("chain-representative", Verdict.HOLDS, details={"values": values},
                       tolerances={"tol": tol})


def _infconv2(t: Task) -> CheckReport:
    t.need(2)
    A, B = t.op(0), t.op(1)
    h1, h2 = RepFunction.fitzpatrick_of(A), RepFunction.fitzpatrick_of(B)
    n = A.dim
    values = []
    worst = 0.0
    shifted = RepFunction.shifted(h1, B.B) if isinstance(B, SkewLinear) else None
    for z in t.points():
        v = float(infconv2_value(h1, h2, z[:n], z[n:]))
        values.append(v)
        if shifted is not None:
            w = float(shifted.values(z[None, :])[0])
            same = v == w or abs(v - w) <= 1e-12 * max(1.0, abs(w))
            if not same:
                return CheckReport("infconv2", Verdict.FAILS, witness=tuple(z),
                                   details={"values": values, "shifted": w},
                                   tolerances={"relative": 1e-12})
            if math.isfinite(v):
                worst = max(worst, abs(v - w))
    details: dict[str, Any] = {"values": values}
    if shifted is not None:
        details["max_shift_gap"] = worst
    return CheckReport("infconv2", Verdict.HOLDS, details=details, tolerances={"relative": 1e-12})


def _skew_identity(t: Task) -> CheckReport:
    t.need(2)
    A, B = t.op(0), t.op(1)
    if not isinstance(B, SkewLinear):
        raise ValueError("the second operand must be skew")
    return skew_shift_identity_check(A, B, t.probe(A.dim))


def _chain_identity(t: Task) -> CheckReport:
    t.need(1)
    M = t.op(0)
    if not isinstance(M, AffineMonotone):
        raise ValueError("chain-identity needs an affine operand")
    return convex_graph_chain_check(t.map(), M)


def _interiority(t: Task) -> CheckReport:
    family = str(t.node.get("family", "gamma"))
    L = t.map(required=False)
    if L is None:
        t.need(2)
        return interiority_checks(t.op(0), t.op(1), family=family)
    t.need(1)
    return interiority_checks(None, t.op(0), L=L, family=family)


def _ncone_sum(t: Task) -> CheckReport:
    t.need(2)
    return ncone_sum_check(t.hset(0), t.hset(1), t.samples())


def _ncone_chain(t: Task) -> CheckReport:
    t.need(1)
    return ncone_chain_check(t.map(), t.hset(0), t.samples())


def _domain_invariance(t: Task) -> CheckReport:
    t.need(1)
    M = t.op(0)
    probe = t.probe(M.dim) if "probe" in t.node else None
    return domain_invariance_check(M, t.samples(), probe, seed=t.problem.seed)


def _diff_map(t: Task) -> CheckReport:
    t.need(2)
    return difference_map_equivalence(t.set(0), t.set(1), t.map(required=False))


def _sample_surface(t: Task) -> CheckReport:
    t.need(1)
    op = t.op(0)
    path = t.out_dir / f"{re.sub(r'[^A-Za-z0-9_.-]', '_', t.id)}.csv"
    return sample_surface(op, t.probe(op.dim), path, penot=bool(t.node.get("penot", False)))


VERBS: dict[str, Callable[[Task], CheckReport]] = {
    "monotone": _monotone,
    "ni": _probe_check(ni_probe),
    "representable": _probe_check(representability_probe),
    "maximal": _probe_check(maximality_certificate),
    "extension": _extension,
    "sum": _sum,
    "compose": _compose,
    "chain-representative": _chain_representative,
    "infconv2": _infconv2,
    "skew-identity": _skew_identity,
    "chain-identity": _chain_identity,
    "qual-sum": lambda t: (t.need(2), qualification_sum(t.op(0), t.op(1)))[1],
    "qual-chain": lambda t: (t.need(1), qualification_chain(t.map(), t.op(0)))[1],
    "interiority": _interiority,
    "ncone-sum": _ncone_sum,
    "ncone-chain": _ncone_chain,
    "domain-invariance": _domain_invariance,
    "diff-map": _diff_map,
    "linear-closedness": lambda t: (t.need(2), linear_closedness_check(t.op(0), t.op(1)))[1],
    "sample-surface": _sample_surface,
}


# -- sample dumps --------------------------------------------------------------

def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(float(v), ".17g")


def sample_surface(target, probe: BoxProbe, out, penot: bool = False) -> CheckReport:
    """Write ``z, p(z), f(z), f(z) - p(z)`` on the probe grid as CSV.

    ``target`` is an operator (``f = h``, plus ``phi`` columns for a finite
    graph when ``penot`` is set) or a :class:`RepFunction`. Rows follow the
    lexicographic grid order; a degenerate box gives a header-only file.
    """
    n = probe.n
    names = [f"x{i + 1}" for i in range(n)] + [f"xstar{i + 1}" for i in range(n)]
    Z = probe.points()
    p = pairing_rows(Z)
    columns: list[tuple[str, np.ndarray]] = []
    if isinstance(target, RepFunction):
        label = {RepKind.FITZ_FINITE: "h", RepKind.FITZ_AFFINE_CLOSED: "h",
                 RepKind.PENOT_LP: "phi"}.get(target.kind, "f")
        columns.append((label, target.values(Z) if len(Z) else np.zeros(0)))
    else:
        h = fitzpatrick_rows(target, Z, probe)[0] if len(Z) else np.zeros(0)
        columns.append(("h", h))
        if penot:
            if not isinstance(target, FiniteGraph):
                raise ValueError("Penot values need a finite graph")
            rep = RepFunction.penot_of(target)
            columns.append(("phi", rep.values(Z) if len(Z) else np.zeros(0)))
    header = names + ["p"] + [c for c, _ in columns] + [f"{c}_minus_p" for c, _ in columns]
    gaps = [vals - p for _, vals in columns]
    try:
        with open(out, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(len(Z)):
                row = list(Z[i]) + [p[i]] + [v[i] for _, v in columns] + [g[i] for g in gaps]
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        return CheckReport("sample-surface", Verdict.ERROR, details={"error": str(exc)})
    details: dict[str, Any] = {"file": Path(out).name, "rows": int(len(Z))}
    for (name, _), g in zip(columns, gaps):
        finite = g[np.isfinite(g)]
        details[f"min_{name}_minus_p"] = float(finite.min()) if finite.size else None
    return CheckReport("sample-surface", Verdict.HOLDS, details=details)


# -- driver ----------------------------------------------------------------------

def exit_code(verdicts) -> int:
    verdicts = list(verdicts)
    if any(v in (Verdict.FAILS, Verdict.ERROR) for v in verdicts):
        return EXIT_FAIL
    if any(v is Verdict.POSSIBLE_FAIL for v in verdicts):
        return EXIT_POSSIBLE
    return EXIT_OK


def run(spec_path, out_path, resolution: Optional[float] = None, tol: Optional[float] = None,
        seed: int = 0) -> int:
    """Execute a problem file and write ``report.yaml``; returns the exit code."""
    spec_path = Path(spec_path)
    try:
        text = spec_path.read_text()
    except OSError as exc:
        print(f"{spec_path}: {exc.strerror}", file=sys.stderr)
        return EXIT_PARSE
    out_dir = Path(out_path)
    try:
        data = load_spec(text)
        problem = Problem(data, resolution, tol, seed)
        raw_tasks = data.get("tasks") or []
        if not isinstance(raw_tasks, list):
            raise SpecError(EXIT_PARSE, "tasks must be a list", _mark(raw_tasks))
        tasks = []
        for i, node in enumerate(raw_tasks):
            if not isinstance(node, dict):
                raise SpecError(EXIT_PARSE, "each task must be a mapping", _mark(raw_tasks))
            task = Task(problem, node, i, out_dir)
            if task.verb not in VERBS:
                raise SpecError(EXIT_PARSE, f"unknown task verb {task.verb!r}", _mark(node))
            task.resolve()
            tasks.append(task)
        for section in ("operators", "maps", "sets", "probes"):
            for name in problem._section(section):
                problem.get(section, name)
    except SpecError as exc:
        print(exc.located(str(spec_path)), file=sys.stderr)
        return exc.code

    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    verdicts = []
    start = time.perf_counter()
    for task in tasks:
        t0 = time.perf_counter()
        try:
            rep = VERBS[task.verb](task)
        except SpecError as exc:
            rep = CheckReport(task.verb, Verdict.ERROR, details={"error": str(exc)})
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            rep = CheckReport(task.verb, Verdict.ERROR,
                              details={"error": f"{type(exc).__name__}: {exc}"})
        entry = {"id": task.id, "verb": task.verb, "operands": list(task.operands)}
        for key in ("map", "probe"):
            if key in task.node:
                entry[key] = str(task.node[key])
        entry.update(rep.to_dict())
        entry["wall_time"] = round(time.perf_counter() - t0, 6)
        entries.append(entry)
        verdicts.append(rep.verdict)
    code = exit_code(verdicts)
    counts = {v.value: sum(1 for w in verdicts if w is v) for v in Verdict}
    report = {
        "spec": spec_path.name,
        "settings": {"resolution": resolution, "tol": tol, "seed": seed},
        "tasks": entries,
        "summary": {"counts": counts, "exit_code": code},
        "total_wall_time": round(time.perf_counter() - start, 6),
    }
    with open(out_dir / "report.yaml", "w") as fh:
        yaml.safe_dump(report, fh, sort_keys=False, default_flow_style=None, width=100)
    return code


TIMING_FIELDS = ("wall_time", "total_wall_time")


def strip_timing(report):
    """A copy of a loaded report without its wall-time fields."""
    if isinstance(report, dict):
        return {k: strip_timing(v) for k, v in report.items() if k not in TIMING_FIELDS}
    if isinstance(report, list):
        return [strip_timing(v) for v in report]
    return report


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="fitzcalc",
                                     description="Run monotone-operator check suites.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a problem file")
    p_run.add_argument("spec", help="YAML problem file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--resolution", type=float, default=None,
                       help="grid resolution for every probe")
    p_run.add_argument("--tol", type=float, default=None, help="tolerance for every probe")
    p_run.add_argument("--seed", type=int, default=0, help="seed for randomized samples")
    args = parser.parse_args(argv)
    for flag in ("resolution", "tol"):
        value = getattr(args, flag)
        if value is not None and not value > 0:
            parser.error(f"--{flag} must be positive")
    return run(args.spec, args.out, args.resolution, args.tol, args.seed)


if __name__ == "__main__":
    sys.exit(main())
