"""Document formats: models, metric jets and reports as canonical JSON.

Every document is a JSON object written with sorted keys, two-space
indentation and a trailing newline, so ``dump(load(text)) == text`` holds
byte for byte.  Rationals are strings ``"p/q"`` (reduced, ``q > 0``; plain
``"p"`` when ``q = 1``); indices in documents are 1-based.

Model documents::

    {"schema": "curvjet/model", "version": 1, "kind": "para", "dim": 4,
     "eps": [["1", "0", ...], ...],
     "A": {"1,2,1,2": "-3/2", ...},          # any symmetry representative
     "J": [[...]],                            # or "J1", "J2", "J3" for hyper kinds
     "metadata": {"seed": 3, "provenance": "random_model"}}

Metric-jet documents store each series as ``{"e1,...,em": "p/q"}`` keyed
by exponent vectors, the metric by its upper triangle ``"i,j"``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import rational as rl
from .errors import CurvjetError, DegenerateFormError, DimensionError
from .geometry_engine import MetricJet, StructureField
from .series_jet import SeriesMatrix, TruncatedSeries
from .tensor_core import (HYPER_KINDS, KINDS, BilinearForm, CurvatureModel, CurvTensor, HermitianStructure,
                          HyperStructure, _sym_images)

SCHEMA_VERSION = 1
MODEL_SCHEMA = "curvjet/model"
JET_SCHEMA = "curvjet/jet"
REPORT_SCHEMA = "curvjet/report"


class DocumentError(CurvjetError):
    """A document could not be parsed; ``location`` names the offending key or line."""

    def __init__(self, location: str, msg: str):
        super().__init__(f"{location}: {msg}")
        self.location = location


# -- canonical encoding ----------------------------------------------------------------

def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def compact_json(obj: Any) -> str:
    """One-line canonical form (used for line-delimited report streams)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def parse_json(text: str, source: str = "<input>") -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from None
    if not isinstance(obj, dict):
        raise DocumentError(source, "top level must be a JSON object")
    return obj


def _rat(value, where: str):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise DocumentError(where, f"expected a rational string, got {value!r}")
    try:
        return rl.Q(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise DocumentError(where, f"bad rational {value!r} ({exc})") from None


def _matrix_out(M) -> list:
    return [[rl.fmt(x) for x in row] for row in M]


def _matrix_in(obj, m: int, where: str) -> rl.Matrix:
    if not isinstance(obj, list) or len(obj) != m:
        raise DocumentError(where, f"expected a {m}x{m} matrix")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != m:
            raise DocumentError(f"{where}[{i}]", f"expected a row of length {m}")
        rows.append(tuple(_rat(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)))
    return tuple(rows)


def _indices(key: str, count: int, m: int, where: str) -> tuple:
    parts = key.split(",")
    if len(parts) != count:
        raise DocumentError(where, f"key {key!r} must have {count} comma-separated indices")
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError:
        raise DocumentError(where, f"key {key!r} is not a list of integers") from None
    if any(not 1 <= t <= m for t in idx):
        raise DocumentError(where, f"index out of range 1..{m} in {key!r}")
    return tuple(t - 1 for t in idx)


def _require(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise DocumentError(where, f"missing key {key!r}")
    return doc[key]


def _check_schema(doc: Mapping, schema: str, source: str) -> None:
    got = doc.get("schema")
    if got != schema:
        raise DocumentError(f"{source}:schema", f"expected {schema!r}, got {got!r}")
    if doc.get("version") != SCHEMA_VERSION:
        raise DocumentError(f"{source}:version", f"unsupported version {doc.get('version')!r}")


# -- models ----------------------------------------------------------------------------

@dataclass
class ModelDocument:
    """A parsed model plus whatever the loader had to repair.

    ``conflicts`` lists tensor slots where two supplied entries disagree
    after symmetry completion; the tensor keeps the literally supplied value
    there, so validation reports the clash with witness indices.
    """

    model: CurvatureModel
    metadata: dict = field(default_factory=dict)
    conflicts: list = field(default_factory=list)

    @property
    def kind(self) -> str:
        return self.model.kind


def model_to_dict(M: CurvatureModel, metadata: Mapping | None = None) -> dict:
    doc = {
        "schema": MODEL_SCHEMA,
        "version": SCHEMA_VERSION,
        "kind": M.kind,
        "dim": M.m,
        "eps": _matrix_out(M.eps),
        "A": {",".join(str(t + 1) for t in idx): rl.fmt(v) for idx, v in M.A.canonical_entries().items()},
    }
    if isinstance(M.structure, HermitianStructure):
        doc["J"] = _matrix_out(M.structure.J)
    elif isinstance(M.structure, HyperStructure):
        for name, H in zip(("J1", "J2", "J3"), M.structure.structures):
            doc[name] = _matrix_out(H.J)
    if metadata:
        doc["metadata"] = dict(metadata)
    return doc


def dump_model(M: CurvatureModel, metadata: Mapping | None = None) -> str:
    return canonical_json(model_to_dict(M, metadata))


def _complete(m: int, entries: dict, where: str) -> tuple[CurvTensor, list]:
    """Symmetry-complete sparse entries; literal entries win on conflict."""
    data: dict[int, Any] = {}
    conflicts = []
    clashed: set = set()

    def pos(a, b, c, d):
        return ((a * m + b) * m + c) * m + d

    for idx, v in entries.items():
        for img, s in _sym_images(*idx):
            p = pos(*img)
            val = v if s > 0 else -v
            if p in data and data[p] != val and p not in clashed:
                clashed.add(p)
                conflicts.append({"slot": ",".join(str(t + 1) for t in img),
                                  "values": [rl.fmt(data[p]), rl.fmt(val)]})
            data.setdefault(p, val)
    for idx, v in entries.items():
        data[pos(*idx)] = v
    flat = [rl.ZERO] * m ** 4
    for p, v in data.items():
        flat[p] = v
    return CurvTensor(m, flat), conflicts


def model_from_dict(doc: Mapping, source: str = "<input>") -> ModelDocument:
    _check_schema(doc, MODEL_SCHEMA, source)
    kind = _require(doc, "kind", source)
    if kind not in KINDS:
        raise DocumentError(f"{source}:kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    m = _require(doc, "dim", source)
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise DocumentError(f"{source}:dim", f"dimension must be a positive integer, got {m!r}")
    eps = _matrix_in(_require(doc, "eps", source), m, f"{source}:eps")
    try:
        form = BilinearForm(eps)
    except (DegenerateFormError, DimensionError) as exc:
        raise DocumentError(f"{source}:eps", str(exc)) from None
    rawA = _require(doc, "A", source)
    if not isinstance(rawA, dict):
        raise DocumentError(f"{source}:A", "expected an object keyed by 'i,j,k,l'")
    entries = {}
    for key in sorted(rawA):
        where = f"{source}:A[{key!r}]"
        idx = _indices(key, 4, m, where)
        v = _rat(rawA[key], where)
        if idx in entries and entries[idx] != v:
            raise DocumentError(where, "duplicate entry")
        entries[idx] = v
    A, conflicts = _complete(m, entries, f"{source}:A")
    structure = None
    if kind in ("hermitian", "para"):
        J = _matrix_in(_require(doc, "J", source), m, f"{source}:J")
        structure = HermitianStructure(J, -1 if kind == "hermitian" else 1)
    elif kind in HYPER_KINDS:
        rhos = (-1, -1, -1) if kind == "hyper-pseudo" else (-1, 1, 1)
        parts = [HermitianStructure(_matrix_in(_require(doc, name, source), m, f"{source}:{name}"), rho)
                 for name, rho in zip(("J1", "J2", "J3"), rhos)]
        structure = HyperStructure(*parts, kind)
    extra = set(doc) - {"schema", "version", "kind", "dim", "eps", "A", "J", "J1", "J2", "J3", "metadata"}
    if extra:
        raise DocumentError(source, f"unknown keys {sorted(extra)}")
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise DocumentError(f"{source}:metadata", "expected an object")
    return ModelDocument(CurvatureModel(form, A, structure), dict(meta), conflicts)


def load_model(text: str, source: str = "<input>") -> ModelDocument:
    return model_from_dict(parse_json(text, source), source)


# -- series and metric jets --------------------------------------------------------------

def series_to_dict(s: TruncatedSeries) -> dict:
    return {",".join(map(str, alpha)): rl.fmt(c) for alpha, c in s.terms()}


def series_from_dict(obj, m: int, order: int, where: str) -> TruncatedSeries:
    if not isinstance(obj, dict):
        raise DocumentError(where, "expected an object keyed by exponent vectors")
    terms = {}
    for key, val in obj.items():
        parts = key.split(",")
        try:
            alpha = tuple(int(p) for p in parts)
        except ValueError:
            raise DocumentError(f"{where}[{key!r}]", "exponent vector must be comma-joined integers") from None
        if len(alpha) != m or any(a < 0 for a in alpha):
            raise DocumentError(f"{where}[{key!r}]", f"expected {m} non-negative exponents")
        if sum(alpha) > order:
            raise DocumentError(f"{where}[{key!r}]", f"degree exceeds the jet order {order}")
        terms[alpha] = _rat(val, f"{where}[{key!r}]")
    return TruncatedSeries(m, order, terms)


def _sym_matrix_out(S: SeriesMatrix) -> dict:
    n = len(S.rows)
    return {f"{i + 1},{j + 1}": series_to_dict(S[i, j]) for i in range(n) for j in range(i, n)}


def _full_matrix_out(S: SeriesMatrix) -> dict:
    n = len(S.rows)
    return {f"{i + 1},{j + 1}": series_to_dict(S[i, j]) for i in range(n) for j in range(n)}


def _series_matrix_in(obj, m: int, order: int, where: str, symmetric: bool) -> SeriesMatrix:
    if not isinstance(obj, dict):
        raise DocumentError(where, "expected an object keyed by 'i,j'")
    rows: list[list] = [[None] * m for _ in range(m)]
    for key in obj:
        i, j = _indices(key, 2, m, f"{where}[{key!r}]")
        if symmetric and i > j:
            raise DocumentError(f"{where}[{key!r}]", "symmetric matrices store the upper triangle only")
        s = series_from_dict(obj[key], m, order, f"{where}[{key!r}]")
        rows[i][j] = s
        if symmetric:
            rows[j][i] = s
    zero = TruncatedSeries.zero(m, order)
    return SeriesMatrix([[s if s is not None else zero for s in row] for row in rows])


@dataclass
class JetDocument:
    g: MetricJet
    structure: Any = None           # StructureField, tuple of three, or None
    kind: str = "plain"
    functions: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def jet_to_dict(doc: JetDocument) -> dict:
    out = {
        "schema": JET_SCHEMA,
        "version": SCHEMA_VERSION,
        "dim": doc.g.m,
        "order": doc.g.order,
        "kind": doc.kind,
        "g": _sym_matrix_out(doc.g.g),
    }
    if isinstance(doc.structure, StructureField):
        out["J"] = _full_matrix_out(doc.structure.J)
    elif doc.structure is not None:
        for name, S in zip(("J1", "J2", "J3"), doc.structure):
            out[name] = _full_matrix_out(S.J)
    if doc.functions:
        out["functions"] = {name: {"order": f.order, "terms": series_to_dict(f)}
                            for name, f in doc.functions.items()}
    if doc.metadata:
        out["metadata"] = dict(doc.metadata)
    return out


def dump_jet(doc: JetDocument) -> str:
    return canonical_json(jet_to_dict(doc))


def jet_from_dict(obj: Mapping, source: str = "<input>") -> JetDocument:
    _check_schema(obj, JET_SCHEMA, source)
    m = _require(obj, "dim", source)
    N = _require(obj, "order", source)
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise DocumentError(f"{source}:dim", f"dimension must be a positive integer, got {m!r}")
    if isinstance(N, bool) or not isinstance(N, int) or N < 0:
        raise DocumentError(f"{source}:order", f"order must be a non-negative integer, got {N!r}")
    kind = obj.get("kind", "plain")
    if kind not in KINDS:
        raise DocumentError(f"{source}:kind", f"unknown kind {kind!r}")
    gm = _series_matrix_in(_require(obj, "g", source), m, N, f"{source}:g", symmetric=True)
    try:
        g = MetricJet(gm)
    except CurvjetError as exc:
        raise DocumentError(f"{source}:g", str(exc)) from None
    structure = None
    if kind in ("hermitian", "para"):
        J = _series_matrix_in(_require(obj, "J", source), m, N, f"{source}:J", symmetric=False)
        structure = StructureField(J, -1 if kind == "hermitian" else 1)
    elif kind in HYPER_KINDS:
        rhos = (-1, -1, -1) if kind == "hyper-pseudo" else (-1, 1, 1)
        structure = tuple(
            StructureField(_series_matrix_in(_require(obj, name, source), m, N, f"{source}:{name}", False), rho)
            for name, rho in zip(("J1", "J2", "J3"), rhos))
    functions = {}
    for name, f in (obj.get("functions") or {}).items():
        where = f"{source}:functions[{name!r}]"
        if not isinstance(f, dict) or "order" not in f or "terms" not in f:
            raise DocumentError(where, "expected {'order': n, 'terms': {...}}")
        functions[name] = series_from_dict(f["terms"], m, f["order"], where)
    return JetDocument(g, structure, kind, functions, dict(obj.get("metadata") or {}))


def load_jet(text: str, source: str = "<input>") -> JetDocument:
    return jet_from_dict(parse_json(text, source), source)


def load_any(text: str, source: str = "<input>"):
    """Parse a model or a metric-jet document, dispatching on ``schema``."""
    obj = parse_json(text, source)
    schema = obj.get("schema")
    if schema == MODEL_SCHEMA:
        return model_from_dict(obj, source)
    if schema == JET_SCHEMA:
        return jet_from_dict(obj, source)
    raise DocumentError(f"{source}:schema", f"expected {MODEL_SCHEMA!r} or {JET_SCHEMA!r}, got {schema!r}")


# -- reports ------------------------------------------------------------------------------

def make_report(operation: str, input_digest: str | None, source: str | None, verdicts: Mapping[str, bool],
                orders: Mapping | None = None, diagnostics: Mapping | None = None,
                timings: Mapping | None = None, error: str | None = None) -> dict:
    rep = {
        "schema": REPORT_SCHEMA,
        "version": SCHEMA_VERSION,
        "operation": operation,
        "input": {"path": source, "digest": input_digest},
        "verdicts": {k: bool(v) for k, v in verdicts.items()},
        "orders": dict(orders or {}),
        "diagnostics": dict(diagnostics or {}),
        "timings": {k: round(float(v), 6) for k, v in (timings or {}).items()},
        "ok": error is None and all(verdicts.values()),
    }
    if error is not None:
        rep["error"] = error
    return rep


def dump_report(report: Mapping) -> str:
    return canonical_json(report)


def load_report(text: str, source: str = "<input>") -> dict:
    obj = parse_json(text, source)
    _check_schema(obj, REPORT_SCHEMA, source)
    return obj


def matrix_strings(M: Sequence[Sequence]) -> list:
    return _matrix_out(M)
