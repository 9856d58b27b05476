"""JSON documents for sets, ideals, pencils and points.

Set document::

    {"vars": ["X", "Y"], "inequalities": ["Y", "1-Y", "1+X", "Y-X^3"]}

Ideal document: the same with ``"generators"``.  Polynomials may be inline
expressions or term documents ``{"vars": [...], "terms": [...]}``.  Pencil
document::

    {"k": 2, "nx": 2, "ny": 0, "A": [["1", "0"], ["0", "1"]],
     "B": [[...], [...]], "C": [], "xvars": ["X", "Y"]}

with entries given as coefficient strings; symmetry is checked exactly.
Serializers emit term documents so that parsing them back is lossless.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .pencil import MatrixPencil
from .poly import Polynomial, PolynomialError, parse_coefficient, parse_expression, parse_polynomial, polynomial_document
from .relax import IdealSpec, SemialgebraicSet


class DocumentError(ValueError):
    """A problem document is malformed."""


def _mode_flag(mode) -> bool:
    if mode not in ("exact", "float"):
        raise DocumentError(f"unknown mode {mode!r}")
    return mode == "exact"


def load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{path} must hold a JSON object")
    return doc


def _vars(doc) -> tuple:
    vars = doc.get("vars")
    if not isinstance(vars, list) or not vars or not all(isinstance(v, str) and v for v in vars):
        raise DocumentError("'vars' must be a non-empty list of names")
    if len(set(vars)) != len(vars):
        raise DocumentError("variable names must be distinct")
    return tuple(vars)


def parse_poly_entry(entry, vars, mode="exact") -> Polynomial:
    exact = _mode_flag(mode)
    try:
        if isinstance(entry, str):
            return parse_expression(entry, vars, exact)
        if isinstance(entry, dict):
            p = parse_polynomial(entry, mode)
            if p.vars != tuple(vars):
                p = p.embed(vars)
            return p
    except PolynomialError as exc:
        raise DocumentError(str(exc)) from exc
    raise DocumentError(f"cannot read polynomial from {entry!r}")


def _poly_list(doc, key, mode):
    vars = _vars(doc)
    items = doc.get(key)
    if not isinstance(items, list) or not items:
        raise DocumentError(f"{key!r} must be a non-empty list")
    return vars, [parse_poly_entry(e, vars, mode) for e in items]


def parse_set(doc: dict, mode="exact") -> SemialgebraicSet:
    vars, polys = _poly_list(doc, "inequalities", mode)
    return SemialgebraicSet(vars, polys)


def parse_ideal(doc: dict, mode="exact") -> IdealSpec:
    vars, polys = _poly_list(doc, "generators", mode)
    return IdealSpec(vars, polys)


def set_document(S: SemialgebraicSet) -> dict:
    return {"vars": list(S.vars), "inequalities": [polynomial_document(p) for p in S.inequalities]}


def ideal_document(I: IdealSpec) -> dict:
    return {"vars": list(I.vars), "generators": [polynomial_document(g) for g in I.generators]}


def _exact_matrix(rows, k, what) -> list:
    if not isinstance(rows, list) or len(rows) != k:
        raise DocumentError(f"{what} must have {k} rows")
    out = []
    for r in rows:
        if not isinstance(r, list) or len(r) != k:
            raise DocumentError(f"{what} must be {k}x{k}")
        try:
            out.append([parse_coefficient(v, exact=True) for v in r])
        except PolynomialError as exc:
            raise DocumentError(f"{what}: {exc}") from exc
    for a in range(k):
        for b in range(a + 1, k):
            if out[a][b] != out[b][a]:
                raise DocumentError(f"{what} is not symmetric at ({a},{b})")
    return out


def parse_pencil(doc: dict) -> MatrixPencil:
    try:
        k, nx, ny = int(doc["k"]), int(doc["nx"]), int(doc["ny"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError("pencil document needs integer 'k', 'nx' and 'ny'") from exc
    if k < 1 or nx < 0 or ny < 0:
        raise DocumentError("pencil sizes must be positive")
    B, C = doc.get("B", []), doc.get("C", [])
    if len(B) != nx or len(C) != ny:
        raise DocumentError(f"expected {nx} B and {ny} C matrices, got {len(B)} and {len(C)}")
    A = _exact_matrix(doc.get("A"), k, "A")
    Bs = [_exact_matrix(M, k, f"B{i + 1}") for i, M in enumerate(B)]
    Cs = [_exact_matrix(M, k, f"C{j + 1}") for j, M in enumerate(C)]

    def arr(M):
        return np.array([[float(v) for v in r] for r in M])

    try:
        return MatrixPencil(arr(A), tuple(arr(M) for M in Bs), tuple(arr(M) for M in Cs),
                            doc.get("xvars"), doc.get("yvars"))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def _entry_text(v: float) -> str:
    f = Fraction(v)
    return str(f) if f.denominator <= 10**6 and float(f) == v else repr(v)


def pencil_document(P: MatrixPencil) -> dict:
    def mat(M):
        return [[_entry_text(float(v)) for v in row] for row in M]

    return {
        "k": P.k, "nx": P.nx, "ny": P.ny,
        "A": mat(P.A), "B": [mat(M) for M in P.B], "C": [mat(M) for M in P.C],
        "xvars": list(P.xvars), "yvars": list(P.yvars),
    }


def parse_point(text: str, mode="exact") -> tuple:
    """``"1/3,0"`` to a tuple of fractions (exact) or floats."""
    exact = _mode_flag(mode)
    parts = [s for s in str(text).replace(";", ",").split(",")]
    if not parts or any(not s.strip() for s in parts):
        raise DocumentError(f"cannot read a point from {text!r}")
    try:
        return tuple(parse_coefficient(s.strip(), exact) for s in parts)
    except PolynomialError as exc:
        raise DocumentError(str(exc)) from exc


def bundled_path(name: str) -> Path:
    """Path of a bundled example document (``.json`` may be omitted)."""
    if not name.endswith(".json"):
        name += ".json"
    ref = resources.files("shadowrelax") / "data" / name
    if not ref.is_file():
        raise DocumentError(f"no bundled example named {name!r}")
    return Path(str(ref))


def bundled_names() -> list:
    folder = resources.files("shadowrelax") / "data"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def resolve(path_or_name) -> Path:
    """A filesystem path if it exists, otherwise a bundled example."""
    p = Path(path_or_name)
    return p if p.exists() else bundled_path(str(path_or_name))


def load_document(path_or_name) -> dict:
    return load_json(resolve(path_or_name))
