import json

import numpy as np
import pytest

from shadowrelax.documents import (
    DocumentError,
    bundled_names,
    ideal_document,
    load_document,
    load_json,
    parse_ideal,
    parse_pencil,
    parse_point,
    parse_poly_entry,
    parse_set,
    pencil_document,
    set_document,
)
from shadowrelax.pencil import MatrixPencil


def kind(doc):
    if "inequalities" in doc:
        return "set"
    if "generators" in doc:
        return "ideal"
    return "pencil"


ALL = bundled_names()


def test_bundled_examples_present():
    for name in ("counterexample", "cusp", "twodisks", "twodisks_pencil", "zitrus",
                 "sphere_cylinder", "circle", "nonexposed", "square", "disk_pencil"):
        assert name in ALL


@pytest.mark.parametrize("name", ALL)
def test_round_trip(name):
    doc = load_document(name)
    assert doc.get("description")
    k = kind(doc)
    if k == "set":
        S = parse_set(doc)
        T = parse_set(json.loads(json.dumps(set_document(S))))
        assert T.vars == S.vars and list(T.inequalities) == list(S.inequalities)
    elif k == "ideal":
        I = parse_ideal(doc)
        J = parse_ideal(json.loads(json.dumps(ideal_document(I))))
        assert J.vars == I.vars and list(J.generators) == list(I.generators)
    else:
        P = parse_pencil(doc)
        Q = parse_pencil(json.loads(json.dumps(pencil_document(P))))
        assert (Q.xvars, Q.yvars) == (P.xvars, P.yvars)
        for M, N in zip((P.A, *P.B, *P.C), (Q.A, *Q.B, *Q.C)):
            assert np.array_equal(M, N)


def test_pencil_entries_stay_rational():
    doc = pencil_document(MatrixPencil(np.array([[0.5, 0.0], [0.0, 1.0]]), (np.eye(2) / 3,)))
    assert doc["A"][0][0] == "1/2"
    assert parse_pencil(doc).B[0][0, 0] == pytest.approx(1 / 3)


def pencil_doc(**changes):
    doc = {"k": 2, "nx": 1, "ny": 0, "A": [["1", "0"], ["0", "1"]], "B": [[["1", "0"], ["0", "-1"]]], "C": []}
    doc.update(changes)
    return doc


@pytest.mark.parametrize("doc", [
    pencil_doc(A=[["1", "1/3"], ["0.3333333", "1"]]),
    pencil_doc(A=[["1", "0"]]),
    pencil_doc(nx=2),
    pencil_doc(k="two"),
    pencil_doc(A=[["1", "x"], ["x", "1"]]),
])
def test_bad_pencils_rejected(doc):
    with pytest.raises(DocumentError):
        parse_pencil(doc)


@pytest.mark.parametrize("doc", [
    {"inequalities": ["X"]},
    {"vars": [], "inequalities": ["X"]},
    {"vars": ["X", "X"], "inequalities": ["X"]},
    {"vars": ["X"], "inequalities": []},
    {"vars": ["X"], "inequalities": ["Z+1"]},
    {"vars": ["X"], "inequalities": [3]},
])
def test_bad_sets_rejected(doc):
    with pytest.raises(DocumentError):
        parse_set(doc)


def test_term_document_is_embedded():
    p = parse_poly_entry({"vars": ["Y"], "terms": [{"e": [2], "c": "1/2"}]}, ("X", "Y"))
    assert p.vars == ("X", "Y")
    assert p((3, 2)) == 2


@pytest.mark.parametrize("text, expected", [("1/3,0", (1 / 3, 0)), ("-1/2,0", (-0.5, 0)), ("2", (2,))])
def test_parse_point(text, expected):
    assert parse_point(text) == pytest.approx(expected)
    assert parse_point(text, "float") == pytest.approx(expected)


@pytest.mark.parametrize("text", ["", "1,,2", "a,b"])
def test_bad_points(text):
    with pytest.raises(DocumentError):
        parse_point(text)


def test_unknown_bundle_and_bad_json(tmp_path):
    with pytest.raises(DocumentError):
        load_document("nothing_by_this_name")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DocumentError):
        load_json(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(DocumentError):
        load_json(arr)
