import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowrelax.documents import load_document, parse_ideal, parse_set
from shadowrelax.obstruct import (
    ObstructionVerdict,
    convex_singular_check,
    line_obstruction,
    nonexposed_face_check,
    singular_point_obstruction,
)
from shadowrelax.relax import IdealSpec, SemialgebraicSet, VerdictKind, lasserre_point_member, lasserre_support
from shadowrelax.poly import parse_expression

V = ("X", "Y")
OB = ObstructionVerdict


def S_(*ps):
    return SemialgebraicSet(V, [parse_expression(p, V) for p in ps])


CUSP = S_("-X^4+X^3-Y^2")
NONEXPOSED = S_("Y", "1-Y", "X+1", "Y^2-X^3")
SQUARE = S_("1-X", "1+X", "1-Y", "1+Y")
DISK = S_("1-X^2-Y^2")
TWO_DISKS = S_("-X^4-Y^4-2X^2Y^2+4X^2")


@pytest.mark.parametrize("S, a, d, verdict", [
    (CUSP, (0, 0), (1, 0), OB.OBSTRUCTED),
    (NONEXPOSED, (0, 0), (1, 0), OB.OBSTRUCTED),
    (DISK, (1, 0), (0, 1), OB.NOT_APPLICABLE),
    (SQUARE, (1, 1), (0, -1), OB.NOT_OBSTRUCTED),
    (SQUARE, (0, 0), (1, 0), OB.NOT_APPLICABLE),
])
def test_line_obstruction(S, a, d, verdict):
    assert line_obstruction(S, a, d).verdict is verdict


def test_line_report_lists_active_gradients():
    r = line_obstruction(NONEXPOSED, (0, 0), (1, 0))
    assert r.active == [0, 3]
    assert [row.gradient for row in r.gradients] == [(0, 1), (0, 0)]
    assert all(row.inner == 0 for row in r.gradients)
    assert r.exact
    assert any("relative boundary" in s for s in r.asserted)


@pytest.mark.parametrize("S, a, verdict, grads", [
    (CUSP, (0, 0), OB.OBSTRUCTED, [(0, 0)]),
    (TWO_DISKS, (1, 1), OB.NOT_OBSTRUCTED, [(0, -8)]),
    (CUSP, (1, 0), OB.NOT_OBSTRUCTED, [(-1, 0)]),
    (CUSP, (Fraction(1, 2), 0), OB.NOT_APPLICABLE, []),
])
def test_singular_point(S, a, verdict, grads):
    r = singular_point_obstruction(S, a)
    assert r.verdict is verdict
    assert [row.gradient for row in r.gradients] == grads


@pytest.mark.parametrize("S, a, b, verdict", [
    (NONEXPOSED, (0, 0), (Fraction(-1, 2), 0), OB.OBSTRUCTED),
    (SQUARE, (1, 1), (1, 0), OB.NOT_OBSTRUCTED),
    (CUSP, (0, 0), (Fraction(1, 2), 0), OB.OBSTRUCTED),
])
def test_nonexposed_face(S, a, b, verdict):
    r = nonexposed_face_check(S, a, b)
    assert r.verdict is verdict
    assert r.check == "nonexposed"


def test_square_vertex_inner_product():
    r = nonexposed_face_check(SQUARE, (1, 1), (1, 0))
    inner = {row.index: row.inner for row in r.gradients}
    assert inner == {0: 0, 2: 1}


@pytest.mark.parametrize("ideal, vars, p, q, verdict", [
    (["X^2+Z^2+(Y^2-1)^3"], ("X", "Y", "Z"), (0, 1, 0), (0, 0, 0), OB.OBSTRUCTED),
    (["X^2+Y^2+Z^2-4", "(X-1)^2+Y^2-1"], ("X", "Y", "Z"), (2, 0, 0), (0, 0, 0), OB.WITNESS_INVALID),
    (["X^2+Y^2-1"], V, (1, 0), (0, 0), OB.WITNESS_INVALID),
])
def test_convex_singular(ideal, vars, p, q, verdict):
    I = IdealSpec(vars, [parse_expression(g, vars) for g in ideal])
    r = convex_singular_check(I, p, q)
    assert r.verdict is verdict
    assert r.caveats  # generators not asserted to be real radical


def test_convex_singular_inner_products():
    I = parse_ideal(load_document("sphere_cylinder"))
    r = convex_singular_check(I, (2, 0, 0), (0, 0, 0))
    assert [row.inner for row in r.gradients] == [-8, -4]


def test_real_radical_assertion_removes_caveat():
    I = parse_ideal(load_document("zitrus"))
    r = convex_singular_check(I, (0, 1, 0), (0, 0, 0), real_radical=True)
    assert not r.caveats
    assert r.verdict is OB.OBSTRUCTED


@pytest.mark.parametrize("call", [
    lambda: line_obstruction(CUSP, (2, 0), (1, 0)),
    lambda: singular_point_obstruction(SQUARE, (2, 2)),
    lambda: nonexposed_face_check(CUSP, (0, 0), (0, 0)),
    lambda: convex_singular_check(IdealSpec(V, [parse_expression("X^2+Y^2-1", V)]), (0, 0), (1, 0)),
    lambda: line_obstruction(CUSP, (0, 0), (0, 0)),
])
def test_input_errors(call):
    with pytest.raises(ValueError):
        call()


def test_float_mode_uses_tolerance():
    r = line_obstruction(CUSP, (0.0, 1e-12), (1.0, 0.0))
    assert not r.exact
    assert r.verdict is OB.OBSTRUCTED


def test_exact_reports_are_reproducible():
    a = nonexposed_face_check(NONEXPOSED, (0, 0), (Fraction(-1, 2), 0)).to_document()
    b = nonexposed_face_check(NONEXPOSED, (0, 0), (Fraction(-1, 2), 0)).to_document()
    assert a == b


@settings(max_examples=10, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20))
def test_singular_point_implies_orthogonality_for_all_lines(u, v):
    if u == 0 and v == 0:
        return
    assert singular_point_obstruction(CUSP, (0, 0)).obstructed
    r = line_obstruction(CUSP, (0, 0), (u, v))
    assert all(row.inner == 0 for row in r.gradients)


# ---------------------------------------------------------------------------
# agreement with the relaxations


@pytest.mark.parametrize("d", [1, 2])
def test_cusp_relaxations_strictly_contain_hull(d):
    assert line_obstruction(CUSP, (0, 0), (1, 0)).obstructed
    # conv(S) has support 0 in direction (-1, 0)
    assert lasserre_support(CUSP, d, (-1, 0)) > 1e-6


@pytest.mark.parametrize("d", [1, 2])
def test_nonexposed_relaxations_strictly_contain_hull(d):
    # (1/100, 1/10000) lies below the curve Y = X^(3/2) bounding the hull near the origin
    assert nonexposed_face_check(NONEXPOSED, (0, 0), (Fraction(-1, 2), 0)).obstructed
    x = (Fraction(1, 100), Fraction(1, 10000))
    assert not NONEXPOSED.contains(x)
    assert x[1] < math.pow(x[0], 1.5)
    assert lasserre_point_member(NONEXPOSED, d, x).kind is VerdictKind.IN


def test_bundled_sets_load():
    for name in ("cusp", "nonexposed", "square"):
        assert parse_set(load_document(name)).nvars == 2
