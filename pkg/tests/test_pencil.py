import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowrelax.documents import load_document, parse_pencil
from shadowrelax.pencil import (
    MatrixPencil,
    NotApplicable,
    closure_member,
    disk_pencil,
    pencil_member,
    pencil_qm_member,
    polar_member,
    projection_member,
    strictly_feasible,
)
from shadowrelax.poly import Polynomial, parse_expression
from shadowrelax.relax import VerdictKind

V = ("X", "Y")


def P(text):
    return parse_expression(text, V, exact=False)


@pytest.fixture(scope="module")
def stadium():
    return parse_pencil(load_document("twodisks_pencil"))


@pytest.fixture(scope="module")
def disk():
    return disk_pencil()


def stadium_support(u):
    # hull of the unit disks centred at (-1, 0) and (1, 0)
    return abs(u[0]) + math.hypot(*u)


def in_stadium(x, y):
    return (abs(x) <= 1 and abs(y) <= 1) or (abs(x) - 1) ** 2 + y * y <= 1


# ---------------------------------------------------------------------------
# construction


def test_bundled_pencil_shape(stadium):
    assert (stadium.k, stadium.nx, stadium.ny) == (4, 2, 1)
    assert stadium.xvars == ("X", "Y") and stadium.yvars == ("Z",)


def test_asymmetric_coefficient_rejected():
    with pytest.raises(ValueError):
        MatrixPencil(np.eye(2), (np.array([[0.0, 1.0], [0.0, 0.0]]),))


def test_evaluation(stadium):
    M = stadium((2, 0), (1,))
    assert np.allclose(M, [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 0]])


def test_linear_form(disk):
    ell = disk.linear_form(np.diag([1.0, 0.0]))
    assert ell == P("1+X")


# ---------------------------------------------------------------------------
# membership


@pytest.mark.parametrize("x, y, member, lam", [
    ((0, 0), (), True, 1.0),
    ((1, 1), (), False, 1 - math.sqrt(2)),
])
def test_disk_membership(disk, x, y, member, lam):
    ok, value = pencil_member(disk, x, y)
    assert ok is member
    assert value == pytest.approx(lam)


def test_stadium_boundary_point(stadium):
    ok, value = pencil_member(stadium, (2, 0), (1,))
    assert ok and value == pytest.approx(0.0, abs=1e-12)


def test_strict_feasibility_witnesses(disk, stadium):
    w = strictly_feasible(disk)
    assert w.margin == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(w.x, 0, atol=1e-6)
    w = strictly_feasible(stadium)
    assert w.margin == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(w.x + w.y, 0, atol=1e-6)


def test_pencil_without_interior():
    P0 = MatrixPencil(np.zeros((2, 2)), (np.diag([1.0, -1.0]),))
    assert strictly_feasible(P0) is None
    with pytest.raises(NotApplicable):
        polar_member(P0, parse_expression("1", P0.xvars, exact=False))
    assert closure_member(P0, (0,)).kind is VerdictKind.NOT_APPLICABLE


@pytest.mark.parametrize("x, kind", [
    ((1.5, 0.5), VerdictKind.IN),
    ((2.0, 0.0), VerdictKind.IN),
    ((2.05, 0.0), VerdictKind.OUT),
])
def test_projection_and_closure_agree(stadium, x, kind):
    v = projection_member(stadium, x)
    w = closure_member(stadium, x)
    assert v.kind is kind and w.kind is kind


def test_out_verdict_carries_separator(stadium):
    v = projection_member(stadium, (2.05, 0))
    assert v.margin == pytest.approx(0.05, abs=1e-6)
    assert v.separator((2.05, 0.0)) == pytest.approx(-v.margin)
    assert v.certificate.residuals["C"] <= 1e-7
    w = closure_member(stadium, (2.05, 0))
    assert w.margin == pytest.approx(0.05, abs=1e-6)


def test_closure_of_disk(disk):
    assert closure_member(disk, (0.5, 0)).kind is VerdictKind.IN


def test_binding_box_is_flagged(stadium):
    # x = 2 needs z = 1, which a box of 0.5 excludes
    v = projection_member(stadium, (2.0, 0.0), R=0.5)
    assert v.low_confidence


# ---------------------------------------------------------------------------
# polar


def test_polar_certificate_for_tangent(disk):
    cert = polar_member(disk, P("1+X"))
    assert cert is not None
    assert np.allclose(cert.U, np.diag([1.0, 0.0]), atol=1e-5)
    assert cert.r == pytest.approx(0.0, abs=1e-6)


def test_polar_constant_one(disk):
    cert = polar_member(disk, P("1"))
    assert cert is not None
    assert np.sum(cert.U * disk.A) + cert.r == pytest.approx(1.0)


def test_polar_rejects_negative_somewhere(disk):
    assert polar_member(disk, P("1-2X")) is None


@pytest.mark.parametrize("ell", ["2+X", "3+X", "2-X", "1+Y"])
def test_polar_on_stadium(stadium, ell):
    cert = polar_member(stadium, P(ell))
    assert cert is not None
    assert np.linalg.eigvalsh(cert.U).min() >= -1e-8
    assert cert.residuals["C"] <= 1e-7


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * math.pi))
def test_polar_exact_under_strict_feasibility(theta):
    disk = disk_pencil()
    u = (math.cos(theta), math.sin(theta))
    tight = Polynomial.linear(V, 1.0, [-u[0], -u[1]], exact=False)
    loose = Polynomial.linear(V, 0.99, [-u[0], -u[1]], exact=False)
    assert polar_member(disk, tight) is not None
    assert polar_member(disk, loose) is None


# ---------------------------------------------------------------------------
# QM(A)_d


@pytest.mark.parametrize("p", ["3+X", "2+X"])
def test_linear_members_at_degree_zero(stadium, p):
    cert = pencil_qm_member(stadium, 0, P(p))
    assert cert is not None
    assert cert.residual <= 1e-8
    assert cert.replay(stadium) <= 1e-6


@pytest.mark.parametrize("d", [0, 1, 2])
def test_negative_on_set_is_never_certified(stadium, d):
    assert pencil_qm_member(stadium, d, P("X+Y-10")) is None


def test_certificate_nesting(stadium):
    assert pencil_qm_member(stadium, 1, P("2+X")) is not None


def test_quadratic_member(stadium):
    # 4 - X^2 is nonnegative on the stadium; (2 - X)(2 + X) needs degree-1 multipliers
    cert = pencil_qm_member(stadium, 1, P("4-X^2"))
    assert cert is not None
    assert cert.replay(stadium) <= 1e-6


def test_matrix_multiplier_respects_c_constraint(stadium):
    cert = pencil_qm_member(stadium, 1, P("4-X^2"))
    M = cert.M()
    C = stadium.C[0]
    total = Polynomial.zero(V, exact=False)
    for a in range(4):
        for b in range(4):
            if C[a, b]:
                total = total + M[a][b].scale(C[a, b])
    assert total.coefficient_norm() <= 1e-7


@pytest.mark.parametrize("theta", np.linspace(0, 2 * math.pi, 7)[:-1])
def test_every_supporting_line_at_degree_zero(stadium, theta):
    u = (math.cos(theta), math.sin(theta))
    ell = Polynomial.linear(V, stadium_support(u), [-u[0], -u[1]], exact=False)
    assert pencil_qm_member(stadium, 0, ell) is not None


def test_certified_polynomials_are_nonnegative_on_samples(stadium):
    certs = {p: pencil_qm_member(stadium, 1, P(p)) for p in ("2+X", "4-X^2", "1.5-Y")}
    assert all(c is not None for c in certs.values())
    rng = np.random.default_rng(7)
    pts = rng.uniform([-2.1, -1.1], [2.1, 1.1], size=(400, 2))
    inside = [tuple(x) for x in pts if in_stadium(*x)][:100]
    assert len(inside) >= 50
    for x in inside[:20]:
        assert projection_member(stadium, x).kind is VerdictKind.IN
    for p in certs:
        assert min(P(p)(x) for x in inside) >= -1e-6


def test_degree_bound(stadium):
    with pytest.raises(ValueError):
        pencil_qm_member(stadium, 0, P("X^2"))
