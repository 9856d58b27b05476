import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowrelax.documents import load_document, parse_ideal, parse_set
from shadowrelax.poly import Polynomial, PolynomialError, parse_expression
from shadowrelax.relax import (
    IdealSpec,
    SemialgebraicSet,
    VerdictKind,
    lasserre_point_member,
    lasserre_support,
    pushforward_support,
    qm_member,
    sigma_member,
    theta_point_member,
    theta_support,
)

V = ("X", "Y")


def P(text, vars=V):
    return parse_expression(text, vars)


def bundled_set(name):
    return parse_set(load_document(name))


def bundled_ideal(name):
    return parse_ideal(load_document(name))


@pytest.fixture(scope="module")
def halfstrip():
    return bundled_set("counterexample")


@pytest.fixture(scope="module")
def circle():
    return bundled_ideal("circle")


# ---------------------------------------------------------------------------
# quadratic module membership


def test_tangent_line_certificate(halfstrip):
    cert = qm_member(halfstrip, 1, P("Y-3X+2"))
    assert cert is not None
    assert cert.residual <= 1e-8
    assert cert.replay() <= 1e-6
    for G in cert.grams:
        assert np.linalg.eigvalsh(G).min() >= -1e-8


def test_constant_one_at_degree_zero(halfstrip):
    cert = qm_member(halfstrip, 0, Polynomial.constant(V, 1))
    assert cert is not None and cert.replay() <= 1e-9


def test_translated_separator_is_not_certified():
    # after shifting X by 1/3, no Y - mu X - eps with mu, eps > 0 is in QM_1
    S = SemialgebraicSet(V, [P(s) for s in ("Y", "1-Y", "X+4/3", "Y-X^3-X^2-X/3-1/27")])
    assert qm_member(S, 1, P("Y-X/10-1/100")) is None


def test_negative_constant_is_never_certified(halfstrip):
    assert qm_member(halfstrip, 1, Polynomial.constant(V, -1)) is None


def test_certificate_sos_parts_match_target(halfstrip):
    cert = qm_member(halfstrip, 1, P("Y-3X+2"))
    total = Polynomial.zero(V, exact=False)
    for i, mult in enumerate(cert.multipliers):
        total = total + cert.sos(i) * mult.to_float()
    assert (total - cert.target.to_float()).coefficient_norm() <= 1e-7


def test_degree_too_high_is_rejected(halfstrip):
    with pytest.raises(ValueError):
        qm_member(halfstrip, 0, P("X^5"))


def test_wrong_ring_is_rejected(halfstrip):
    with pytest.raises(PolynomialError):
        qm_member(halfstrip, 1, parse_expression("X", ("X",)))


# ---------------------------------------------------------------------------
# Lasserre supports and membership


@pytest.mark.parametrize("u, expected", [((-1, 0), 1.0), ((0, -1), 0.0), ((0, 1), 1.0)])
def test_first_relaxation_supports(halfstrip, u, expected):
    assert lasserre_support(halfstrip, 1, u) == pytest.approx(expected, abs=1e-6)


def test_zero_direction_is_rejected(halfstrip):
    with pytest.raises(ValueError):
        lasserre_support(halfstrip, 1, (0, 0))


def test_added_point_is_in_first_relaxation(halfstrip):
    v = lasserre_point_member(halfstrip, 1, (Fraction(1, 3), 0))
    assert v.kind is VerdictKind.IN


def test_outside_point_has_verified_separator(halfstrip):
    v = lasserre_point_member(halfstrip, 1, (Fraction(2, 5), 0))
    assert v.kind is VerdictKind.OUT
    assert v.margin >= 0.01
    assert v.separator((0.4, 0.0)) == pytest.approx(-v.margin)
    # the separator is a member of the same truncated module
    assert qm_member(halfstrip, 1, v.separator) is not None
    # and proportional to the tangent line at a = 1/2
    c0 = v.separator.constant_term()
    cx, cy = v.separator.linear_coeffs()
    assert cx / cy == pytest.approx(-0.75, abs=1e-4)
    assert c0 / cy == pytest.approx(0.25, abs=1e-4)


def test_interior_point_is_in(halfstrip):
    v = lasserre_point_member(halfstrip, 1, (Fraction(-1, 2), Fraction(1, 2)))
    assert v.kind is VerdictKind.IN and not v.low_confidence


def test_far_point_is_out(halfstrip):
    v = lasserre_point_member(halfstrip, 2, (0, 3))
    assert v.kind is VerdictKind.OUT
    assert v.margin == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize(
    "u, expected",
    [((1, 0), 2.0), ((0, 1), 1.0), ((math.sqrt(0.5), math.sqrt(0.5)), 1 + math.sqrt(0.5))],
)
def test_two_disk_second_relaxation_is_the_hull(u, expected):
    assert lasserre_support(bundled_set("twodisks"), 2, u) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize("d, expected", [(2, 1 / 8), (3, 1 / 24)])
def test_cusp_relaxations_overshoot_the_origin(d, expected):
    # the hull has support 0 in direction (-1, 0); the relaxations do not
    h = lasserre_support(bundled_set("cusp"), d, (-1, 0))
    assert h > 1e-6
    assert h == pytest.approx(expected, abs=1e-5)


def test_cusp_first_relaxation_is_unbounded_to_the_left():
    # with one uniform degree bound the quartic multiplier is unusable at d = 1
    assert lasserre_support(bundled_set("cusp"), 1, (-1, 0)) == math.inf


# ---------------------------------------------------------------------------
# pushforward


@pytest.mark.parametrize("u, expected", [((0, 1), 1.0), ((0, -1), 0.0), ((1, 0), 1.0), ((-1, 0), 1.0)])
def test_moment_curve_image_of_interval(u, expected):
    X1 = ("X",)
    S = SemialgebraicSet(X1, [parse_expression("1-X^2", X1)])
    f = [parse_expression("X", X1), parse_expression("X^2", X1)]
    assert pushforward_support(S, 1, f, u) == pytest.approx(expected, abs=1e-6)


def test_pushforward_identity_map_matches_support(halfstrip):
    f = [P("X"), P("Y")]
    for u in [(1, 0), (-1, 1), (0, -1)]:
        assert pushforward_support(halfstrip, 1, f, u) == pytest.approx(
            lasserre_support(halfstrip, 1, u), abs=1e-6)


# ---------------------------------------------------------------------------
# ideals and theta bodies


@pytest.mark.parametrize("f, d, feasible", [
    ("1-X", 1, True), ("1+X", 1, True), ("0.99-X", 1, False), ("0.99-X", 2, False), ("1-Y", 2, True),
])
def test_circle_sigma_membership(circle, f, d, feasible):
    cert = sigma_member(circle, d, P(f))
    assert (cert is not None) == feasible
    if cert is not None:
        assert cert.replay() <= 1e-6


@pytest.mark.parametrize("u", [(1, 0), (-1, 0), (0, 1), (0, -1), (0.6, 0.8)])
def test_circle_first_theta_body_is_the_disk(circle, u):
    assert theta_support(circle, 1, u) == pytest.approx(1.0, abs=1e-5)


def test_sphere_cylinder_first_theta_body():
    assert theta_support(bundled_ideal("sphere_cylinder"), 1, (1, 0, 0)) == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize("x, kind", [((0, 0), VerdictKind.IN), ((Fraction(21, 20), 0), VerdictKind.OUT),
                                     ((Fraction(1, 2), Fraction(1, 2)), VerdictKind.IN)])
def test_circle_theta_membership(circle, x, kind):
    v = theta_point_member(circle, 1, x)
    assert v.kind is kind
    if kind is VerdictKind.OUT:
        assert v.margin >= 0.04
        assert v.separator(tuple(float(c) for c in x)) == pytest.approx(-v.margin)


def test_theta_point_on_variety_is_in():
    v = theta_point_member(bundled_ideal("sphere_cylinder"), 1, (2, 0, 0))
    assert v.kind is VerdictKind.IN


def test_zitrus_theta_body_overshoots():
    # the hull of the Zitrus surface has support 1 in direction (0, 1, 0)
    I = bundled_ideal("zitrus")
    assert theta_support(I, 3, (0, 1, 0)) > 1 + 1e-6


# ---------------------------------------------------------------------------
# properties

angles = st.floats(0, 2 * math.pi, allow_nan=False)


def sample_set(S, n=4000, box=2.5, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(n, S.nvars))
    return [p for p in pts if S.contains(tuple(p))]


@pytest.fixture(scope="module")
def twodisk_samples():
    return sample_set(bundled_set("twodisks"))


@settings(max_examples=8, deadline=None)
@given(angles)
def test_support_monotone_and_above_samples(twodisk_samples, theta):
    S = bundled_set("twodisks")
    u = (math.cos(theta), math.sin(theta))
    h1 = lasserre_support(S, 1, u)
    h2 = lasserre_support(S, 2, u)
    sampled = max(u[0] * x + u[1] * y for x, y in twodisk_samples)
    assert h1 >= h2 - 1e-6
    assert h2 >= sampled - 1e-6


@settings(max_examples=8, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5))
def test_points_of_set_are_in_relaxation(a, b):
    S = bundled_set("counterexample")
    x = (Fraction(a, 5), Fraction(b + 5, 10))
    if S.contains(x):
        assert lasserre_point_member(S, 1, x).kind is VerdictKind.IN


@settings(max_examples=6, deadline=None)
@given(st.floats(0.5, 1.0))
def test_tangent_family_is_certified(a):
    S = bundled_set("counterexample")
    ell = Polynomial.linear(V, 2 * a ** 3, [-3 * a * a, 1.0], exact=False)
    cert = qm_member(S, 1, ell)
    assert cert is not None and cert.replay() <= 1e-6


def test_ideal_requires_generators():
    with pytest.raises(PolynomialError):
        IdealSpec(V, [])


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("u, expected", [((1, 0, 0), 2.0), ((-1, 0, 0), 0.0), ((0, 1, 0), 1.0), ((0, 0, 1), 2.0)])
def test_two_generator_ideal_at_higher_degree(d, u, expected):
    # syzygies between the two quadrics make the multiplier products dependent
    assert theta_support(bundled_ideal("sphere_cylinder"), d, u) == pytest.approx(expected, abs=1e-5)


def test_reduced_basis_keeps_low_degree_monomials(circle):
    from shadowrelax.relax import _reduced_basis
    basis = _reduced_basis(circle, 2)
    assert len(basis) == 5
    assert (0, 0) in basis and (1, 0) in basis and (0, 1) in basis
    assert sigma_member(circle, 2, P("1-X")).replay() <= 1e-6


def test_degenerate_optimal_face_is_solved(halfstrip):
    # every point of the edge Y = 1 is optimal
    assert lasserre_support(halfstrip, 3, (0, 1)) == pytest.approx(1.0, abs=1e-6)
