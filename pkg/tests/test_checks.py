import math
import random
from fractions import Fraction

import pytest

from shadowrelax.poly import Polynomial

from shadowrelax.checks import (
    identity_checks,
    regression_checks,
    tangent_certificate_residual,
    two_disk_identity_residual,
    two_disk_leftmost_residual,
)


def quartic(x, y):
    return -x ** 4 - y ** 4 - 2 * x * x * y * y + 4 * x * x


# the oracles below evaluate both sides of each identity numerically,
# independent of the symbolic expansion in the library


def tangent_sides(a, x, y):
    lhs = y - 3 * a * a * x + 2 * a ** 3
    rhs = (2 * a - 1) * (x - a) ** 2 + (y - x ** 3) + (x - a) ** 2 * (x + 1)
    return lhs, rhs


@pytest.mark.parametrize("a", [Fraction(1, 2), Fraction(1), Fraction(3, 4), Fraction(5, 7)])
def test_tangent_identity_holds_pointwise(a):
    rng = random.Random(0)
    for _ in range(20):
        x, y = Fraction(rng.randint(-50, 50), 7), Fraction(rng.randint(-50, 50), 11)
        lhs, rhs = tangent_sides(a, x, y)
        assert lhs == rhs


@pytest.mark.parametrize("a, adjoined", [(Fraction(1, 2), False), (1, False), (Fraction(3, 4), True),
                                         (Fraction(5, 7), False), (Fraction(5, 7), True)])
def test_tangent_residual_is_zero(a, adjoined):
    assert tangent_certificate_residual(a, adjoined).is_zero()


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.0, 2.9, math.pi])
def test_two_disk_identity_holds_pointwise(theta):
    c, s = math.cos(theta), math.sin(theta)
    for x, y in [(0.1, 0.2), (-1.3, 0.7), (2.0, -1.0)]:
        lhs = (8 - 8 * c) * (1 - c - c * x - s * y)
        rhs = (quartic(x, y) + (x * x + y * y - 2 + 2 * c) ** 2 + 4 * (1 - c) * (y - s) ** 2
               + 4 * (-c) * (x - c + 1) ** 2)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_two_disk_residuals_are_zero():
    assert two_disk_identity_residual().is_zero()
    assert two_disk_leftmost_residual().is_zero()


def test_perturbed_identity_is_detected():
    r = tangent_certificate_residual(Fraction(1, 2))
    assert not (r + Polynomial.constant(r.vars, Fraction(1, 10**12))).is_zero()
    _, _, c, s = Polynomial.generators(("X", "Y", "c", "s"))
    # without the relation s^2 = 1 - c^2 the two-disk identity does not close
    assert not (two_disk_identity_residual() + s * s + c * c - 1).is_zero()


def test_all_checks_pass():
    results = identity_checks() + regression_checks()
    assert len(results) == 10
    failed = [r.line() for r in results if not r.passed]
    assert not failed
