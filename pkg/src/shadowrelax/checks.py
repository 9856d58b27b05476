"""Reproduction checks for the bundled examples.

Identity checks expand both sides of a certificate in exact rational
arithmetic, optionally reducing modulo power rules for adjoined algebraic
symbols, and pass only when the difference is the zero polynomial.  The
regression checks rerun small SDP queries whose answers are known in closed
form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .poly import Polynomial, PowerRule, parse_expression, reduce_mod_rules
from .relax import SemialgebraicSet, lasserre_point_member, lasserre_support, qm_member


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")

    def to_document(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _identity(name, residual: Polynomial) -> CheckResult:
    if residual.is_zero():
        return CheckResult(name, True, "exact, residual 0")
    return CheckResult(name, False, f"residual {residual}")


def tangent_certificate_residual(a, adjoined: bool = False) -> Polynomial:
    """``l_a - [(2a-1)(X-a)^2 + (Y - X^3) + (X-a)^2 (X+1)]`` with ``l_a = Y - 3a^2 X + 2a^3``.

    With ``adjoined`` the square root of ``2a - 1`` is a symbol ``t`` with
    ``t^2 -> 2a - 1``, and the first square is written as ``(t(X-a))^2``.
    """
    a = Fraction(a)
    if adjoined:
        V = ("X", "Y", "t")
        X, Y, t = Polynomial.generators(V)
        first = (t * (X - a)) ** 2
    else:
        V = ("X", "Y")
        X, Y = Polynomial.generators(V)
        first = (X - a) ** 2 * (2 * a - 1)
    ell = Y - X * (3 * a * a) + 2 * a ** 3
    diff = ell - (first + (Y - X ** 3) + (X - a) ** 2 * (X + 1))
    if adjoined:
        diff = reduce_mod_rules(diff, [PowerRule("t", 2, Polynomial.constant(V, 2 * a - 1))])
    return diff


def two_disk_identity_residual() -> Polynomial:
    """Tangent-line certificate for the two-disk quartic, in symbols ``c = cos``, ``s = sin``.

    Checks ``(8 - 8c) l = p + (X^2 + Y^2 - 2 + 2c)^2 + 4(1-c)(Y - s)^2
    + 4(-c)(X - c + 1)^2`` with ``l = 1 - c - cX - sY`` modulo ``s^2 -> 1 - c^2``.
    """
    V = ("X", "Y", "c", "s")
    X, Y, c, s = Polynomial.generators(V)
    p = parse_expression("-X^4-Y^4-2X^2Y^2+4X^2", V)
    ell = 1 - c - c * X - s * Y
    rhs = (p + (X ** 2 + Y ** 2 - 2 + 2 * c) ** 2 + 4 * (1 - c) * (Y - s) ** 2
           + 4 * (-c) * (X - c + 1) ** 2)
    diff = (8 - 8 * c) * ell - rhs
    return reduce_mod_rules(diff, [PowerRule("s", 2, 1 - c * c)])


def two_disk_leftmost_residual() -> Polynomial:
    """The same certificate at the leftmost point: ``16(2+X) = p + (X^2+Y^2-4)^2 + 8Y^2 + 4(X+2)^2``."""
    V = ("X", "Y")
    X, Y = Polynomial.generators(V)
    p = parse_expression("-X^4-Y^4-2X^2Y^2+4X^2", V)
    return 16 * (2 + X) - (p + (X ** 2 + Y ** 2 - 4) ** 2 + 8 * Y ** 2 + 4 * (X + 2) ** 2)


def identity_checks() -> list:
    return [
        _identity("tangent certificate a=1/2", tangent_certificate_residual(Fraction(1, 2))),
        _identity("tangent certificate a=1", tangent_certificate_residual(1)),
        _identity("tangent certificate a=3/4 with t^2=1/2",
                  tangent_certificate_residual(Fraction(3, 4), adjoined=True)),
        _identity("two-disk tangent identity mod s^2=1-c^2", two_disk_identity_residual()),
        _identity("two-disk identity at the leftmost point", two_disk_leftmost_residual()),
    ]


def _counterexample() -> SemialgebraicSet:
    V = ("X", "Y")
    return SemialgebraicSet(V, [parse_expression(s, V) for s in ("Y", "1-Y", "1+X", "Y-X^3")])


def _two_disks() -> SemialgebraicSet:
    V = ("X", "Y")
    return SemialgebraicSet(V, [parse_expression("-X^4-Y^4-2X^2Y^2+4X^2", V)])


def _check(name, fn: Callable) -> CheckResult:
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashed check is a failed check
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, bool(ok), detail)


def regression_checks() -> list:
    S = _counterexample()
    D = _two_disks()
    V = S.vars

    def qm_l1():
        cert = qm_member(S, 1, parse_expression("Y-3X+2", V))
        if cert is None:
            return False, "infeasible"
        return cert.replay() <= 1e-6, f"replay residual {cert.replay():.2e}"

    def point_in():
        v = lasserre_point_member(S, 1, (Fraction(1, 3), 0))
        return v.is_in, v.kind.value

    def point_out():
        v = lasserre_point_member(S, 1, (Fraction(2, 5), 0))
        return v.is_out and v.margin >= 0.01, f"{v.kind.value}, margin {v.margin:.4f}"

    def supports_d1():
        h1 = lasserre_support(S, 1, (-1, 0))
        h2 = lasserre_support(S, 1, (0, -1))
        return abs(h1 - 1) <= 1e-5 and abs(h2) <= 1e-6, f"h(-1,0)={h1:.8f}, h(0,-1)={h2:.2e}"

    def two_disk_supports():
        r = math.sqrt(0.5)
        want = {(1.0, 0.0): 2.0, (0.0, 1.0): 1.0, (r, r): 1 + r}
        got = {u: lasserre_support(D, 2, u) for u in want}
        worst = max(abs(got[u] - want[u]) for u in want)
        return worst <= 1e-4, f"max error {worst:.1e}"

    return [
        _check("Y-3X+2 has a degree-1 quadratic-module certificate", qm_l1),
        _check("(1/3,0) lies in the first relaxation", point_in),
        _check("(2/5,0) is separated from the first relaxation", point_out),
        _check("first-relaxation supports in directions (-1,0) and (0,-1)", supports_d1),
        _check("two-disk second relaxation equals the hull", two_disk_supports),
    ]


def run_all() -> list:
    return identity_checks() + regression_checks()
