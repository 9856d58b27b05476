"""Detectors for obstructions to exact Lasserre relaxations and theta bodies.

Each check evaluates gradients of the defining polynomials at a point and
compares them with a line or a witness direction.  With exact polynomials and
rational coordinates every comparison is an exact test against zero;
otherwise a tolerance of ``1e-9`` applies.  Hypotheses that cannot be
computed (for instance that a point lies on the relative boundary of the
convex hull) are taken from the caller and listed as asserted in the report.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .poly import Polynomial, evaluate
from .relax import IdealSpec, SemialgebraicSet

FLOAT_TOL = 1e-9
DEFAULT_SAMPLES = 1001
DEFAULT_LINE_BOX = 10.0


class ObstructionVerdict(str, enum.Enum):
    OBSTRUCTED = "Obstructed"
    NOT_OBSTRUCTED = "NotObstructed"
    NOT_APPLICABLE = "NotApplicable"
    WITNESS_INVALID = "WitnessInvalid"


@dataclass
class GradientRow:
    index: int
    polynomial: str
    value: object
    gradient: tuple
    inner: object = None

    def to_document(self) -> dict:
        doc = {
            "index": self.index,
            "polynomial": self.polynomial,
            "value": _num(self.value),
            "gradient": [_num(g) for g in self.gradient],
        }
        if self.inner is not None:
            doc["inner_product"] = _num(self.inner)
        return doc


@dataclass
class ObstructionReport:
    verdict: ObstructionVerdict
    check: str
    point: tuple
    exact: bool
    direction: tuple | None = None
    active: list = field(default_factory=list)
    gradients: list = field(default_factory=list)
    verified: list = field(default_factory=list)
    asserted: list = field(default_factory=list)
    caveats: list = field(default_factory=list)
    message: str = ""

    @property
    def obstructed(self) -> bool:
        return self.verdict is ObstructionVerdict.OBSTRUCTED

    def to_document(self) -> dict:
        doc = {
            "verdict": self.verdict.value,
            "check": self.check,
            "point": [_num(v) for v in self.point],
            "mode": "exact" if self.exact else "float",
            "active": list(self.active),
            "gradients": [row.to_document() for row in self.gradients],
            "verified": list(self.verified),
            "asserted": list(self.asserted),
            "caveats": list(self.caveats),
        }
        if self.direction is not None:
            doc["direction"] = [_num(v) for v in self.direction]
        if self.message:
            doc["message"] = self.message
        return doc


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v.numerator)
    if isinstance(v, int):
        return v
    return float(v)


def _text(pt) -> str:
    return "(" + ", ".join(str(v) for v in pt) + ")"


def _is_rational(v) -> bool:
    return isinstance(v, Rational) and not isinstance(v, bool)


def _exact_mode(polys, *points) -> bool:
    return all(p.exact for p in polys) and all(_is_rational(v) for pt in points for v in pt)


def _coords(pt, n, exact, what) -> tuple:
    pt = tuple(pt)
    if len(pt) != n:
        raise ValueError(f"{what} has {len(pt)} coordinates, expected {n}")
    return tuple(Fraction(v) for v in pt) if exact else tuple(float(v) for v in pt)


def _is_zero(v, exact) -> bool:
    return v == 0 if exact else abs(float(v)) <= FLOAT_TOL


def _grad_at(p: Polynomial, a, exact) -> tuple:
    return tuple(evaluate(g if exact else g.to_float(), a) for g in p.gradient())


def _dot(u, v):
    return sum((x * y for x, y in zip(u, v)), Fraction(0) if all(map(_is_rational, u + v)) else 0.0)


def _require_in_set(S: SemialgebraicSet, a, exact):
    values = [evaluate(p if exact else p.to_float(), a) for p in S.inequalities]
    bad = [i for i, v in enumerate(values) if (v < 0 if exact else v < -FLOAT_TOL)]
    if bad:
        raise ValueError(f"point {_text(a)} violates inequalities {bad}; it is not in S")
    return values


def _active_rows(S, a, exact, values, direction=None):
    active, rows = [], []
    for i, (p, v) in enumerate(zip(S.inequalities, values)):
        if not _is_zero(v, exact):
            continue
        grad = _grad_at(p, a, exact)
        inner = None if direction is None else _dot(grad, direction)
        active.append(i)
        rows.append(GradientRow(i, str(p), v, grad, inner))
    return active, rows


def _relative_interior_sampled(S, a, direction, box, n_samples) -> bool:
    """True if at least two consecutive samples of the line lie in ``S``.

    The line ``a + s * dir`` is sampled at ``n_samples`` equally spaced
    parameters covering the part of the line inside the cube ``|x_i| <= box``.
    """
    a = [float(v) for v in a]
    d = [float(v) for v in direction]
    lo, hi = -math.inf, math.inf
    for ai, di in zip(a, d):
        if di:
            s1, s2 = (-box - ai) / di, (box - ai) / di
            lo, hi = max(lo, min(s1, s2)), min(hi, max(s1, s2))
    if not lo < hi:
        return False
    polys = [p.to_float() for p in S.inequalities]
    run = 0
    for k in range(n_samples):
        s = lo + (hi - lo) * k / (n_samples - 1)
        x = [ai + s * di for ai, di in zip(a, d)]
        if all(evaluate(p, x) >= -FLOAT_TOL for p in polys):
            run += 1
            if run >= 2:
                return True
        else:
            run = 0
    return False


def line_obstruction(S: SemialgebraicSet, a: Sequence, direction: Sequence,
                     box: float = DEFAULT_LINE_BOX, n_samples: int = DEFAULT_SAMPLES) -> ObstructionReport:
    """Line-gradient criterion: every active gradient at ``a`` is orthogonal to the line.

    ``Obstructed`` needs (1) a sampled segment of the line inside ``S`` and
    (2) ``grad p_i(a) . dir = 0`` for each active ``p_i``.  That ``a`` lies on
    the relative boundary of ``conv(S)`` intersected with the line is taken on
    trust from the caller.
    """
    exact = _exact_mode(S.inequalities, a, direction)
    a = _coords(a, S.nvars, exact, "point")
    direction = _coords(direction, S.nvars, exact, "direction")
    if all(v == 0 for v in direction):
        raise ValueError("direction must be nonzero")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    values = _require_in_set(S, a, exact)
    active, rows = _active_rows(S, a, exact, values, direction)
    report = ObstructionReport(
        ObstructionVerdict.NOT_APPLICABLE, "line", a, exact, direction, active, rows,
        verified=["point lies in S"],
        asserted=["point lies on the relative boundary of conv(S) along the line"],
    )
    if not _relative_interior_sampled(S, a, direction, box, n_samples):
        report.message = "the line meets S in no sampled segment (empty relative interior)"
        return report
    report.verified.append(f"line meets S in a segment ({n_samples} samples, box {box:g})")
    if not active:
        report.message = "no constraint is active at the point"
        return report
    skew = [row.index for row in rows if not _is_zero(row.inner, exact)]
    if skew:
        report.verdict = ObstructionVerdict.NOT_OBSTRUCTED
        report.message = f"gradients of active constraints {skew} are not orthogonal to the line"
        return report
    report.verdict = ObstructionVerdict.OBSTRUCTED
    report.verified.append("every active gradient is orthogonal to the line")
    return report


def singular_point_obstruction(S: SemialgebraicSet, a: Sequence) -> ObstructionReport:
    """Obstructed when every constraint active at ``a`` has a vanishing gradient there."""
    exact = _exact_mode(S.inequalities, a)
    a = _coords(a, S.nvars, exact, "point")
    values = _require_in_set(S, a, exact)
    active, rows = _active_rows(S, a, exact, values)
    report = ObstructionReport(
        ObstructionVerdict.NOT_APPLICABLE, "singular", a, exact, None, active, rows,
        verified=["point lies in S"],
        asserted=["point lies on the boundary of conv(S)"],
    )
    if not active:
        report.message = "no constraint is active, so the point is interior to S"
        return report
    regular = [row.index for row in rows if not all(_is_zero(g, exact) for g in row.gradient)]
    if regular:
        report.verdict = ObstructionVerdict.NOT_OBSTRUCTED
        report.message = f"active constraints {regular} have nonzero gradients"
        return report
    report.verdict = ObstructionVerdict.OBSTRUCTED
    report.verified.append("every active gradient vanishes")
    return report


def nonexposed_face_check(S: SemialgebraicSet, a: Sequence, b: Sequence, **line_opts) -> ObstructionReport:
    """Run :func:`line_obstruction` on the line through ``a`` and ``b``.

    ``a`` should be a relative-interior point of a face ``F`` and ``b`` one of
    a larger face containing it; both facts are taken on trust.
    """
    exact = _exact_mode(S.inequalities, a, b)
    a = _coords(a, S.nvars, exact, "point a")
    b = _coords(b, S.nvars, exact, "point b")
    if a == b:
        raise ValueError("a and b must differ")
    _require_in_set(S, b, exact)
    report = line_obstruction(S, a, tuple(y - x for x, y in zip(a, b)), **line_opts)
    report.check = "nonexposed"
    report.verified.append("point b lies in S")
    report.asserted.append("a and b are relative-interior points of nested faces")
    return report


def convex_singular_check(I: IdealSpec, p: Sequence, q: Sequence,
                          real_radical: bool = False) -> ObstructionReport:
    """Verify that the witness ``q`` lies in the tangent space of the variety at ``p``.

    ``Obstructed`` iff ``(q - p) . grad g_j(p) = 0`` for every generator.  The
    caller vouches that ``q`` is a relative-interior point of the hull of the
    real variety and ``p`` a boundary point.  A failed test means only that
    this witness does not work, so the verdict is then ``WitnessInvalid``.
    """
    exact = _exact_mode(I.generators, p, q)
    p = _coords(p, I.nvars, exact, "point")
    q = _coords(q, I.nvars, exact, "witness")
    values = [evaluate(g if exact else g.to_float(), p) for g in I.generators]
    off = [j for j, v in enumerate(values) if not _is_zero(v, exact)]
    if off:
        raise ValueError(f"point {_text(p)} is not on the variety (generators {off} do not vanish)")
    w = tuple(y - x for x, y in zip(p, q))
    rows = []
    for j, (g, v) in enumerate(zip(I.generators, values)):
        grad = _grad_at(g, p, exact)
        rows.append(GradientRow(j, str(g), v, grad, _dot(grad, w)))
    report = ObstructionReport(
        ObstructionVerdict.WITNESS_INVALID, "convex-singular", p, exact, w,
        list(range(len(rows))), rows,
        verified=["point lies on the real variety"],
        asserted=["witness lies in the relative interior of the hull of the variety",
                  "point lies on the boundary of that hull"],
    )
    if not real_radical:
        report.caveats.append(
            "tangent space computed from the given generators; "
            "they were not asserted to generate the vanishing ideal")
    else:
        report.asserted.append("generators generate the vanishing ideal of the real variety")
    bad = [row.index for row in rows if not _is_zero(row.inner, exact)]
    if bad:
        report.message = f"witness direction is not tangent for generators {bad}"
        return report
    report.verdict = ObstructionVerdict.OBSTRUCTED
    report.verified.append("witness direction lies in the tangent space")
    return report
