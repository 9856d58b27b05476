"""Truncated quadratic modules, Lasserre relaxations and theta bodies.

``QM(p)_d`` is the cone of polynomials ``s_0 + s_1 p_1 + ... + s_r p_r`` where
every ``s_i`` is a sum of squares of polynomials of degree at most ``d`` (the
same bound for every multiplier).  Its affine-linear members cut out the
relaxation ``L(p)_d``.  ``Sigma(d, I)`` replaces the multipliers by a single
sum of squares plus an element of the ideal; its linear members cut out the
theta body ``TH(I)_d``.

Each query becomes one Gram-matrix SDP (see :mod:`shadowrelax.gram`).
Supports are returned as floats (``inf`` when the relaxation is unbounded in
that direction); memberships return a :class:`Verdict`; certificate queries
return a certificate object or ``None`` when the SDP is infeasible.  Solver
trouble raises :class:`~shadowrelax.sdp.SolverInaccurate` or yields an
``Inaccurate`` verdict, never a guess.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gram import GramProgram
from .poly import Polynomial, PolynomialError, monomial_basis
from .sdp import SolverInaccurate, Status, psd_project

DEFAULT_MEMBER_TOL = 1e-7


# ---------------------------------------------------------------------------
# problem types


@dataclass(frozen=True)
class SemialgebraicSet:
    """The set ``{x : p_i(x) >= 0 for all i}``."""

    vars: tuple
    inequalities: tuple

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        if not self.inequalities:
            raise PolynomialError("a semialgebraic set needs at least one inequality")
        for p in self.inequalities:
            if p.vars != self.vars:
                raise PolynomialError(f"inequality {p} is not over {self.vars}")
        if len({p.exact for p in self.inequalities}) > 1:
            raise PolynomialError("inequalities mix exact and float coefficients")

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def nu(self) -> int:
        """Largest degree among the defining polynomials."""
        return max(p.degree() for p in self.inequalities)

    def values(self, x) -> list:
        return [p(x) for p in self.inequalities]

    def contains(self, x, tol=0) -> bool:
        return all(v >= -tol for v in self.values(x))


@dataclass(frozen=True)
class IdealSpec:
    """Generators ``g_1, ..., g_k`` of an ideal and its real variety."""

    vars: tuple
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise PolynomialError("an ideal needs at least one generator")
        for g in self.generators:
            if g.vars != self.vars:
                raise PolynomialError(f"generator {g} is not over {self.vars}")

    @property
    def nvars(self) -> int:
        return len(self.vars)

    def on_variety(self, x, tol=0) -> bool:
        return all(abs(g(x)) <= tol for g in self.generators)


class VerdictKind(str, enum.Enum):
    IN = "In"
    OUT = "Out"
    NOT_APPLICABLE = "NotApplicable"
    INACCURATE = "Inaccurate"


@dataclass
class Verdict:
    """Outcome of a point-membership query.

    ``Out`` always carries a linear ``separator`` with unit gradient that is
    nonnegative on the relevant set and takes the value ``-margin`` at the
    query point.  For ``In`` the margin is minus the normalized optimum, so it
    is zero or negative and more negative deeper inside.
    """

    kind: VerdictKind
    margin: float = math.nan
    separator: Polynomial | None = None
    certificate: object = None
    low_confidence: bool = False
    message: str = ""

    @property
    def is_in(self) -> bool:
        return self.kind is VerdictKind.IN

    @property
    def is_out(self) -> bool:
        return self.kind is VerdictKind.OUT

    def to_document(self) -> dict:
        doc = {"verdict": self.kind.value, "low_confidence": self.low_confidence}
        if not math.isnan(self.margin):
            doc["margin"] = self.margin
        if self.separator is not None:
            doc["separator"] = str(self.separator)
            doc["separator_coeffs"] = [float(self.separator.constant_term())] + [
                float(c) for c in self.separator.linear_coeffs()
            ]
        if self.certificate is not None and hasattr(self.certificate, "to_document"):
            doc["certificate"] = self.certificate.to_document()
        if self.message:
            doc["message"] = self.message
        return doc


def _rational_psd(G) -> list:
    """PSD projection of ``G`` with entries converted exactly to fractions."""
    P = psd_project(G)
    return [[Fraction(float(v)) for v in row] for row in P]


def _exact_gram_poly(vars, basis, G) -> Polynomial:
    terms: dict = {}
    for i, mi in enumerate(basis):
        for j, mj in enumerate(basis):
            if G[i][j]:
                m = tuple(a + b for a, b in zip(mi, mj))
                terms[m] = terms.get(m, 0) + G[i][j]
    return Polynomial(vars, terms, exact=True)


def _float_gram_poly(vars, basis, G) -> Polynomial:
    terms: dict = {}
    for i, mi in enumerate(basis):
        for j, mj in enumerate(basis):
            if G[i, j]:
                m = tuple(a + b for a, b in zip(mi, mj))
                terms[m] = terms.get(m, 0.0) + float(G[i, j])
    return Polynomial(vars, terms, exact=False)


def _monomial_names(vars, basis) -> list:
    out = []
    for m in basis:
        out.append(str(Polynomial.monomial(vars, m)) if any(m) else "1")
    return out


@dataclass
class QMCertificate:
    """Gram matrices ``G_0..G_r`` with ``target = sum_i (v^T G_i v) * mult_i``.

    ``multipliers[0]`` is the constant 1 and ``multipliers[i]`` is ``p_i``.
    """

    degree: int
    vars: tuple
    basis: list
    multipliers: list
    grams: list
    target: Polynomial
    residual: float

    def sos(self, i: int) -> Polynomial:
        return _float_gram_poly(self.vars, self.basis, self.grams[i])

    def replay(self) -> float:
        """Exact residual after projecting each Gram to PSD and rationalizing."""
        total = self.target.to_exact()
        for G, mult in zip(self.grams, self.multipliers):
            sigma = _exact_gram_poly(self.vars, self.basis, _rational_psd(G))
            total = total - sigma * mult.to_exact()
        return total.coefficient_norm()

    def to_document(self) -> dict:
        return {
            "kind": "qm",
            "degree": self.degree,
            "basis": _monomial_names(self.vars, self.basis),
            "multipliers": [str(m) for m in self.multipliers],
            "grams": [np.asarray(G).tolist() for G in self.grams],
            "target": str(self.target),
            "residual": self.residual,
        }


@dataclass
class SigmaCertificate:
    """``target = v^T G v + sum_j h_j g_j`` with ``h_j`` free polynomials."""

    degree: int
    vars: tuple
    basis: list
    gram: np.ndarray
    generators: list
    ideal_coeffs: list
    target: Polynomial
    residual: float

    def sos(self) -> Polynomial:
        return _float_gram_poly(self.vars, self.basis, self.gram)

    def replay(self) -> float:
        total = self.target.to_exact()
        total = total - _exact_gram_poly(self.vars, self.basis, _rational_psd(self.gram))
        for h, g in zip(self.ideal_coeffs, self.generators):
            total = total - h.to_exact() * g.to_exact()
        return total.coefficient_norm()

    def to_document(self) -> dict:
        return {
            "kind": "sigma",
            "degree": self.degree,
            "basis": _monomial_names(self.vars, self.basis),
            "gram": np.asarray(self.gram).tolist(),
            "generators": [str(g) for g in self.generators],
            "ideal_coeffs": [str(h) for h in self.ideal_coeffs],
            "target": str(self.target),
            "residual": self.residual,
        }


# ---------------------------------------------------------------------------
# program builders


def _check_degree(d):
    if not isinstance(d, int) or d < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {d!r}")


def _direction(u, n) -> list:
    u = [float(v) for v in u]
    if len(u) != n:
        raise ValueError(f"direction has {len(u)} entries, expected {n}")
    if not any(u):
        raise ValueError("direction must be nonzero")
    return u


def _linear(vars, const, coeffs) -> Polynomial:
    return Polynomial.linear(vars, float(const), [float(c) for c in coeffs], exact=False)


class _QMProgram:
    """``sum_i sigma_i p_i (+ free terms) = target`` over QM(p)_d."""

    def __init__(self, S: SemialgebraicSet, d: int, target=None):
        _check_degree(d)
        self.S = S
        self.d = d
        self.basis = monomial_basis(S.nvars, d)
        self.multipliers = [Polynomial.constant(S.vars, 1, exact=S.inequalities[0].exact)]
        self.multipliers += list(S.inequalities)
        self.prog = GramProgram()
        self.ident = self.prog.identity(target, "qm")
        self.blocks = []
        for i, mult in enumerate(self.multipliers):
            b = self.prog.block(f"sigma{i}", len(self.basis))
            self.prog.add_sos(self.ident, b, self.basis, None if i == 0 else mult)
            self.blocks.append(b)

    def add_linear_unknown(self):
        """Free coefficients of a linear polynomial ``l`` with ``sum sigma_i p_i - l = target``."""
        n = self.S.nvars
        idx = []
        for k in range(n + 1):
            f = self.prog.free_var(f"l{k}")
            coeffs = [0.0] * n
            const = 0.0
            if k == 0:
                const = -1.0
            else:
                coeffs[k - 1] = -1.0
            self.prog.add_free(self.ident, f, _linear(self.S.vars, const, coeffs))
            idx.append(f)
        return idx

    def certificate(self, result, target) -> QMCertificate:
        grams = [result.grams[f"sigma{i}"] for i in range(len(self.multipliers))]
        return QMCertificate(
            degree=self.d,
            vars=self.S.vars,
            basis=self.basis,
            multipliers=self.multipliers,
            grams=grams,
            target=target,
            residual=self.prog.residual(result.grams, result.free),
        )


def _truncated_ideal_span(I: IdealSpec, top: int):
    """``(j, m, m*g_j)`` for all monomials ``m`` with ``deg(m*g_j) <= top``."""
    out = []
    for j, g in enumerate(I.generators):
        room = top - g.degree()
        if room < 0:
            continue
        for m in monomial_basis(I.nvars, room):
            out.append((j, m, Polynomial.monomial(I.vars, m, 1, g.exact) * g))
    return out


def _echelon(polys, order, exact):
    """Row-reduce coefficient vectors over ``order``.

    Returns the indices of a maximal independent subset of ``polys`` and the
    pivot monomials.  Columns are eliminated in the given order.
    """
    zero = Fraction(0) if exact else 0.0
    mat = [[Fraction(p.terms.get(m, 0)) if exact else float(p.terms.get(m, 0)) for m in order]
           for p in polys]
    ids = list(range(len(polys)))
    pivots = []
    r = 0
    for c in range(len(order)):
        best = max(range(r, len(mat)), key=lambda i: abs(mat[i][c]), default=None)
        if best is None:
            break
        if mat[best][c] == zero or (not exact and abs(mat[best][c]) <= 1e-12):
            continue
        mat[r], mat[best] = mat[best], mat[r]
        ids[r], ids[best] = ids[best], ids[r]
        for i in range(r + 1, len(mat)):
            f = mat[i][c] / mat[r][c]
            if f != zero:
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(order[c])
        r += 1
    return sorted(ids[:r]), pivots


def _reduced_basis(I: IdealSpec, d: int) -> list:
    """Degree-``d`` monomials minus the pivots of ``span{m*g_j : deg <= d}``.

    Any ``q`` of degree ``<= d`` splits as ``w + r`` with ``w`` in that span
    and ``r`` supported on the kept monomials, and ``q^2 - r^2 = w(w + 2r)``
    lies in the degree-``2d`` span of the generators.  Dropping the pivots
    therefore loses no sums of squares, and it removes the recession
    directions ``G + t*w w^T`` that leave the SDP without a strictly
    feasible dual.
    """
    basis = monomial_basis(I.nvars, d)
    rows = [poly for _, _, poly in _truncated_ideal_span(I, d)]
    if not rows:
        return basis
    # eliminate the highest monomials first so low-degree ones stay in the basis
    _, pivots = _echelon(rows, list(reversed(basis)), _exact_ideal(I))
    return [m for m in basis if m not in set(pivots)]


def _exact_ideal(I: IdealSpec) -> bool:
    return all(g.exact for g in I.generators)


def _independent_span(I: IdealSpec, top: int):
    """``_truncated_ideal_span`` without products made redundant by syzygies."""
    span = _truncated_ideal_span(I, top)
    if len(I.generators) < 2 or not span:
        return span
    keep, _ = _echelon([poly for _, _, poly in span], monomial_basis(I.nvars, top), _exact_ideal(I))
    return [span[i] for i in keep]


class _SigmaProgram:
    """``sigma + sum_j h_j g_j (+ free terms) = target`` over Sigma(d, I)."""

    def __init__(self, I: IdealSpec, d: int, target=None, top=None):
        _check_degree(d)
        self.I = I
        self.d = d
        self.basis = _reduced_basis(I, d)
        self.prog = GramProgram()
        self.ident = self.prog.identity(target, "sigma")
        self.block = self.prog.block("sigma", len(self.basis))
        self.prog.add_sos(self.ident, self.block, self.basis)
        self.span = _independent_span(I, 2 * d if top is None else top)
        self.h_idx = []
        for j, m, poly in self.span:
            f = self.prog.free_var(("h", j, m))
            self.prog.add_free(self.ident, f, poly)
            self.h_idx.append(f)

    def add_linear_unknown(self):
        n = self.I.nvars
        idx = []
        for k in range(n + 1):
            f = self.prog.free_var(f"l{k}")
            coeffs = [0.0] * n
            const = -1.0 if k == 0 else 0.0
            if k:
                coeffs[k - 1] = -1.0
            self.prog.add_free(self.ident, f, _linear(self.I.vars, const, coeffs))
            idx.append(f)
        return idx

    def certificate(self, result, target) -> SigmaCertificate:
        hs = []
        for j in range(len(self.I.generators)):
            terms = {}
            for (jj, m, _), f in zip(self.span, self.h_idx):
                if jj == j:
                    terms[m] = result.free[self.prog.free_names[f]]
            hs.append(Polynomial(self.I.vars, terms, exact=False))
        return SigmaCertificate(
            degree=self.d,
            vars=self.I.vars,
            basis=self.basis,
            gram=result.grams["sigma"],
            generators=list(self.I.generators),
            ideal_coeffs=hs,
            target=target,
            residual=self.prog.residual(result.grams, result.free),
        )


def _raise_inaccurate(result, what):
    msg = result.solution.message if result.solution is not None else ""
    raise SolverInaccurate(f"{what}: solver could not decide ({msg})")


# ---------------------------------------------------------------------------
# QM(p)_d and L(p)_d


def qm_member(S: SemialgebraicSet, d: int, f: Polynomial, **solver_opts) -> QMCertificate | None:
    """Certificate that ``f`` lies in ``QM(p)_d``, or None if it provably does not."""
    if f.vars != S.vars:
        raise PolynomialError("f must be over the same variables as S")
    _check_degree(d)
    if f.degree() > 2 * d + S.nu:
        raise ValueError(f"deg f = {f.degree()} exceeds 2d + nu = {2 * d + S.nu}")
    qp = _QMProgram(S, d, f)
    result = qp.prog.solve("feasibility", **solver_opts)
    if result.status is Status.INFEASIBLE:
        return None
    if not result.ok:
        _raise_inaccurate(result, "qm_member")
    return qp.certificate(result, f)


def lasserre_support(S: SemialgebraicSet, d: int, u: Sequence, **solver_opts) -> float:
    """``min {t : t - <u, X> in QM(p)_d}``, the support value of ``L(p)_d`` at ``u``.

    Returns ``inf`` when no ``t`` works (the relaxation is unbounded along ``u``).
    """
    u = _direction(u, S.nvars)
    qp = _QMProgram(S, d, _linear(S.vars, 0.0, [-c for c in u]))
    t = qp.prog.free_var("t")
    qp.prog.add_free(qp.ident, t, Polynomial.constant(S.vars, -1.0, exact=False))
    qp.prog.objective_free(t, 1.0)
    return _support_value(qp.prog.solve("minimize", **solver_opts), "lasserre_support")


def _support_value(result, what) -> float:
    if result.status is Status.INFEASIBLE:
        return math.inf
    if result.status is Status.UNBOUNDED:
        return -math.inf
    if not result.ok:
        _raise_inaccurate(result, what)
    return float(result.solution.objective)


def _point(x, n) -> list:
    x = list(x)
    if len(x) != n:
        raise ValueError(f"point has {len(x)} coordinates, expected {n}")
    return [float(v) for v in x]


def _membership_verdict(result, l_idx, prog, vars, x, tol, make_cert) -> Verdict:
    if result.status is Status.UNBOUNDED and result.solution.certificate is not None:
        sol = result.solution
        free = sol.certificate[result.problem.free_slice]
        coeffs = [free[i] for i in l_idx]
        sep = _linear(vars, coeffs[0], coeffs[1:])
        return Verdict(VerdictKind.OUT, margin=math.inf, separator=sep,
                       message="separating cone unbounded below at this point")
    if not result.ok:
        msg = result.solution.message if result.solution is not None else ""
        return Verdict(VerdictKind.INACCURATE, message=msg)
    value = float(result.solution.objective)
    coeffs = [result.free[prog.free_names[i]] for i in l_idx]
    if value < -tol:
        raw = _linear(vars, coeffs[0], coeffs[1:])
        sep, margin = unit_separator(raw, x)
        return Verdict(VerdictKind.OUT, margin=margin, separator=sep,
                       certificate=make_cert(result, raw),
                       message=f"normalized optimum {value:.3e}")
    return Verdict(VerdictKind.IN, margin=-value, low_confidence=value < tol,
                   message=f"normalized optimum {value:.3e}")


def unit_separator(ell: Polynomial, x) -> tuple:
    """Rescale a linear ``ell`` to a unit gradient; return it with ``-ell(x)``.

    The returned margin is then the Euclidean distance from ``x`` to the
    half-space ``{ell >= 0}``.  A constant ``ell`` is left unscaled.
    """
    grad = math.sqrt(sum(float(c) ** 2 for c in ell.linear_coeffs()))
    if grad > 1e-12:
        ell = ell.to_float().scale(1.0 / grad)
    return ell, -float(ell(x))


def lasserre_point_member(S: SemialgebraicSet, d: int, x, tol: float = DEFAULT_MEMBER_TOL,
                          **solver_opts) -> Verdict:
    """Decide ``x in L(p)_d`` by minimizing ``l(x)`` over linear ``l`` in ``QM(p)_d``.

    The Gram cone is normalized by ``sum_i trace(G_i) = 1``.
    """
    xs = _point(x, S.nvars)
    qp = _QMProgram(S, d, None)
    l_idx = qp.add_linear_unknown()
    qp.prog.add_trace_row(qp.blocks)
    qp.prog.objective_free(l_idx[0], 1.0)
    for k, xv in enumerate(xs):
        qp.prog.objective_free(l_idx[k + 1], xv)
    result = qp.prog.solve("minimize", **solver_opts)
    return _membership_verdict(result, l_idx, qp.prog, S.vars, xs, tol, qp.certificate)


def pushforward_support(S: SemialgebraicSet, d: int, f: Sequence[Polynomial], u: Sequence,
                        **solver_opts) -> float:
    """Support value at ``u`` of the hull of ``f(S)`` relaxed through ``QM(p)_d``.

    Computes ``min {t : t - sum_i u_i f_i in QM(p)_d}``.
    """
    f = list(f)
    u = _direction(u, len(f))
    combo = Polynomial.zero(S.vars, exact=False)
    for ui, fi in zip(u, f):
        if fi.vars != S.vars:
            raise PolynomialError("map components must be over the variables of S")
        combo = combo + fi.to_float().scale(ui)
    if combo.degree() > 2 * d + S.nu:
        raise ValueError(f"deg(sum u_i f_i) = {combo.degree()} exceeds 2d + nu")
    qp = _QMProgram(S, d, -combo)
    t = qp.prog.free_var("t")
    qp.prog.add_free(qp.ident, t, Polynomial.constant(S.vars, -1.0, exact=False))
    qp.prog.objective_free(t, 1.0)
    return _support_value(qp.prog.solve("minimize", **solver_opts), "pushforward_support")


# ---------------------------------------------------------------------------
# Sigma(d, I) and TH(I)_d


def sigma_member(I: IdealSpec, d: int, f: Polynomial, **solver_opts) -> SigmaCertificate | None:
    """Certificate that ``f - sigma`` lies in the truncated ideal span, or None.

    The ideal part ranges over ``span{m * g_j : deg(m * g_j) <= max(2d, deg f)}``.
    """
    if f.vars != I.vars:
        raise PolynomialError("f must be over the same variables as I")
    _check_degree(d)
    if f.degree() > 2 * d:
        raise ValueError(f"deg f = {f.degree()} exceeds 2d = {2 * d}")
    sp = _SigmaProgram(I, d, f, top=max(2 * d, f.degree()))
    result = sp.prog.solve("feasibility", **solver_opts)
    if result.status is Status.INFEASIBLE:
        return None
    if not result.ok:
        _raise_inaccurate(result, "sigma_member")
    return sp.certificate(result, f)


def theta_support(I: IdealSpec, d: int, u: Sequence, **solver_opts) -> float:
    """``min {t : t - <u, X> in Sigma(d, I)}``; ``inf`` if no ``t`` works."""
    u = _direction(u, I.nvars)
    sp = _SigmaProgram(I, d, _linear(I.vars, 0.0, [-c for c in u]))
    t = sp.prog.free_var("t")
    sp.prog.add_free(sp.ident, t, Polynomial.constant(I.vars, -1.0, exact=False))
    sp.prog.objective_free(t, 1.0)
    return _support_value(sp.prog.solve("minimize", **solver_opts), "theta_support")


def theta_point_member(I: IdealSpec, d: int, x, tol: float = DEFAULT_MEMBER_TOL,
                       **solver_opts) -> Verdict:
    """Decide ``x in TH(I)_d``; the sum of squares is normalized to trace one."""
    xs = _point(x, I.nvars)
    sp = _SigmaProgram(I, d, None)
    l_idx = sp.add_linear_unknown()
    sp.prog.add_trace_row([sp.block])
    sp.prog.objective_free(l_idx[0], 1.0)
    for k, xv in enumerate(xs):
        sp.prog.objective_free(l_idx[k + 1], xv)
    result = sp.prog.solve("minimize", **solver_opts)
    return _membership_verdict(result, l_idx, sp.prog, I.vars, xs, tol, sp.certificate)
