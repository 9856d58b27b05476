"""Linear matrix polynomials, their spectrahedra and projections.

A pencil ``A(X, Y) = A + sum_i X_i B_i + sum_j Y_j C_j`` defines the
spectrahedron ``{(x, y) : A(x, y) PSD}`` and its projection
``S = {x : exists y, A(x, y) PSD}``.  When the pencil is strictly feasible,
an affine linear ``l = l_0 + sum_i l_i X_i`` is nonnegative on ``S`` exactly
when some ``U PSD`` has ``U o A <= l_0``, ``U o B_i = l_i`` and ``U o C_j = 0``.
That description drives the polar and closure queries, and its
polynomial-multiplier analogue drives :func:`pencil_qm_member`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .gram import GramProgram
from .poly import Polynomial, PolynomialError, monomial_basis
from .relax import (
    DEFAULT_MEMBER_TOL,
    Verdict,
    VerdictKind,
    _exact_gram_poly,
    _float_gram_poly,
    _monomial_names,
    _rational_psd,
    unit_separator,
)
from .sdp import SolverInaccurate, Status, block_problem, eigmin, solve, symmetrize

logger = logging.getLogger(__name__)

DEFAULT_BOX = 1e3
STRICT_MARGIN = 1e-6
PSD_MEMBER_TOL = 1e-9


class NotApplicable(ValueError):
    """The query needs a strictly feasible pencil and this one is not."""


def _sym(M, k, what) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.shape != (k, k):
        raise ValueError(f"{what} has shape {M.shape}, expected {(k, k)}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12):
        raise ValueError(f"{what} is not symmetric")
    M = symmetrize(M)
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class MatrixPencil:
    """``A + sum_i X_i B_i + sum_j Y_j C_j`` with symmetric ``k x k`` coefficients."""

    A: np.ndarray
    B: tuple = ()
    C: tuple = ()
    xvars: tuple | None = None
    yvars: tuple | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError("A must be a nonempty square matrix")
        k = A.shape[0]
        object.__setattr__(self, "A", _sym(A, k, "A"))
        object.__setattr__(self, "B", tuple(_sym(M, k, f"B{i + 1}") for i, M in enumerate(self.B)))
        object.__setattr__(self, "C", tuple(_sym(M, k, f"C{j + 1}") for j, M in enumerate(self.C)))
        xv = self.xvars or _default_names("X", len(self.B))
        yv = self.yvars or _default_names("Y", len(self.C))
        if len(xv) != len(self.B) or len(yv) != len(self.C):
            raise ValueError("variable names do not match the coefficient counts")
        if len(set(xv) | set(yv)) != len(xv) + len(yv):
            raise ValueError("variable names must be distinct")
        object.__setattr__(self, "xvars", tuple(xv))
        object.__setattr__(self, "yvars", tuple(yv))

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @property
    def nx(self) -> int:
        return len(self.B)

    @property
    def ny(self) -> int:
        return len(self.C)

    def __call__(self, x, y=()) -> np.ndarray:
        x, y = list(x), list(y)
        if len(x) != self.nx or len(y) != self.ny:
            raise ValueError(f"pencil takes {self.nx} x and {self.ny} y coordinates")
        M = self.A.copy()
        for v, B in zip(x, self.B):
            M += float(v) * B
        for v, C in zip(y, self.C):
            M += float(v) * C
        return M

    def restricted(self, x) -> np.ndarray:
        """``A'(x) = A + sum_i x_i B_i`` (the ``Y`` variables set to zero)."""
        return self(x, [0.0] * self.ny)

    def linear_form(self, U) -> Polynomial:
        """``U o A'(X)`` as a linear polynomial in the ``X`` variables."""
        U = np.asarray(U, dtype=float)
        const = float(np.sum(U * self.A))
        coeffs = [float(np.sum(U * B)) for B in self.B]
        return Polynomial.linear(self.xvars, const, coeffs, exact=False)


def _default_names(prefix, n) -> tuple:
    if prefix == "X" and n <= 3:
        return ("X", "Y", "Z")[:n]
    return tuple(f"{prefix}{i + 1}" for i in range(n))


class StrictWitness(NamedTuple):
    x: tuple
    y: tuple
    margin: float


@dataclass
class PolarCertificate:
    """``U PSD`` and slack ``r = l_0 - U o A >= 0`` certifying ``l`` on the projection."""

    U: np.ndarray
    r: float
    residuals: dict

    def to_document(self) -> dict:
        return {"kind": "polar", "U": np.asarray(self.U).tolist(), "r": self.r,
                "residuals": self.residuals}


# ---------------------------------------------------------------------------
# membership


def pencil_member(P: MatrixPencil, x, y=()) -> tuple:
    """``(A(x, y) PSD, smallest eigenvalue)``, with ``PSD`` read at ``-1e-9``."""
    lam, _ = eigmin(P(x, y))
    return lam >= -PSD_MEMBER_TOL, lam


def _entry_matrix(k, a, b) -> np.ndarray:
    E = np.zeros((k, k))
    if a == b:
        E[a, a] = 1.0
    else:
        E[a, b] = E[b, a] = 0.5
    return E


def _max_min_eig(P: MatrixPencil, x=None, R=DEFAULT_BOX, **solver_opts):
    """Maximize ``t`` with ``A(x, y) - t I PSD`` inside the box ``|.| <= R``.

    With ``x`` given only ``y`` is free.  Returns ``(solution, problem, names)``
    where the free coordinates are ``names`` followed by ``t``.
    """
    if not R > 0:
        raise ValueError("box radius must be positive")
    k = P.k
    names = ([] if x is not None else [("x", i) for i in range(P.nx)])
    names += [("y", j) for j in range(P.ny)]
    nf = len(names) + 1
    blocks = [k] + [1] * (2 * len(names))
    base = P.A if x is None else P.restricted(x)
    rows = []
    for a in range(k):
        for b in range(a, k):
            free = np.zeros(nf)
            for col, (kind, i) in enumerate(names):
                M = P.B[i] if kind == "x" else P.C[i]
                free[col] = -M[a, b]
            free[-1] = 1.0 if a == b else 0.0
            mats = [_entry_matrix(k, a, b)] + [None] * (len(blocks) - 1)
            rows.append((mats, free, base[a, b]))
    one = np.ones((1, 1))
    for col in range(len(names)):
        for sign, slot in ((1.0, 1 + 2 * col), (-1.0, 2 + 2 * col)):
            mats = [None] * len(blocks)
            mats[slot] = one
            free = np.zeros(nf)
            free[col] = sign
            rows.append((mats, free, R))
    c_free = np.zeros(nf)
    c_free[-1] = -1.0
    prob = block_problem(blocks, nf, rows, ([None] * len(blocks), c_free))
    return solve(prob, **solver_opts), prob, names


def strictly_feasible(P: MatrixPencil, R: float = DEFAULT_BOX, **solver_opts) -> StrictWitness | None:
    """A point with ``A(x, y)`` positive definite, or None if none exists in the box."""
    sol, _, names = _max_min_eig(P, None, R, **solver_opts)
    if sol.status is not Status.OPTIMAL:
        raise SolverInaccurate(f"strictly_feasible: {sol.message}")
    t = -sol.objective
    if t <= STRICT_MARGIN:
        return None
    x = tuple(float(sol.free[c]) for c, (kind, _) in enumerate(names) if kind == "x")
    y = tuple(float(sol.free[c]) for c, (kind, _) in enumerate(names) if kind == "y")
    return StrictWitness(x, y, float(t))


def _check_point(P, x) -> list:
    x = list(x)
    if len(x) != P.nx:
        raise ValueError(f"point has {len(x)} coordinates, expected {P.nx}")
    return [float(v) for v in x]


def _polar_residuals(P, U) -> dict:
    return {
        "C": max((abs(float(np.sum(U * C))) for C in P.C), default=0.0),
        "min_eig": float(eigmin(U)[0]),
    }


def projection_member(P: MatrixPencil, x, tol: float = DEFAULT_MEMBER_TOL,
                      R: float = DEFAULT_BOX, **solver_opts) -> Verdict:
    """Decide ``x in S`` by maximizing the smallest eigenvalue of ``A(x, y)`` over ``y``.

    ``Out`` verdicts carry the separator ``U o A'(X)`` read off the dual,
    rescaled to a unit gradient.  If the optimal ``y`` touches the box the
    verdict is flagged low-confidence and a warning is logged.
    """
    xs = _check_point(P, x)
    sol, prob, _ = _max_min_eig(P, xs, R, **solver_opts)
    if sol.status is not Status.OPTIMAL:
        return Verdict(VerdictKind.INACCURATE, message=sol.message)
    t = -sol.objective
    binding = P.ny > 0 and float(np.abs(sol.free[:-1]).max()) >= R * (1 - 1e-6)
    if binding:
        logger.warning("projection_member: y reached the box |y| <= %g; verdict may be wrong", R)
    msg = f"max smallest eigenvalue {t:.3e}"
    if t >= -tol:
        return Verdict(VerdictKind.IN, margin=-t, low_confidence=binding or t < tol, message=msg)
    U = psd_part(-prob.adjoint(sol.dual)[0][0])
    raw = P.linear_form(U)
    sep, margin = unit_separator(raw, xs)
    cert = PolarCertificate(U, 0.0, _polar_residuals(P, U))
    return Verdict(VerdictKind.OUT, margin=margin, separator=sep, certificate=cert,
                   low_confidence=binding, message=msg)


def psd_part(U) -> np.ndarray:
    """Symmetrize and clip tiny negative eigenvalues left by the solver."""
    U = symmetrize(np.asarray(U, dtype=float))
    w, V = np.linalg.eigh(U)
    return (V * np.maximum(w, 0.0)) @ V.T


def _require_strict(P, R, solver_opts):
    if strictly_feasible(P, R, **solver_opts) is None:
        raise NotApplicable("pencil is not strictly feasible")


def polar_member(P: MatrixPencil, ell: Polynomial, R: float = DEFAULT_BOX,
                 **solver_opts) -> PolarCertificate | None:
    """Certificate that the affine ``ell`` is nonnegative on the projection, or None.

    Raises :class:`NotApplicable` when the pencil is not strictly feasible.
    """
    if ell.vars != P.xvars:
        raise PolynomialError(f"ell must be over {P.xvars}")
    if ell.degree() > 1:
        raise ValueError("ell must be affine linear")
    _require_strict(P, R, solver_opts)
    k = P.k
    l0 = float(ell.constant_term())
    ls = [float(c) for c in ell.linear_coeffs()]
    rows = [([P.A, np.ones((1, 1))], None, l0)]
    rows += [([B, None], None, li) for B, li in zip(P.B, ls)]
    rows += [([C, None], None, 0.0) for C in P.C]
    prob = block_problem([k, 1], 0, rows, sense="feasibility")
    sol = solve(prob, **solver_opts)
    if sol.status is Status.INFEASIBLE:
        return None
    if not sol.ok:
        raise SolverInaccurate(f"polar_member: {sol.message}")
    U = sol.blocks[0]
    res = _polar_residuals(P, U)
    res["B"] = max((abs(float(np.sum(U * B)) - li) for B, li in zip(P.B, ls)), default=0.0)
    return PolarCertificate(U, float(sol.blocks[1][0, 0]), res)


def closure_member(P: MatrixPencil, x, tol: float = DEFAULT_MEMBER_TOL, R: float = DEFAULT_BOX,
                   **solver_opts) -> Verdict:
    """Decide ``x`` in the closure of the projection via the double polar.

    Minimizes ``U o A'(x)`` over ``U PSD`` with ``U o C_j = 0`` and trace one.
    """
    xs = _check_point(P, x)
    if strictly_feasible(P, R, **solver_opts) is None:
        return Verdict(VerdictKind.NOT_APPLICABLE, message="pencil is not strictly feasible")
    k = P.k
    rows = [([C], None, 0.0) for C in P.C]
    rows.append(([np.eye(k)], None, 1.0))
    prob = block_problem([k], 0, rows, ([P.restricted(xs)], None))
    sol = solve(prob, **solver_opts)
    if not sol.ok:
        return Verdict(VerdictKind.INACCURATE, message=sol.message)
    value = sol.objective
    msg = f"normalized optimum {value:.3e}"
    if value >= -tol:
        return Verdict(VerdictKind.IN, margin=-value, low_confidence=value < tol, message=msg)
    U = sol.blocks[0]
    sep, margin = unit_separator(P.linear_form(U), xs)
    return Verdict(VerdictKind.OUT, margin=margin, separator=sep,
                   certificate=PolarCertificate(U, 0.0, _polar_residuals(P, U)), message=msg)


# ---------------------------------------------------------------------------
# QM(A)_d


@dataclass
class PencilQMCertificate:
    """``target = A'(X) o M(X) + v^T G_sigma v`` with ``M_ab = v^T G_ab v`` and ``C_j o M = 0``.

    ``gram`` is the big Gram matrix indexed by ``(a, alpha) -> a * N + alpha``.
    """

    degree: int
    vars: tuple
    basis: list
    k: int
    gram: np.ndarray
    gram_sigma: np.ndarray
    target: Polynomial
    residual: float

    def block(self, a, b) -> np.ndarray:
        N = len(self.basis)
        return self.gram[a * N:(a + 1) * N, b * N:(b + 1) * N]

    def M(self) -> list:
        """The matrix polynomial ``M(X)`` as nested lists of float polynomials."""
        return [[_float_gram_poly(self.vars, self.basis, self.block(a, b)) for b in range(self.k)]
                for a in range(self.k)]

    def sos(self) -> Polynomial:
        return _float_gram_poly(self.vars, self.basis, self.gram_sigma)

    def replay(self, P: MatrixPencil) -> float:
        """Exact residual of both identities after PSD projection and rationalization."""
        G = _rational_psd(self.gram)
        N = len(self.basis)
        M = [[_exact_gram_poly(self.vars, self.basis,
                               [row[b * N:(b + 1) * N] for row in G[a * N:(a + 1) * N]])
              for b in range(self.k)] for a in range(self.k)]
        xs = [Polynomial.variable(self.vars, v, exact=True) for v in self.vars]

        def pair(Mat, lin=False):
            total = Polynomial.zero(self.vars, exact=True)
            for a in range(self.k):
                for b in range(self.k):
                    entry = Polynomial.constant(self.vars, Fraction(float(Mat[a, b])), exact=True)
                    if lin:
                        for xv, B in zip(xs, P.B):
                            entry = entry + xv.scale(Fraction(float(B[a, b])))
                    if entry.terms:
                        total = total + entry * M[a][b]
            return total

        sigma = _exact_gram_poly(self.vars, self.basis, _rational_psd(self.gram_sigma))
        worst = (self.target.to_exact() - pair(P.A, lin=True) - sigma).coefficient_norm()
        for C in P.C:
            worst = max(worst, pair(C).coefficient_norm())
        return float(worst)

    def to_document(self) -> dict:
        return {
            "kind": "pencil_qm",
            "degree": self.degree,
            "basis": _monomial_names(self.vars, self.basis),
            "k": self.k,
            "gram": np.asarray(self.gram).tolist(),
            "gram_sigma": np.asarray(self.gram_sigma).tolist(),
            "target": str(self.target),
            "residual": self.residual,
        }


def pencil_qm_member(P: MatrixPencil, d: int, p: Polynomial, R: float = DEFAULT_BOX,
                     **solver_opts) -> PencilQMCertificate | None:
    """Certificate that ``p`` lies in ``QM(A)_d``, or None if it provably does not.

    Solves for a PSD ``G`` (giving ``M(X)``) and an SOS Gram ``G_sigma`` with
    ``p = A'(X) o M(X) + sigma`` and ``C_j o M(X) = 0`` as polynomial identities.
    """
    if p.vars != P.xvars:
        raise PolynomialError(f"p must be over {P.xvars}")
    if not isinstance(d, int) or d < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {d!r}")
    if p.degree() > 2 * d + 1:
        raise ValueError(f"deg p = {p.degree()} exceeds 2d + 1 = {2 * d + 1}")
    _require_strict(P, R, solver_opts)
    k, n = P.k, P.nx
    basis = monomial_basis(n, d)
    N = len(basis)
    units = [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]

    prog = GramProgram()
    big = prog.block("M", k * N)
    sig = prog.block("sigma", N)
    main = prog.identity(p, "pencil")

    def split(i):
        return divmod(i, N)

    def mono(al, be, extra=None):
        m = tuple(u + v for u, v in zip(basis[al], basis[be]))
        return m if extra is None else tuple(u + v for u, v in zip(m, extra))

    def main_entry(i, j):
        (a, al), (b, be) = split(i), split(j)
        out = {}
        if P.A[a, b]:
            out[mono(al, be)] = float(P.A[a, b])
        for e, B in zip(units, P.B):
            if B[a, b]:
                m = mono(al, be, e)
                out[m] = out.get(m, 0.0) + float(B[a, b])
        return out

    prog.add_gram_entries(main, big, main_entry)
    prog.add_sos(main, sig, basis)
    for jj, C in enumerate(P.C):
        ident = prog.identity(None, f"C{jj + 1}")

        def c_entry(i, j, C=C):
            (a, al), (b, be) = split(i), split(j)
            return {mono(al, be): float(C[a, b])} if C[a, b] else {}

        prog.add_gram_entries(ident, big, c_entry)

    result = prog.solve("feasibility", **solver_opts)
    if result.status is Status.INFEASIBLE:
        return None
    if not result.ok:
        raise SolverInaccurate(f"pencil_qm_member: {result.solution.message}")
    return PencilQMCertificate(
        degree=d, vars=P.xvars, basis=basis, k=k,
        gram=result.grams["M"], gram_sigma=result.grams["sigma"], target=p,
        residual=prog.residual(result.grams, result.free),
    )


def disk_pencil() -> MatrixPencil:
    """``[[1 + X, Y], [Y, 1 - X]]``, whose spectrahedron is the unit disk."""
    return MatrixPencil(np.eye(2), (np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])))

