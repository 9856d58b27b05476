"""Small dense semidefinite programs with free scalar variables.

Problems are stated in primal standard form over a product of PSD blocks and
free scalars::

    minimize    c . x
    subject to  A x = b,   x = (svec X_1, ..., svec X_p, free scalars),
                X_k PSD.

``svec`` scales off-diagonal entries by sqrt(2) so that ``A o B = Tr(AB)``
equals ``svec(A) . svec(B)``.  The dual is ``maximize b . y`` subject to
``c - A^T y`` lying in the cone (PSD on blocks, zero on free coordinates).

Feasibility problems are solved as ``minimize t`` over ``X_k + t I  PSD``;
the system is feasible when the optimal ``t`` is at most ``psd_tol``.  The
iterations themselves are delegated to cvxopt's Nesterov-Todd scaled
primal-dual path-following solver; this module owns preprocessing, status
classification and certificate checks, and never reports an unverified
verdict.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

DEFAULT_TOL = 1e-8
DEFAULT_PSD_TOL = 1e-9
DEFAULT_MAX_ITER = 200
DEFAULT_RETRIES = 2


class SDPError(ValueError):
    """Inconsistent problem data (shapes, lengths, non-finite entries)."""


class SolverInaccurate(RuntimeError):
    """The solver could not certify any verdict; never read as In or Out."""


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    INACCURATE = "Inaccurate"


# ---------------------------------------------------------------------------
# symmetric matrix coordinates


def svec_size(k: int) -> int:
    return k * (k + 1) // 2


def svec_indices(k: int) -> list:
    """``(i, j)`` pairs with ``i <= j`` in svec order (row-major upper triangle)."""
    return [(i, j) for i in range(k) for j in range(i, k)]


def symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SDPError(f"expected a square matrix, got shape {M.shape}")
    return (M + M.T) / 2


def svec(M) -> np.ndarray:
    M = symmetrize(M)
    k = M.shape[0]
    iu = np.triu_indices(k)
    scale = np.where(iu[0] == iu[1], 1.0, SQRT2)
    return M[iu] * scale


def smat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    k = int(round((math.sqrt(8 * len(v) + 1) - 1) / 2))
    if svec_size(k) != len(v):
        raise SDPError(f"length {len(v)} is not a triangular number")
    iu = np.triu_indices(k)
    scale = np.where(iu[0] == iu[1], 1.0, 1 / SQRT2)
    M = np.zeros((k, k))
    M[iu] = v * scale
    return M + np.triu(M, 1).T


def eigmin(M) -> tuple:
    """Smallest eigenvalue of a symmetric matrix and a unit eigenvector."""
    M = symmetrize(M)
    if M.shape[0] == 0:
        return math.inf, np.zeros(0)
    w, V = np.linalg.eigh(M)
    return float(w[0]), V[:, 0]


def psd_project(M) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm."""
    M = symmetrize(M)
    if M.shape[0] == 0:
        return M
    w, V = np.linalg.eigh(M)
    return (V * np.clip(w, 0, None)) @ V.T


# ---------------------------------------------------------------------------
# problem and solution


@dataclass(frozen=True, eq=False)
class SDPProblem:
    """Linear equality constraints over PSD blocks and free scalars.

    ``A`` has one row per constraint and one column per coordinate of
    ``(svec X_1, ..., svec X_p, free)``.  ``objective`` is ignored (and may
    be None) when ``sense == "feasibility"``.
    """

    psd_blocks: tuple
    n_free: int
    A: np.ndarray
    b: np.ndarray
    objective: np.ndarray | None = None
    sense: str = "minimize"
    row_labels: tuple | None = None

    def __post_init__(self):
        blocks = tuple(int(k) for k in self.psd_blocks)
        if any(k < 1 for k in blocks):
            raise SDPError("PSD block dimensions must be positive")
        if self.n_free < 0:
            raise SDPError("n_free must be nonnegative")
        n = sum(svec_size(k) for k in blocks) + self.n_free
        A = np.array(self.A, dtype=float)
        A = np.zeros((0, n)) if A.size == 0 else np.atleast_2d(A)
        b = np.array(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[1] != n:
            raise SDPError(f"constraint length {A.shape[1]} != variable count {n}")
        if A.shape[0] != b.shape[0]:
            raise SDPError(f"{A.shape[0]} constraint rows but {b.shape[0]} right-hand sides")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise SDPError("constraint data must be finite")
        if self.sense not in ("minimize", "feasibility"):
            raise SDPError(f"unknown sense {self.sense!r}")
        if self.sense == "minimize":
            if self.objective is None:
                raise SDPError("minimize needs an objective")
            c = np.array(self.objective, dtype=float).ravel()
            if c.shape[0] != n:
                raise SDPError(f"objective length {c.shape[0]} != variable count {n}")
            if not np.all(np.isfinite(c)):
                raise SDPError("objective must be finite")
        else:
            c = np.zeros(n)
        if self.row_labels is not None and len(self.row_labels) != A.shape[0]:
            raise SDPError("row_labels length must match the number of constraints")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "psd_blocks", blocks)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "objective", c)

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    def block_slices(self) -> list:
        out, start = [], 0
        for k in self.psd_blocks:
            out.append(slice(start, start + svec_size(k)))
            start += svec_size(k)
        return out

    @property
    def free_slice(self) -> slice:
        start = sum(svec_size(k) for k in self.psd_blocks)
        return slice(start, start + self.n_free)

    def split(self, x) -> tuple:
        """Split a coordinate vector into block matrices and free values."""
        x = np.asarray(x, dtype=float)
        return [smat(x[s]) for s in self.block_slices()], x[self.free_slice].copy()

    def adjoint(self, y) -> tuple:
        """``sum_i y_i A_i`` as block matrices plus its free-coordinate part."""
        return self.split(self.A.T @ np.asarray(y, dtype=float))

    def dump(self) -> str:
        """Row-per-constraint text listing, for bug reports."""
        lines = [
            f"sense {self.sense}",
            f"blocks {' '.join(map(str, self.psd_blocks)) or '-'}",
            f"free {self.n_free}",
        ]
        names = []
        for bi, k in enumerate(self.psd_blocks):
            names += [f"X{bi}[{i},{j}]" for i, j in svec_indices(k)]
        names += [f"f{j}" for j in range(self.n_free)]
        if self.sense == "minimize":
            lines.append("objective " + _row_text(self.objective, names))
        for r in range(self.n_constraints):
            label = self.row_labels[r] if self.row_labels else str(r)
            lines.append(f"row {label}: {_row_text(self.A[r], names)} = {self.b[r]:.17g}")
        return "\n".join(lines)


def _row_text(row, names) -> str:
    parts = [f"{v:+.17g}*{names[i]}" for i, v in enumerate(row) if v != 0]
    return " ".join(parts) if parts else "0"


@dataclass
class SDPSolution:
    status: Status
    blocks: list = field(default_factory=list)
    free: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_blocks: list = field(default_factory=list)
    objective: float = math.nan
    dual_objective: float = math.nan
    residuals: dict = field(default_factory=dict)
    certificate: np.ndarray | None = None
    infeasibility: float = math.nan
    iterations: int = 0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([svec(B) for B in self.blocks] + [self.free])


# ---------------------------------------------------------------------------
# preprocessing


def _independent_rows(A: np.ndarray, b: np.ndarray):
    """Indices of a maximal independent row subset, or a linear Farkas ray."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0), None
    scale = max(1.0, float(np.abs(A).max()))
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * scale * max(A.shape)))
    keep = np.sort(piv[:rank])
    if rank < m:
        logger.debug("dropped %d linearly dependent constraint rows", m - rank)
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        r = b - A @ sol
        if np.linalg.norm(r) > 1e-9 * (1 + np.linalg.norm(b)):
            return keep, r / float(r @ r)
    return keep, None


# ---------------------------------------------------------------------------
# the solver


def solve(
    prob: SDPProblem,
    tol: float = DEFAULT_TOL,
    psd_tol: float = DEFAULT_PSD_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    retries: int = DEFAULT_RETRIES,
) -> SDPSolution:
    """Solve ``prob``; see the module docstring for the conventions.

    Returns ``Optimal`` only when residuals and gap meet the tolerance in
    force.  An inaccurate run is retried up to ``retries`` times with the
    tolerance loosened tenfold each time.  On
    ``Infeasible`` the attached ``certificate`` is a verified dual improving
    ray ``y``: ``sum y_i A_i`` is negative semidefinite on every block, zero
    on free coordinates, and ``b . y = 1``.
    """
    if not prob.psd_blocks:
        return _solve_linear(prob, tol)
    keep, linear_ray = _independent_rows(prob.A, prob.b)
    if linear_ray is not None:
        sol = SDPSolution(Status.INFEASIBLE, message="inconsistent linear equalities")
        sol.certificate = linear_ray
        sol.infeasibility = math.inf
        return sol

    # degenerate optimal faces can stall the interior-point method at tight
    # tolerances; retry a bounded number of times with a looser one
    sol = None
    for attempt in range(retries + 1):
        t = tol * 10 ** attempt
        raw = _run_cvxopt(prob, keep, t, max_iter)
        if raw is None:
            sol = SDPSolution(Status.INACCURATE, message="solver raised an arithmetic error")
        else:
            sol = _classify(prob, keep, raw, t, psd_tol)
        if sol.status is not Status.INACCURATE:
            if attempt:
                logger.debug("solved after loosening tolerance to %.0e", t)
                sol.message = f"{sol.message} (tolerance {t:.0e})".strip()
            break
    return sol


def _solve_linear(prob: SDPProblem, tol) -> SDPSolution:
    """No cone left: equalities over free scalars only."""
    A, b = prob.A, prob.b
    if prob.n_vars == 0:
        x = np.zeros(0)
    else:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
    r = b - A @ x
    if np.linalg.norm(r) > 1e-9 * (1 + np.linalg.norm(b)):
        sol = SDPSolution(Status.INFEASIBLE, message="inconsistent linear equalities")
        sol.certificate = r / float(r @ r)
        sol.infeasibility = math.inf
        return sol
    sol = SDPSolution(Status.OPTIMAL, free=x, message="linear system")
    sol.infeasibility = 0.0
    if prob.sense == "feasibility":
        sol.objective = 0.0
        sol.dual = np.zeros(prob.n_constraints)
        return sol
    c = prob.objective
    y, *_ = np.linalg.lstsq(A.T, c, rcond=None) if prob.n_constraints else (np.zeros(0),)
    if prob.n_vars and np.linalg.norm(A.T @ y - c) > tol * (1 + np.linalg.norm(c)):
        sol.status = Status.UNBOUNDED
        sol.objective = -math.inf
        return sol
    sol.dual = y
    sol.objective = float(c @ x) if prob.n_vars else 0.0
    sol.dual_objective = float(b @ y) if prob.n_constraints else 0.0
    return sol


def _cone_layout(blocks):
    """cvxopt 'l' cone takes 1x1 blocks, 's' cone the rest."""
    lin = [i for i, k in enumerate(blocks) if k == 1]
    mat = [i for i, k in enumerate(blocks) if k > 1]
    return lin, mat


def _run_cvxopt(prob: SDPProblem, keep, tol, max_iter):
    import cvxopt
    from cvxopt import solvers

    feas = prob.sense == "feasibility"
    n = prob.n_vars + (1 if feas else 0)
    t_col = prob.n_vars
    slices = prob.block_slices()
    lin, mat = _cone_layout(prob.psd_blocks)

    Gi, Gj, Gv = [], [], []
    h = []
    row = 0
    for bi in lin:
        Gi.append(row), Gj.append(slices[bi].start), Gv.append(-1.0)
        if feas:
            Gi.append(row), Gj.append(t_col), Gv.append(-1.0)
        h.append(0.0)
        row += 1
    if feas:
        # t >= -1 keeps the auxiliary problem bounded below
        Gi.append(row), Gj.append(t_col), Gv.append(-1.0)
        h.append(1.0)
        row += 1
    n_lin = row
    for bi in mat:
        k = prob.psd_blocks[bi]
        pos = {}
        for idx, (i, j) in enumerate(svec_indices(k)):
            pos[(i, j)] = pos[(j, i)] = (slices[bi].start + idx, 1.0 if i == j else 1 / SQRT2)
        for jj in range(k):
            for ii in range(k):
                col, s = pos[(ii, jj)]
                Gi.append(row), Gj.append(col), Gv.append(-s)
                if feas and ii == jj:
                    Gi.append(row), Gj.append(t_col), Gv.append(-1.0)
                h.append(0.0)
                row += 1
    G = cvxopt.spmatrix(Gv, Gi, Gj, (row, n))
    hv = cvxopt.matrix(h, (row, 1), "d")
    dims = {"l": n_lin, "q": [], "s": [prob.psd_blocks[bi] for bi in mat]}

    c = np.zeros(n)
    if feas:
        c[t_col] = 1.0
    else:
        c[: prob.n_vars] = prob.objective
    A = prob.A[keep]
    if feas:
        A = np.hstack([A, np.zeros((A.shape[0], 1))])
    options = {
        "show_progress": False,
        "maxiters": int(max_iter),
        "abstol": tol * 1e-2,
        "reltol": tol * 1e-2,
        "feastol": min(tol, 1e-9),
        "refinement": 2,
    }
    args = [cvxopt.matrix(c), G, hv, dims]
    if A.shape[0]:
        args += [cvxopt.matrix(A), cvxopt.matrix(prob.b[keep])]
    try:
        res = solvers.conelp(*args, options=options)
    except (ArithmeticError, ValueError) as exc:
        logger.debug("cvxopt failure: %s", exc)
        return None
    return {
        "status": res["status"],
        "x": None if res["x"] is None else np.array(res["x"]).ravel(),
        "y": None if res["y"] is None else np.array(res["y"]).ravel(),
        "z": None if res["z"] is None else np.array(res["z"]).ravel(),
        "iterations": int(res.get("iterations", 0)),
        "n_lin": n_lin,
        "lin": lin,
        "mat": mat,
        "feas": feas,
    }


def _unpack_z(prob, raw):
    """Dual cone blocks in original block order."""
    z = raw["z"]
    out = [None] * len(prob.psd_blocks)
    for r, bi in enumerate(raw["lin"]):
        out[bi] = np.array([[z[r]]])
    pos = raw["n_lin"]
    for bi in raw["mat"]:
        k = prob.psd_blocks[bi]
        out[bi] = symmetrize(z[pos: pos + k * k].reshape(k, k, order="F"))
        pos += k * k
    return out


def _full_dual(prob, keep, y_kept):
    y = np.zeros(prob.n_constraints)
    y[keep] = y_kept
    return y


def _verify_ray(prob, ray, tol) -> bool:
    """Check ``sum y_i A_i`` NSD on blocks, ~0 on free coordinates, ``b.y > 0``."""
    bty = float(prob.b @ ray)
    if not bty > 0:
        return False
    blocks, free = prob.adjoint(ray / bty)
    scale = 1.0 + float(np.abs(prob.A).max(initial=0.0)) * float(np.abs(ray / bty).max(initial=0.0))
    ok_blocks = all(-eigmin(-B)[0] <= tol * scale for B in blocks)
    ok_free = free.size == 0 or float(np.abs(free).max()) <= tol * scale
    return ok_blocks and ok_free


def _classify(prob, keep, raw, tol, psd_tol) -> SDPSolution:
    status = raw["status"]
    it = raw["iterations"]

    if status == "primal infeasible" and raw["y"] is not None:
        # Farkas: A^T y_cvx = G^T-image of z (PSD), b.y_cvx = -1 (h = 0 on blocks)
        ray = -_full_dual(prob, keep, raw["y"])
        if _verify_ray(prob, ray, max(tol, 1e-7)):
            ray = ray / float(prob.b @ ray)
            sol = SDPSolution(Status.INFEASIBLE, certificate=ray, iterations=it,
                              message="primal infeasible")
            sol.infeasibility = math.inf
            return sol
        return SDPSolution(Status.INACCURATE, iterations=it, message="unverified infeasibility ray")

    if status == "dual infeasible" and raw["x"] is not None:
        x = raw["x"][: prob.n_vars]
        blocks, free = prob.split(x)
        sol = SDPSolution(Status.UNBOUNDED, blocks=blocks, free=free, iterations=it,
                          message="dual infeasible (improving primal ray attached)")
        sol.certificate = x
        sol.objective = -math.inf
        return sol

    if raw["x"] is None or raw["y"] is None or raw["z"] is None:
        return SDPSolution(Status.INACCURATE, iterations=it, message=f"cvxopt status {status!r}")

    x_all = raw["x"]
    x = x_all[: prob.n_vars]
    blocks, free = prob.split(x)
    y_cvx = _full_dual(prob, keep, raw["y"])
    zblocks = _unpack_z(prob, raw)

    b_norm = 1.0 + float(np.abs(prob.b).max(initial=0.0))
    primal_res = float(np.abs(prob.A @ x - prob.b).max(initial=0.0)) / b_norm

    if raw["feas"]:
        t = float(x_all[prob.n_vars])
        sol = SDPSolution(Status.OPTIMAL, blocks=blocks, free=free, dual_blocks=zblocks,
                          iterations=it)
        sol.infeasibility = t
        sol.residuals = {"primal": primal_res, "dual": 0.0, "gap": 0.0, "slack": t}
        if t <= psd_tol and primal_res <= tol:
            sol.objective = 0.0
            sol.dual = np.zeros(prob.n_constraints)
            sol.message = f"feasible (slack {t:.3g})"
            return sol
        ray = -y_cvx
        if t > psd_tol and primal_res <= tol and _verify_ray(prob, ray, max(tol, 1e-7)):
            ray = ray / float(prob.b @ ray)
            return SDPSolution(Status.INFEASIBLE, certificate=ray, infeasibility=t,
                               iterations=it, residuals=sol.residuals,
                               message=f"infeasible (minimal PSD slack {t:.3g})")
        sol.status = Status.INACCURATE
        sol.message = f"undecided: slack {t:.3g}, primal residual {primal_res:.3g}"
        return sol

    y = -y_cvx
    c = prob.objective
    zb, zf = prob.split(c - prob.A.T @ y)
    dual_res = float(np.abs(zf).max(initial=0.0))
    for B in zb:
        dual_res = max(dual_res, max(0.0, -eigmin(B)[0]))
    dual_res /= 1.0 + float(np.abs(c).max(initial=0.0))
    pobj = float(c @ x)
    dobj = float(prob.b @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj))
    min_eig = min((eigmin(B)[0] for B in blocks), default=0.0)
    sol = SDPSolution(Status.OPTIMAL, blocks=blocks, free=free, dual=y, dual_blocks=zblocks,
                      objective=pobj, dual_objective=dobj, iterations=it)
    sol.residuals = {"primal": primal_res, "dual": dual_res, "gap": gap, "min_eig": min_eig}
    if primal_res <= tol and dual_res <= tol and gap <= tol and min_eig >= -psd_tol:
        sol.message = f"cvxopt status {status!r}"
        return sol
    sol.status = Status.INACCURATE
    sol.message = (f"cvxopt status {status!r}; residuals primal {primal_res:.2e} "
                   f"dual {dual_res:.2e} gap {gap:.2e} min_eig {min_eig:.2e}")
    return sol


def block_problem(
    psd_blocks: Sequence[int],
    n_free: int,
    rows: Sequence,
    objective=None,
    sense: str = "minimize",
) -> SDPProblem:
    """Build an :class:`SDPProblem` from ``(matrices, free_coeffs, rhs)`` rows.

    ``matrices`` holds one symmetric matrix per block (or None for zero), so
    row ``i`` reads ``sum_k M_k o X_k + free_coeffs . f = rhs``.  The
    objective uses the same ``(matrices, free_coeffs)`` layout.
    """

    def flatten(mats, free):
        parts = []
        for k, M in zip(psd_blocks, mats):
            parts.append(np.zeros(svec_size(k)) if M is None else svec(M))
        parts.append(np.zeros(n_free) if free is None else np.asarray(free, dtype=float))
        return np.concatenate(parts)

    A = np.array([flatten(m, f) for m, f, _ in rows]) if rows else np.zeros((0, 0))
    b = np.array([r for *_, r in rows], dtype=float)
    c = None if objective is None else flatten(*objective)
    return SDPProblem(tuple(psd_blocks), n_free, A, b, c, sense)
