"""Coefficient-matching programs over Gram matrices.

A :class:`GramProgram` collects polynomial identities of the form::

    sum_b sum_{i,j} G_b[i, j] * E_b[i, j](X)  +  sum_f  f * P_f(X)  =  target(X)

where the ``G_b`` are PSD Gram blocks, ``f`` free scalars and ``E``/``P`` known
polynomials.  Every monomial of every identity becomes one linear equality.
Before solving, rows that force a set of diagonal Gram entries to sum to zero
are used to delete those indices (a diagonal facial reduction); the uniform
degree truncation of quadratic modules produces such rows all the time, and
removing them keeps the SDP strictly feasible for the interior-point solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sdp import SDPProblem, SDPSolution, Status, solve, svec_indices

SQRT2 = math.sqrt(2.0)


def _poly_terms(p) -> dict:
    return {m: float(c) for m, c in p.terms.items()}


@dataclass
class GramResult:
    status: Status
    grams: dict = field(default_factory=dict)
    free: dict = field(default_factory=dict)
    solution: SDPSolution | None = None
    problem: SDPProblem | None = None
    pruned: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class GramProgram:
    def __init__(self):
        self.block_names: list = []
        self.block_sizes: list = []
        self.free_names: list = []
        self._identities: list = []  # (label, {mono: {key: coef}}, {mono: rhs})
        self._rows: list = []  # extra rows: ({key: coef}, rhs, label)
        self._objective: dict = {}

    # declarations -------------------------------------------------------------

    def block(self, name, size: int) -> int:
        if size < 1:
            raise ValueError("Gram block needs at least one index")
        self.block_names.append(name)
        self.block_sizes.append(int(size))
        return len(self.block_names) - 1

    def free_var(self, name) -> int:
        self.free_names.append(name)
        return len(self.free_names) - 1

    def identity(self, target=None, label="") -> int:
        rhs = {} if target is None else _poly_terms(target)
        self._identities.append((label, {}, dict(rhs)))
        return len(self._identities) - 1

    # contributions ---------------------------------------------------------------

    def _add(self, ident, mono, key, coef):
        if coef == 0:
            return
        rows = self._identities[ident][1]
        row = rows.setdefault(mono, {})
        row[key] = row.get(key, 0.0) + coef

    def add_sos(self, ident, block, basis, multiplier=None):
        """Contribute ``v^T G v * multiplier`` with ``v`` the monomials ``basis``."""
        mult = {(0,) * len(basis[0]): 1.0} if multiplier is None else _poly_terms(multiplier)
        for i, mi in enumerate(basis):
            for j in range(i, len(basis)):
                mj = basis[j]
                factor = 1.0 if i == j else 2.0
                base = tuple(a + b for a, b in zip(mi, mj))
                for mm, c in mult.items():
                    mono = tuple(a + b for a, b in zip(base, mm))
                    self._add(ident, mono, ("g", block, i, j), factor * c)

    def add_gram_entries(self, ident, block, entry):
        """Contribute ``sum_ij G[i, j] * entry(i, j)``; ``entry`` maps to ``{mono: coef}``."""
        k = self.block_sizes[block]
        for i in range(k):
            for j in range(i, k):
                terms = entry(i, j)
                if not terms:
                    continue
                factor = 1.0 if i == j else 2.0
                for mono, c in terms.items():
                    self._add(ident, mono, ("g", block, i, j), factor * c)

    def add_free(self, ident, idx, poly):
        for mono, c in _poly_terms(poly).items():
            self._add(ident, mono, ("f", idx), c)

    def add_row(self, coeffs: dict, rhs: float, label=""):
        """Extra linear equality; keys are ``("g", b, i, j)`` (i <= j) or ``("f", idx)``.

        A ``("g", b, i, j)`` coefficient multiplies the matrix entry ``G_b[i, j]``.
        """
        self._rows.append((dict(coeffs), float(rhs), label))

    def add_trace_row(self, blocks, rhs=1.0):
        coeffs = {}
        for b in blocks:
            for i in range(self.block_sizes[b]):
                coeffs[("g", b, i, i)] = 1.0
        self.add_row(coeffs, rhs, "trace")

    def objective_gram(self, block, values):
        """Add ``sum_ij G[i, j] * values[i, j]`` (``values`` symmetric) to the objective."""
        values = np.asarray(values, dtype=float)
        k = self.block_sizes[block]
        for i in range(k):
            for j in range(i, k):
                v = values[i, j] * (1.0 if i == j else 2.0)
                if v:
                    key = ("g", block, i, j)
                    self._objective[key] = self._objective.get(key, 0.0) + v

    def objective_free(self, idx, value):
        key = ("f", idx)
        self._objective[key] = self._objective.get(key, 0.0) + float(value)

    # assembly ---------------------------------------------------------------------

    def _all_rows(self):
        rows = []
        for label, eqs, rhs in self._identities:
            for mono in sorted(set(eqs) | set(rhs)):
                rows.append((eqs.get(mono, {}), rhs.get(mono, 0.0), (label, mono)))
        for coeffs, rhs, label in self._rows:
            rows.append((coeffs, rhs, label))
        return rows

    def _prune(self, rows):
        dead = [set() for _ in self.block_sizes]
        changed = True
        while changed:
            changed = False
            for coeffs, rhs, _ in rows:
                if rhs != 0:
                    continue
                live = {k: v for k, v in coeffs.items() if v != 0 and not _is_dead(k, dead)}
                if not live:
                    continue
                if all(k[0] == "g" and k[2] == k[3] for k in live):
                    signs = {v > 0 for v in live.values()}
                    if len(signs) == 1:
                        for k in live:
                            dead[k[1]].add(k[2])
                        changed = True
        return dead

    def build(self, sense="minimize", prune=True):
        rows = self._all_rows()
        dead = self._prune(rows) if prune else [set() for _ in self.block_sizes]
        keep_idx = [
            [i for i in range(k) if i not in dead[b]] for b, k in enumerate(self.block_sizes)
        ]
        live_blocks = [b for b, idx in enumerate(keep_idx) if idx]
        col = {}
        pos = 0
        for b in live_blocks:
            idx = keep_idx[b]
            for (i, j) in svec_indices(len(idx)):
                col[("g", b, idx[i], idx[j])] = (pos, 1.0 if i == j else 1 / SQRT2)
                pos += 1
        for f in range(len(self.free_names)):
            col[("f", f)] = (pos, 1.0)
            pos += 1
        n = pos

        A, bvec, labels = [], [], []
        for coeffs, rhs, label in rows:
            r = np.zeros(n)
            for key, v in coeffs.items():
                if key in col:
                    c, s = col[key]
                    r[c] += v * s
            if not np.any(r) and rhs == 0:
                continue
            A.append(r)
            bvec.append(rhs)
            labels.append(str(label))
        c = None
        if sense == "minimize":
            c = np.zeros(n)
            for key, v in self._objective.items():
                if key in col:
                    ci, s = col[key]
                    c[ci] += v * s
        prob = SDPProblem(
            tuple(len(keep_idx[b]) for b in live_blocks),
            len(self.free_names),
            np.array(A) if A else np.zeros((0, n)),
            np.array(bvec),
            c,
            sense,
            tuple(labels),
        )
        return prob, (live_blocks, keep_idx, dead)

    def solve(self, sense="minimize", prune=True, **solver_opts) -> GramResult:
        prob, (live_blocks, keep_idx, dead) = self.build(sense, prune)
        sol = solve(prob, **solver_opts)
        pruned = {self.block_names[b]: sorted(dead[b]) for b in range(len(dead)) if dead[b]}
        result = GramResult(sol.status, solution=sol, problem=prob, pruned=pruned)
        if sol.blocks:
            result.grams = self._embed(sol.blocks, live_blocks, keep_idx)
            result.free = {name: float(sol.free[i]) for i, name in enumerate(self.free_names)}
        return result

    def _embed(self, blocks, live_blocks, keep_idx):
        grams = {name: np.zeros((k, k)) for name, k in zip(self.block_names, self.block_sizes)}
        for B, b in zip(blocks, live_blocks):
            idx = np.array(keep_idx[b])
            grams[self.block_names[b]][np.ix_(idx, idx)] = B
        return grams

    def residual(self, grams: dict, free: dict) -> float:
        """Largest violation of any identity or extra row at the given values."""
        worst = 0.0
        for coeffs, rhs, _ in self._all_rows():
            v = 0.0
            for key, c in coeffs.items():
                if key[0] == "g":
                    v += c * grams[self.block_names[key[1]]][key[2], key[3]]
                else:
                    v += c * free[self.free_names[key[1]]]
            worst = max(worst, abs(v - rhs))
        return worst


def _is_dead(key, dead) -> bool:
    return key[0] == "g" and (key[2] in dead[key[1]] or key[3] in dead[key[1]])
