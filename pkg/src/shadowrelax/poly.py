"""Sparse multivariate polynomials over the rationals or binary floats.

A polynomial is an immutable map from exponent tuples to coefficients over an
ordered list of variable names.  Exact polynomials hold ``Fraction``
coefficients and never round; float polynomials hold ``float``.  The two
modes never mix inside a single polynomial or a single arithmetic operation.

Monomials are ordered graded-lexicographically everywhere (degree first,
then lexicographic with the first variable largest), so Gram matrices built
on :func:`monomial_basis` have a deterministic index layout.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

Scalar = Union[Fraction, float]
Monomial = tuple

__all__ = [
    "Polynomial",
    "PolynomialError",
    "PowerRule",
    "PowerRules",
    "arith",
    "evaluate",
    "gradient",
    "monomial_basis",
    "parse_coefficient",
    "parse_expression",
    "parse_polynomial",
    "reduce_mod_rules",
]


class PolynomialError(ValueError):
    """Malformed polynomial input or incompatible operands."""


def parse_coefficient(text, exact: bool = True) -> Scalar:
    """Parse an integer, decimal or ``p/q`` coefficient string."""
    if isinstance(text, bool):
        raise PolynomialError(f"bad coefficient {text!r}")
    if isinstance(text, (Rational, float)) and not isinstance(text, str):
        if exact:
            if isinstance(text, float) and not math.isfinite(text):
                raise PolynomialError(f"non-finite coefficient {text!r}")
            return Fraction(text)
        return float(text)
    if not isinstance(text, str):
        raise PolynomialError(f"bad coefficient {text!r}")
    s = text.strip().replace("−", "-")
    if not re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(/[+-]?\d+)?", s):
        raise PolynomialError(f"malformed coefficient string {text!r}")
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise PolynomialError(f"malformed coefficient string {text!r}") from exc
    return value if exact else float(value)


def _coerce(value, exact: bool) -> Scalar:
    if exact:
        if isinstance(value, float):
            raise PolynomialError("float scalar mixed into an exact polynomial")
        return Fraction(value)
    return float(value)


class Polynomial:
    """Immutable sparse polynomial in the variables ``vars``."""

    __slots__ = ("_vars", "_terms", "_exact", "_hash")

    def __init__(self, vars: Sequence[str], terms: Mapping | None = None, exact: bool = True):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise PolynomialError(f"duplicate variable names in {vars}")
        clean = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != len(vars):
                raise PolynomialError(f"monomial {mono} has arity {len(mono)}, expected {len(vars)}")
            if any(e < 0 for e in mono):
                raise PolynomialError(f"negative exponent in {mono}")
            c = _coerce(coeff, exact)
            if c:
                clean[mono] = clean.get(mono, 0) + c
                if not clean[mono]:
                    del clean[mono]
        self._vars = vars
        self._terms = MappingProxyType(clean)
        self._exact = bool(exact)
        self._hash = None

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, vars, exact=True):
        return cls(vars, {}, exact)

    @classmethod
    def constant(cls, vars, value, exact=True):
        vars = tuple(vars)
        return cls(vars, {(0,) * len(vars): value}, exact)

    @classmethod
    def variable(cls, vars, name, exact=True):
        vars = tuple(vars)
        mono = tuple(int(v == name) for v in vars)
        if sum(mono) != 1:
            raise PolynomialError(f"unknown variable {name!r}")
        return cls(vars, {mono: 1}, exact)

    @classmethod
    def generators(cls, vars, exact=True):
        """All variables of the ring as polynomials, in order."""
        return tuple(cls.variable(vars, v, exact) for v in vars)

    @classmethod
    def monomial(cls, vars, mono, coeff=1, exact=True):
        return cls(vars, {tuple(mono): coeff}, exact)

    @classmethod
    def linear(cls, vars, constant, coeffs, exact=True):
        """``constant + sum(coeffs[i] * vars[i])``."""
        vars = tuple(vars)
        n = len(vars)
        if len(coeffs) != n:
            raise PolynomialError("linear form arity mismatch")
        terms = {(0,) * n: constant}
        for i, c in enumerate(coeffs):
            mono = [0] * n
            mono[i] = 1
            terms[tuple(mono)] = c
        return cls(vars, terms, exact)

    # basic accessors ------------------------------------------------------

    @property
    def vars(self) -> tuple:
        return self._vars

    @property
    def terms(self) -> Mapping:
        return self._terms

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def nvars(self) -> int:
        return len(self._vars)

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def degree_in(self, var) -> int:
        k = self._var_index(var)
        if not self._terms:
            return -1
        return max(m[k] for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, mono) -> Scalar:
        return self._terms.get(tuple(mono), Fraction(0) if self._exact else 0.0)

    def constant_term(self) -> Scalar:
        return self.coeff((0,) * self.nvars)

    def linear_coeffs(self) -> list:
        """Coefficients of ``vars[0], vars[1], ...`` (degree-one part)."""
        n = self.nvars
        return [self.coeff(tuple(int(j == i) for j in range(n))) for i in range(n)]

    def sorted_terms(self):
        """Terms in descending graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)

    def _var_index(self, var) -> int:
        if isinstance(var, int):
            return var
        try:
            return self._vars.index(var)
        except ValueError:
            raise PolynomialError(f"unknown variable {var!r}") from None

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if other._vars != self._vars:
            raise PolynomialError(f"variable lists differ: {self._vars} vs {other._vars}")
        if other._exact != self._exact:
            raise PolynomialError("cannot mix exact and float polynomials")

    def _lift(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (Real, Fraction)) and not isinstance(other, bool):
            return Polynomial.constant(self._vars, _coerce(other, self._exact), self._exact)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(self._vars, terms, self._exact)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._vars, {m: -c for m, c in self._terms.items()}, self._exact)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            terms: dict = {}
            for m1, c1 in self._terms.items():
                for m2, c2 in other._terms.items():
                    m = tuple(a + b for a, b in zip(m1, m2))
                    terms[m] = terms.get(m, 0) + c1 * c2
            return Polynomial(self._vars, terms, self._exact)
        if isinstance(other, (Real, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def scale(self, factor):
        factor = _coerce(factor, self._exact)
        return Polynomial(self._vars, {m: c * factor for m, c in self._terms.items()}, self._exact)

    def __truediv__(self, other):
        if isinstance(other, (Real, Fraction)) and not isinstance(other, bool):
            other = _coerce(other, self._exact)
            return self.scale(1 / other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("exponent must be a nonnegative integer")
        result = Polynomial.constant(self._vars, 1, self._exact)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return (
                self._vars == other._vars
                and self._exact == other._exact
                and dict(self._terms) == dict(other._terms)
            )
        if isinstance(other, (Real, Fraction)) and not isinstance(other, bool):
            return self.degree() <= 0 and self.constant_term() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._vars, self._exact, frozenset(self._terms.items())))
        return self._hash

    # calculus and evaluation ---------------------------------------------

    def diff(self, var) -> "Polynomial":
        k = self._var_index(var)
        terms = {}
        for m, c in self._terms.items():
            if m[k]:
                mm = list(m)
                mm[k] -= 1
                terms[tuple(mm)] = c * m[k]
        return Polynomial(self._vars, terms, self._exact)

    def gradient(self) -> tuple:
        return tuple(self.diff(k) for k in range(self.nvars))

    def __call__(self, point):
        return evaluate(self, point)

    def to_float(self) -> "Polynomial":
        return Polynomial(self._vars, {m: float(c) for m, c in self._terms.items()}, exact=False)

    def to_exact(self) -> "Polynomial":
        """Exact copy; float coefficients are converted without rounding."""
        return Polynomial(self._vars, {m: Fraction(c) for m, c in self._terms.items()}, exact=True)

    def coefficient_norm(self) -> float:
        """Largest absolute coefficient (0 for the zero polynomial)."""
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    def rename(self, vars: Sequence[str]) -> "Polynomial":
        vars = tuple(vars)
        if len(vars) != self.nvars:
            raise PolynomialError("rename needs the same number of variables")
        return Polynomial(vars, self._terms, self._exact)

    def embed(self, vars: Sequence[str]) -> "Polynomial":
        """Same polynomial viewed in a ring whose variables include ours."""
        vars = tuple(vars)
        idx = []
        for v in self._vars:
            if v not in vars:
                raise PolynomialError(f"variable {v!r} missing from target ring")
            idx.append(vars.index(v))
        terms = {}
        for m, c in self._terms.items():
            mm = [0] * len(vars)
            for e, j in zip(m, idx):
                mm[j] = e
            terms[tuple(mm)] = c
        return Polynomial(vars, terms, self._exact)

    def substitute(self, values: Mapping) -> "Polynomial":
        """Replace some variables by polynomials (or scalars) in the same ring."""
        out = Polynomial.zero(self._vars, self._exact)
        subs = {}
        for name, v in values.items():
            k = self._var_index(name)
            subs[k] = v if isinstance(v, Polynomial) else Polynomial.constant(self._vars, v, self._exact)
        for m, c in self._terms.items():
            term = Polynomial.constant(self._vars, c, self._exact)
            rest = list(m)
            for k, poly in subs.items():
                if m[k]:
                    term = term * poly ** m[k]
                    rest[k] = 0
            term = term * Polynomial.monomial(self._vars, rest, 1, self._exact)
            out = out + term
        return out

    # printing ---------------------------------------------------------------

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            factors = []
            for name, e in zip(self._vars, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            mag = abs(c)
            sign = "-" if c < 0 else "+"
            if body and mag == 1:
                text = body
            elif body:
                text = f"{_fmt(mag)}*{body}"
            else:
                text = _fmt(mag)
            parts.append((sign, text))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __repr__(self):
        mode = "exact" if self._exact else "float"
        return f"Polynomial({str(self)!r}, vars={list(self._vars)}, {mode})"


def _fmt(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


# ---------------------------------------------------------------------------
# functional surface


def evaluate(p: Polynomial, point) -> Scalar:
    """Value of ``p`` at ``point``.

    Exact polynomials evaluated at rational points give a ``Fraction``; any
    float coordinate switches the evaluation to float arithmetic.
    """
    point = tuple(point)
    if len(point) != p.nvars:
        raise PolynomialError(f"point has {len(point)} coordinates, polynomial has {p.nvars} variables")
    use_float = not p.exact or any(isinstance(x, float) for x in point)
    if use_float:
        xs = [float(x) for x in point]
        total = 0.0
        for m, c in p.terms.items():
            v = float(c)
            for x, e in zip(xs, m):
                if e:
                    v *= x**e
            total += v
        return total
    xs = [Fraction(x) for x in point]
    total = Fraction(0)
    for m, c in p.terms.items():
        v = c
        for x, e in zip(xs, m):
            if e:
                v *= x**e
        total += v
    return total


def gradient(p: Polynomial) -> tuple:
    """Partial derivatives in variable order."""
    return p.gradient()


def arith(op: str, p: Polynomial, q) -> Polynomial:
    """Dispatch ``add``, ``sub``, ``mul`` or ``scale`` (``q`` a scalar)."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        if not isinstance(q, Polynomial):
            raise PolynomialError("mul expects two polynomials")
        return p * q
    if op == "scale":
        return p.scale(q)
    raise PolynomialError(f"unknown operation {op!r}")


def monomial_basis(n: int, d: int) -> list:
    """Exponent tuples of all monomials of degree <= d in n variables.

    Graded lexicographic order: ``(2, 1)`` gives ``[(0,0), (1,0), (0,1)]``.
    """
    if n < 1 or d < 0:
        raise PolynomialError("monomial_basis needs n >= 1 and d >= 0")
    basis = []
    for deg in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            mono = [0] * n
            for i in combo:
                mono[i] += 1
            basis.append(tuple(mono))
    return basis


# ---------------------------------------------------------------------------
# rewriting modulo pure-power rules


@dataclass(frozen=True)
class PowerRule:
    """Rewrite ``var**power`` to ``replacement``."""

    var: str
    power: int
    replacement: Polynomial


class PowerRules:
    """A validated, terminating set of :class:`PowerRule`.

    Each replacement must have lower degree than the rule's power in the rule
    variable and must not mention any other rule variable; together these make
    every rewrite step shrink the vector of rule-variable exponents.
    """

    def __init__(self, rules: Iterable):
        rules = [r if isinstance(r, PowerRule) else PowerRule(*r) for r in rules]
        seen = set()
        for r in rules:
            if r.power < 1:
                raise PolynomialError(f"rule power must be positive, got {r.power}")
            if r.var in seen:
                raise PolynomialError(f"two rules rewrite {r.var!r}")
            seen.add(r.var)
            if r.var not in r.replacement.vars:
                raise PolynomialError(f"rule variable {r.var!r} not in replacement ring")
        for r in rules:
            if r.replacement.degree_in(r.var) >= r.power:
                raise PolynomialError(
                    f"rule {r.var}^{r.power} -> {r.replacement} does not lower the exponent"
                )
            for other in rules:
                if other is not r and r.replacement.degree_in(other.var) > 0:
                    raise PolynomialError(
                        f"rule for {r.var!r} reintroduces rule variable {other.var!r}"
                    )
        self.rules = tuple(rules)

    def __iter__(self):
        return iter(self.rules)


def reduce_mod_rules(p: Polynomial, rules) -> Polynomial:
    """Normal form of ``p`` with every rule leading power eliminated."""
    if not isinstance(rules, PowerRules):
        rules = PowerRules(rules)
    compiled = []
    for r in rules:
        if r.replacement.vars != p.vars or r.replacement.exact != p.exact:
            raise PolynomialError("rule replacement lives in a different ring or mode")
        compiled.append((p.vars.index(r.var), r.power, r.replacement))

    result: dict = {}
    pending = dict(p.terms)
    while pending:
        mono, c = pending.popitem()
        for k, power, repl in compiled:
            if mono[k] >= power:
                rest = list(mono)
                rest[k] -= power
                for m2, c2 in repl.terms.items():
                    m = tuple(a + b for a, b in zip(rest, m2))
                    pending[m] = pending.get(m, 0) + c * c2
                    if not pending[m]:
                        del pending[m]
                break
        else:
            result[mono] = result.get(mono, 0) + c
    return Polynomial(p.vars, result, p.exact)


# ---------------------------------------------------------------------------
# documents and the inline expression syntax


def parse_polynomial(doc: Mapping, mode: str = "exact") -> Polynomial:
    """Build a polynomial from ``{"vars": [...], "terms": [{"c": ..., "e": [...]}]}``."""
    if mode not in ("exact", "float"):
        raise PolynomialError(f"unknown coefficient mode {mode!r}")
    exact = mode == "exact"
    try:
        vars = list(doc["vars"])
        raw_terms = doc.get("terms", [])
    except (KeyError, TypeError, AttributeError) as exc:
        raise PolynomialError("polynomial document needs 'vars' and 'terms'") from exc
    if not all(isinstance(v, str) and v for v in vars):
        raise PolynomialError("variable names must be non-empty strings")
    terms: dict = {}
    for t in raw_terms:
        try:
            e = t["e"]
            c = t["c"]
        except (KeyError, TypeError) as exc:
            raise PolynomialError(f"term {t!r} needs 'c' and 'e'") from exc
        if len(e) != len(vars):
            raise PolynomialError(f"exponent vector {e} does not match {len(vars)} variables")
        if any((not isinstance(x, int)) or isinstance(x, bool) or x < 0 for x in e):
            raise PolynomialError(f"exponents must be nonnegative integers, got {e}")
        mono = tuple(e)
        terms[mono] = terms.get(mono, 0) + parse_coefficient(c, exact)
    return Polynomial(vars, terms, exact)


def polynomial_document(p: Polynomial) -> dict:
    """Inverse of :func:`parse_polynomial`; terms listed in graded-lex order."""
    return {
        "vars": list(p.vars),
        "terms": [{"c": _fmt(c), "e": list(m)} for m, c in p.sorted_terms()],
    }


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()−]))")


def parse_expression(text: str, vars: Sequence[str], exact: bool = True) -> Polynomial:
    """Parse an inline expression such as ``"Y-3X+2"`` or ``"X^2 + 2*X*Y"``.

    Supports ``+ - * / ^`` (``/`` only by numbers), parentheses and implicit
    products like ``3X`` or ``2 X Y``.  Identifiers are split greedily into
    the declared variable names, so ``XY`` reads as ``X*Y`` when both exist.
    """
    vars = tuple(vars)
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolynomialError(f"cannot parse {text[pos:]!r}")
        num, ident, op = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif ident is not None:
            for name in _split_identifier(ident, vars):
                tokens.append(("var", name))
        else:
            op = {"−": "-", "**": "^"}.get(op, op)
            tokens.append(("op", op))
        pos = m.end()
    parser = _ExprParser(tokens, vars, exact)
    result = parser.expr()
    if parser.i != len(tokens):
        raise PolynomialError(f"unexpected token {tokens[parser.i][1]!r} in {text!r}")
    return result


def _split_identifier(ident: str, vars: Sequence[str]) -> list:
    if ident in vars:
        return [ident]
    out = []
    rest = ident
    names = sorted(vars, key=len, reverse=True)
    while rest:
        for name in names:
            if rest.startswith(name):
                out.append(name)
                rest = rest[len(name):]
                break
        else:
            raise PolynomialError(f"unknown identifier {ident!r} (variables: {', '.join(vars)})")
    return out


class _ExprParser:
    def __init__(self, tokens, vars, exact):
        self.tokens = tokens
        self.vars = vars
        self.exact = exact
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expr(self):
        kind, val = self.peek()
        sign = 1
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        result = self.term().scale(sign)
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                result = result + t if val == "+" else result - t
            else:
                return result

    def term(self):
        result = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                result = result * self.power()
            elif kind == "op" and val == "/":
                self.take()
                divisor = self.power()
                if divisor.degree() > 0 or divisor.is_zero():
                    raise PolynomialError("division only by nonzero constants")
                result = result / divisor.constant_term()
            elif kind in ("num", "var") or (kind == "op" and val == "("):
                result = result * self.power()
            else:
                return result

    def power(self):
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise PolynomialError("exponent must be a nonnegative integer literal")
            base = base ** int(val)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Polynomial.constant(self.vars, parse_coefficient(val, self.exact), self.exact)
        if kind == "var":
            return Polynomial.variable(self.vars, val, self.exact)
        if kind == "op" and val == "(":
            inner = self.expr()
            kind, val = self.take()
            if val != ")":
                raise PolynomialError("unbalanced parentheses")
            return inner
        if kind == "op" and val == "-":
            return -self.power()
        raise PolynomialError(f"unexpected token {val!r}")
