"""Exact arithmetic in group rings Z(G), Q(G), R(G) and matrices over them.

Elements are finitely supported coefficient maps on a group; the product is
convolution.  Integer and rational coefficients are exact (Python ints and
fractions.Fraction), floats are allowed but tagged as inexact.  The star
operation conjugate-transposes supports, the partial adjoint turns a column
of ring elements into a row matrix without conjugation, and trace moments
read off the identity coefficient of powers of f* f.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .groups import GroupElement, GroupError, GroupSpec, mul


class RingError(ValueError):
    """Mismatched group rings or invalid ring data."""


_EXACT_TYPES = (int, Fraction)


class GroupRingElement:
    """A finitely supported map group -> coefficients, with convolution."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec: GroupSpec, coeffs: dict | None = None):
        self.spec = spec
        self.coeffs: dict[GroupElement, object] = {}
        if coeffs:
            for g, c in coeffs.items():
                if g.spec != spec:
                    raise RingError("support element from a different group")
                if c != 0:
                    self.coeffs[g] = c

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(spec: GroupSpec) -> "GroupRingElement":
        return GroupRingElement(spec)

    @staticmethod
    def one(spec: GroupSpec) -> "GroupRingElement":
        return GroupRingElement(spec, {spec.identity(): 1})

    @staticmethod
    def monomial(g: GroupElement, coeff=1) -> "GroupRingElement":
        return GroupRingElement(g.spec, {g: coeff})

    # -- basic structure -------------------------------------------------

    @property
    def support(self) -> list[GroupElement]:
        return sorted(self.coeffs, key=lambda g: _sort_key(g))

    def coefficient(self, g: GroupElement):
        return self.coeffs.get(g, 0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_exact(self) -> bool:
        return all(isinstance(c, _EXACT_TYPES) for c in self.coeffs.values())

    def items(self):
        return self.coeffs.items()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupRingElement)
            and self.spec == other.spec
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.spec, tuple(sorted((repr(_sort_key(g)), c) for g, c in self.coeffs.items()))))

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        self._check(other)
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            s = out.get(g, 0) + c
            if s == 0:
                out.pop(g, None)
            else:
                out[g] = s
        return GroupRingElement(self.spec, out)

    def __neg__(self) -> "GroupRingElement":
        return GroupRingElement(self.spec, {g: -c for g, c in self.coeffs.items()})

    def __sub__(self, other: "GroupRingElement") -> "GroupRingElement":
        return self + (-other)

    def scale(self, a) -> "GroupRingElement":
        if a == 0:
            return GroupRingElement.zero(self.spec)
        return GroupRingElement(self.spec, {g: a * c for g, c in self.coeffs.items()})

    def __mul__(self, other: "GroupRingElement") -> "GroupRingElement":
        return ring_mul(self, other)

    def _check(self, other: "GroupRingElement"):
        if not isinstance(other, GroupRingElement) or other.spec != self.spec:
            raise RingError("operands live in different group rings")

    def __repr__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for g in self.support:
            c = self.coeffs[g]
            gs = _monomial_str(g)
            parts.append(f"{c}*{gs}" if gs != "1" else f"{c}")
        return " + ".join(parts)


def _sort_key(g: GroupElement):
    # canonical order of support elements, for stable serialization
    if g.spec.kind == "free_abelian":
        return (0, g.key)
    if g.spec.kind == "free":
        return (1, len(g.key), g.key)
    if g.spec.kind == "finite":
        return (2, g.key)
    return (3, tuple(repr(k) for k in g.key))


def _monomial_str(g: GroupElement) -> str:
    if g.is_identity():
        return "1"
    if g.spec.kind == "free_abelian":
        parts = []
        for lab, c in zip(g.spec.generators, g.key):
            if c == 1:
                parts.append(lab)
            elif c != 0:
                parts.append(f"{lab}^{c}")
        return "*".join(parts)
    if g.spec.kind == "finite":
        return f"#{g.key}"
    parts = []
    for lab, sg in g.word():
        parts.append(lab if sg > 0 else f"{lab}^-1")
    return "*".join(parts)


def ring_mul(x: GroupRingElement, y: GroupRingElement) -> GroupRingElement:
    """Convolution product: coefficient of g is sum_h x(h) y(h^-1 g)."""
    x._check(y)
    out: dict[GroupElement, object] = {}
    for h, a in x.coeffs.items():
        for k, b in y.coeffs.items():
            g = mul(h, k)
            s = out.get(g, 0) + a * b
            if s == 0:
                out.pop(g, None)
            else:
                out[g] = s
    return GroupRingElement(x.spec, out)


def star(x: GroupRingElement) -> GroupRingElement:
    """Adjoint: coefficient at g becomes the coefficient at g^-1 (real coeffs)."""
    return GroupRingElement(x.spec, {g.inverse(): c for g, c in x.coeffs.items()})


# ---------------------------------------------------------------------------
# Matrices over the group ring
# ---------------------------------------------------------------------------

class GroupRingMatrix:
    """An m x n matrix of group-ring elements."""

    __slots__ = ("spec", "rows", "cols", "entries")

    def __init__(self, spec: GroupSpec, entries: Sequence[Sequence[GroupRingElement]]):
        self.spec = spec
        self.entries = [list(row) for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        for row in self.entries:
            if len(row) != self.cols:
                raise RingError("ragged matrix")
            for ent in row:
                if ent.spec != spec:
                    raise RingError("entry from a different group ring")

    @staticmethod
    def zero(spec: GroupSpec, rows: int, cols: int) -> "GroupRingMatrix":
        z = GroupRingElement.zero(spec)
        return GroupRingMatrix(spec, [[z for _ in range(cols)] for _ in range(rows)])

    @staticmethod
    def identity(spec: GroupSpec, n: int) -> "GroupRingMatrix":
        one = GroupRingElement.one(spec)
        z = GroupRingElement.zero(spec)
        return GroupRingMatrix(
            spec, [[one if i == j else z for j in range(n)] for i in range(n)]
        )

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def is_exact(self) -> bool:
        return all(e.is_exact() for row in self.entries for e in row)

    def __matmul__(self, other: "GroupRingMatrix") -> "GroupRingMatrix":
        if other.spec != self.spec or self.cols != other.rows:
            raise RingError("matrix shapes or rings do not match")
        out = []
        for i in range(self.rows):
            row = []
            for k in range(other.cols):
                acc = GroupRingElement.zero(self.spec)
                for j in range(self.cols):
                    acc = acc + ring_mul(self.entries[i][j], other.entries[j][k])
                row.append(acc)
            out.append(row)
        return GroupRingMatrix(self.spec, out)

    def star(self) -> "GroupRingMatrix":
        """Conjugate transpose with entrywise star."""
        out = [
            [star(self.entries[i][j]) for i in range(self.rows)]
            for j in range(self.cols)
        ]
        return GroupRingMatrix(self.spec, out)

    def support_elements(self) -> set[GroupElement]:
        out: set[GroupElement] = set()
        for row in self.entries:
            for e in row:
                out.update(e.coeffs)
        return out

    def __repr__(self) -> str:
        body = "; ".join(
            ", ".join(repr(e) for e in row) for row in self.entries
        )
        return f"[{body}]"


def partial_adjoint(column: Sequence[GroupRingElement]) -> GroupRingMatrix:
    """Lay out a column of ring elements as a 1 x n row, without conjugation."""
    col = list(column)
    if not col:
        raise RingError("empty column")
    spec = col[0].spec
    return GroupRingMatrix(spec, [col])


def trace_moment(f: GroupRingMatrix, k: int):
    """Identity-coefficient trace of (f* f)^k, exact for exact coefficients.

    f* f must be square (n x n for an m x n matrix f); the result is the sum
    over the diagonal of the coefficient at the group identity.
    """
    if k < 1:
        raise RingError("moment order must be >= 1")
    h = f.star() @ f
    p = h
    for _ in range(k - 1):
        p = p @ h
    e = f.spec.identity()
    total = 0
    for j in range(p.rows):
        total = total + p.entries[j][j].coefficient(e)
    return total


@dataclass(frozen=True)
class ModulePresentation:
    """A module Z(G)^n / <relators>, relators stored as columns of length n."""

    spec: GroupSpec
    n: int
    relators: tuple[tuple[GroupRingElement, ...], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise RingError("free rank must be >= 1")
        for rel in self.relators:
            if len(rel) != self.n:
                raise RingError("each relator must have one entry per generator")

    def stacked_matrix(self, cutoff: int | None = None) -> GroupRingMatrix:
        """The k x n matrix whose rows are the first k relators, laid flat."""
        rels = self.relators if cutoff is None else self.relators[: cutoff]
        if cutoff is not None and cutoff > len(self.relators):
            raise RingError("relator cutoff exceeds available relators")
        if not rels:
            return GroupRingMatrix(self.spec, [])
        return GroupRingMatrix(self.spec, [list(rel) for rel in rels])


# ---------------------------------------------------------------------------
# Element syntax
# ---------------------------------------------------------------------------

class ElementParseError(ValueError):
    """Parse failure, formatted with a caret at the offending position."""

    def __init__(self, text: str, pos: int, message: str):
        self.text = text
        self.pos = pos
        self.message = message
        caret = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {text}\n  {caret}")


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\^)|(\*)|(\+)|(-)|(\()|(\)))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = pos + (len(text[pos:]) - len(stripped))
            raise ElementParseError(text, bad, f"unexpected character {text[bad]!r}")
        groups = m.groups()
        start = m.end() - len(m.group(0).lstrip())
        if groups[0] is not None:
            tokens.append(("int", int(groups[0]), start))
        elif groups[1] is not None:
            tokens.append(("sym", groups[1], start))
        else:
            for sym, name in zip(groups[2:], ["^", "*", "+", "-", "(", ")"]):
                if sym is not None:
                    tokens.append((name, name, start))
                    break
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser for polynomials in generators and inverses."""

    def __init__(self, spec: GroupSpec, text: str):
        self.spec = spec
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str):
        raise ElementParseError(self.text, self.peek()[2], message)

    def parse(self) -> GroupRingElement:
        out = self.expr()
        if self.peek()[0] != "end":
            self.fail("trailing input")
        return out

    def expr(self) -> GroupRingElement:
        sign = 1
        if self.peek()[0] in ("+", "-"):
            sign = -1 if self.advance()[0] == "-" else 1
        acc = self.term().scale(sign)
        while self.peek()[0] in ("+", "-"):
            sign = -1 if self.advance()[0] == "-" else 1
            acc = acc + self.term().scale(sign)
        return acc

    def term(self) -> GroupRingElement:
        acc = self.factor()
        while self.peek()[0] == "*":
            self.advance()
            acc = ring_mul(acc, self.factor())
        return acc

    def factor(self) -> GroupRingElement:
        kind, value, pos = self.peek()
        if kind == "int":
            self.advance()
            return GroupRingElement.one(self.spec).scale(value)
        if kind == "sym":
            self.advance()
            if value == "e" and "e" not in self.spec.generators:
                g = self.spec.identity()
            else:
                try:
                    g = self.spec.generator(value)
                except GroupError:
                    raise ElementParseError(self.text, pos, f"unknown generator {value!r}")
            power = 1
            if self.peek()[0] == "^":
                self.advance()
                sign = 1
                if self.peek()[0] == "-":
                    self.advance()
                    sign = -1
                if self.peek()[0] != "int":
                    self.fail("expected an integer exponent")
                power = sign * self.advance()[1]
            return GroupRingElement.monomial(_power(g, power))
        if kind == "(":
            self.advance()
            inner = self.expr()
            if self.peek()[0] != ")":
                self.fail("expected ')'")
            self.advance()
            return inner
        self.fail("expected a number, generator, or '('")


def _power(g: GroupElement, k: int) -> GroupElement:
    if k == 0:
        return g.spec.identity()
    base = g if k > 0 else g.inverse()
    acc = base
    for _ in range(abs(k) - 1):
        acc = mul(acc, base)
    return acc


def parse_element(spec: GroupSpec, text: str) -> GroupRingElement:
    """Parse element syntax like "x^-1 + 2 - x" or "a*b - 1"."""
    return _Parser(spec, text).parse()


def parse_relator(spec: GroupSpec, n: int, entry) -> tuple[GroupRingElement, ...]:
    """A relator in Z(G)^n: a bare string for n = 1, else a list of n strings."""
    if isinstance(entry, str):
        if n != 1:
            raise RingError("relators for n > 1 must be lists of n entries")
        return (parse_element(spec, entry),)
    parts = list(entry)
    if len(parts) != n:
        raise RingError(f"relator needs exactly {n} entries")
    return tuple(parse_element(spec, p) for p in parts)
