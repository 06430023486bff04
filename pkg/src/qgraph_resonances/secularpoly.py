"""Exact secular polynomial det(Id - U (z)_2) over the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphcore import MetricGraph
from .polynomial import Poly, bareiss_det, primitive_part

MAX_EDGES = 8


class SizeGuardError(ValueError):
    pass


@dataclass(frozen=True)
class SecularPolynomial:
    """Normalized secular polynomial; ``poly * unit_scalar * z**unit_monomial``
    is the raw determinant."""

    poly: Poly
    unit_scalar: Fraction
    unit_monomial: tuple[int, ...]
    variables: tuple[str, ...]

    @property
    def nvars(self) -> int:
        return self.poly.nvars

    def __call__(self, *z):
        return self.poly(*z)

    def evaluate_numeric(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        total = 0j
        for mono, c in self.poly.terms.items():
            total += float(c) * np.prod(z ** np.array(mono))
        return complex(total)

    def term_lines(self) -> list[str]:
        return self.poly.format()


def normalize(p: Poly) -> tuple[Fraction, tuple[int, ...], Poly]:
    """Strip the monomial content and rational content from ``p``."""
    mono = p.monomial_content()
    stripped = p.shift(tuple(-m for m in mono))
    unit, prim = primitive_part(stripped)
    return unit, mono, prim


def _exact_bond_matrix(g: MetricGraph) -> list[list[Fraction]]:
    n = g.n_edges
    tails = [e.source for e in g.edges] + [e.target for e in g.edges]
    heads = [e.target for e in g.edges] + [e.source for e in g.edges]
    deg = {v: g.degree(v) for v in g.vertices}
    U = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for out in range(2 * n):
        v = tails[out]
        for inc in range(2 * n):
            if heads[inc] == v:
                U[out][inc] = Fraction(2, deg[v]) - (1 if inc == (out + n) % (2 * n) else 0)
    return U


def raw_secular(g: MetricGraph) -> Poly:
    """Unnormalized det(Id - U (z)_2), one variable per edge."""
    n = g.n_edges
    if n > MAX_EDGES:
        raise SizeGuardError(f"symbolic expansion limited to {MAX_EDGES} edges, graph has {n}")
    if n == 0:
        return Poly.constant(0, 1)
    U = _exact_bond_matrix(g)
    rows = []
    for i in range(2 * n):
        row = []
        for j in range(2 * n):
            entry = Poly.variable(n, j % n, -U[i][j]) if U[i][j] else Poly(n)
            if i == j:
                entry = entry + 1
            row.append(entry)
        rows.append(row)
    return bareiss_det(rows)


def symbolic_secular(g: MetricGraph) -> SecularPolynomial:
    raw = raw_secular(g)
    unit, mono, prim = normalize(raw)
    return SecularPolynomial(prim, unit, mono, tuple(e.id for e in g.edges))


def proportional(p, q) -> bool:
    """True iff p = c * z^m * q for a nonzero rational c and integer shift m."""
    p = p.poly if isinstance(p, SecularPolynomial) else p
    q = q.poly if isinstance(q, SecularPolynomial) else q
    if p.nvars != q.nvars:
        raise ValueError("polynomials have different variable sets")
    if p.is_zero() or q.is_zero():
        return p.is_zero() and q.is_zero()
    return normalize(p)[2] == normalize(q)[2]


def poly_from_string(expr: str, names) -> Poly:
    """Parse a polynomial written with +, -, *, ^ and integer coefficients.

    Only used for stating reference polynomials in tests and reports.
    """
    import ast

    nvars = len(names)
    index = {n: i for i, n in enumerate(names)}

    def conv(node):
        if isinstance(node, ast.Expression):
            return conv(node.body)
        if isinstance(node, ast.BinOp):
            left, right = conv(node.left), node.right
            if isinstance(node.op, ast.Add):
                return left + conv(right)
            if isinstance(node.op, ast.Sub):
                return left - conv(right)
            if isinstance(node.op, ast.Mult):
                return left * conv(right)
            if isinstance(node.op, (ast.Pow, ast.BitXor)):
                exp = right.value
                out = Poly.constant(nvars, 1)
                for _ in range(exp):
                    out = out * left
                return out
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -conv(node.operand)
        if isinstance(node, ast.Constant):
            return Poly.constant(nvars, Fraction(node.value))
        if isinstance(node, ast.Name):
            return Poly.variable(nvars, index[node.id])
        raise ValueError(f"unsupported expression element {ast.dump(node)}")

    return conv(ast.parse(expr.replace("^", "**"), mode="eval"))
