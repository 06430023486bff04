"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm


class Poly:
    """Polynomial in ``nvars`` variables stored as {exponent tuple: Fraction}.

    Monomials are compared lexicographically on their exponent tuples, so
    the leading term is the lex-largest exponent vector.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    if len(mono) != nvars:
                        raise ValueError(f"monomial {mono} has wrong arity for {nvars} variables")
                    self.terms[tuple(mono)] = c

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int, coeff=1) -> "Poly":
        mono = [0] * nvars
        mono[i] = 1
        return cls(nvars, {tuple(mono): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Poly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def leading(self):
        mono = max(self.terms)
        return mono, self.terms[mono]

    def divexact(self, divisor: "Poly") -> "Poly":
        """Quotient of an exact division; raises if ``divisor`` does not divide."""
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        lm_d, lc_d = divisor.leading()
        rem = self
        quotient: dict = {}
        while not rem.is_zero():
            lm_r, lc_r = rem.leading()
            shift = tuple(a - b for a, b in zip(lm_r, lm_d))
            if min(shift) < 0:
                raise ArithmeticError("division is not exact")
            c = lc_r / lc_d
            quotient[shift] = quotient.get(shift, 0) + c
            rem = rem - Poly(self.nvars, {shift: c}) * divisor
        return Poly(self.nvars, quotient)

    def degree_in(self, i: int) -> int:
        return max((m[i] for m in self.terms), default=0)

    def monomial_content(self) -> tuple[int, ...]:
        if not self.terms:
            return (0,) * self.nvars
        return tuple(min(m[i] for m in self.terms) for i in range(self.nvars))

    def shift(self, exps) -> "Poly":
        """Multiply by the monomial with exponent vector ``exps`` (may be negative)."""
        return Poly(self.nvars, {tuple(a + b for a, b in zip(m, exps)): c for m, c in self.terms.items()})

    def scale(self, c) -> "Poly":
        return Poly(self.nvars, {m: v * c for m, v in self.terms.items()})

    def __call__(self, *values):
        if len(values) == 1 and hasattr(values[0], "__len__"):
            values = tuple(values[0])
        if len(values) != self.nvars:
            raise ValueError(f"expected {self.nvars} values")
        total = 0
        for m, c in self.terms.items():
            term = c if all(isinstance(v, (int, Fraction)) for v in values) else complex(c)
            for v, e in zip(values, m):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def derivative(self, i: int) -> "Poly":
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = c * m[i]
        return Poly(self.nvars, out)

    def sorted_terms(self):
        """Terms in descending lexicographic monomial order."""
        return sorted(self.terms.items(), key=lambda t: t[0], reverse=True)

    def format(self, names=None) -> list[str]:
        names = names or [f"z{i + 1}" for i in range(self.nvars)]
        lines = []
        for mono, c in self.sorted_terms():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, mono) if e]
            coef = str(c)
            lines.append(f"{coef} * {' '.join(factors)}" if factors else coef)
        return lines

    def __repr__(self):
        return " + ".join(self.format()) if self.terms else "0"


def primitive_part(p: Poly) -> tuple[Fraction, Poly]:
    """Split ``p = unit * q`` with q having coprime integer coefficients and
    a positive leading coefficient."""
    if p.is_zero():
        return Fraction(1), p
    den = 1
    for c in p.terms.values():
        den = lcm(den, c.denominator)
    nums = [int(c * den) for c in p.terms.values()]
    g = 0
    for n in nums:
        g = gcd(g, n)
    unit = Fraction(g, den)
    if p.leading()[1] < 0:
        unit = -unit
    return unit, p.scale(1 / unit)


def bareiss_det(matrix: list[list[Poly]]) -> Poly:
    """Determinant by fraction-free (Bareiss) elimination over Q[z]."""
    n = len(matrix)
    if n == 0:
        raise ValueError("empty matrix")
    nvars = matrix[0][0].nvars
    a = [row[:] for row in matrix]
    sign = 1
    prev = Poly.constant(nvars, 1)
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((r for r in range(k + 1, n) if not a[r][k].is_zero()), None)
            if swap is None:
                return Poly(nvars)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = num.divexact(prev)
            a[i][k] = Poly(nvars)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    return det if sign > 0 else -det
