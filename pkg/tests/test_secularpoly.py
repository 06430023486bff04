import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph_resonances.graphcore import catalog
from qgraph_resonances.polynomial import Poly, bareiss_det, primitive_part
from qgraph_resonances.scattering import SecularFunction
from qgraph_resonances.secularpoly import (
    SizeGuardError,
    normalize,
    poly_from_string,
    proportional,
    raw_secular,
    symbolic_secular,
)

C11 = poly_from_string("(z*w - w - z - 3)*(z*w + z + w - 3)", ("z", "w"))
Y = poly_from_string("z^2*w^2 - z^2 - w^2 - 3", ("z", "w"))
C111 = poly_from_string(
    "z1^2*z2^2*z3^2 - (z1^2*z2^2 + z2^2*z3^2 + z3^2*z1^2) - 3*(z1^2 + z2^2 + z3^2) - 16*z1*z2*z3 + 27",
    ("z1", "z2", "z3"))


@pytest.mark.parametrize("name, params, ref", [
    ("circular", [1, 1], C11), ("Y", [1, 2], Y), ("circular", [1, 1, 1], C111)])
def test_reference_polynomials(name, params, ref):
    t0 = time.perf_counter()
    sp = symbolic_secular(catalog(name, params))
    assert time.perf_counter() - t0 < 5
    assert proportional(sp.poly, ref)
    assert sp.poly == normalize(ref)[2]


def test_normalized_form():
    sp = symbolic_secular(catalog("circular", [1, 1, 1]))
    coeffs = list(sp.poly.terms.values())
    assert all(c.denominator == 1 for c in coeffs)
    assert math.gcd(*[int(c) for c in coeffs]) == 1
    assert sp.poly.leading()[1] > 0
    assert all(sp.poly.degree_in(i) <= 2 for i in range(3))


def test_unit_recovers_raw_determinant():
    g = catalog("Y", [1, 2])
    sp = symbolic_secular(g)
    assert raw_secular(g) == sp.poly.scale(sp.unit_scalar).shift(sp.unit_monomial)


def test_proportional_examples():
    p = C11
    assert proportional(p, p.scale(3))
    assert proportional(p, p * Poly.variable(2, 0))
    assert not proportional(p, p + 1)
    assert not proportional(p, Y)


def test_proportional_variable_mismatch():
    with pytest.raises(ValueError):
        proportional(C11, C111)


def test_w_set_zeros():
    c11 = symbolic_secular(catalog("circular", [1, 1])).poly
    assert c11(1, 1) == 0 and c11(-1, -1) == 0
    assert c11(1, -1) != 0
    c111 = symbolic_secular(catalog("circular", [1, 1, 1])).poly
    for x in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]:
        assert c111(*x) == 0
    for x in [(-1, 1, 1), (-1, -1, -1)]:
        assert c111(*x) != 0


def test_y_torus_zeros_include_mixed_signs():
    y = symbolic_secular(catalog("Y", [1, 2])).poly
    for z, w in [(1j, 1j), (1j, -1j), (-1j, 1j), (-1j, -1j)]:
        assert abs(y(z, w)) < 1e-14


def test_size_guard():
    with pytest.raises(SizeGuardError):
        symbolic_secular(catalog("cube"))


def test_term_format():
    lines = symbolic_secular(catalog("Y", [1, 2])).term_lines()
    assert lines == ["1 * z1^2 z2^2", "-1 * z1^2", "-1 * z2^2", "-3"]


@pytest.mark.parametrize("name, params", [("circular", [1, 1]), ("Y", [1, 1]), ("circular", [1, 1, 1]),
                                          ("star", [1, 3]), ("interval_Gnn", [1, 2, 3]), ("circular", [2])])
def test_cross_validation_with_scattering(name, params):
    rng = np.random.default_rng(1)
    g = catalog(name, params)
    lengths = 0.5 + rng.uniform(size=g.n_edges)
    sf = SecularFunction.of(g, lengths=lengths)
    sp = symbolic_secular(g)
    ratios = []
    for k in rng.uniform(0.5, 10, 50) + 1j * rng.uniform(-0.5, 0.5, 50):
        z = np.exp(1j * k * lengths)
        ratios.append(sf(k) / (sp.evaluate_numeric(z) * np.prod(z ** np.array(sp.unit_monomial))))
    ratios = np.array(ratios)
    assert np.max(np.abs(ratios / ratios[0] - 1)) < 1e-9
    assert abs(ratios[0] - float(sp.unit_scalar)) < 1e-9


def test_tetrahedron_expands():
    sp = symbolic_secular(catalog("tetrahedron", [1]))
    assert sp.nvars == 6
    z = np.exp(1j * np.array([0.3, 1.1, 2.0, 0.7, 1.9, 2.5]))
    sf = SecularFunction.of(catalog("tetrahedron", [1]), lengths=[0.3, 1.1, 2.0, 0.7, 1.9, 2.5])
    raw = sp.evaluate_numeric(z) * float(sp.unit_scalar) * np.prod(z ** np.array(sp.unit_monomial))
    assert abs(raw - sf(1.0)) < 1e-9 * abs(raw)


# --- polynomial arithmetic ---------------------------------------------------

small_polys = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
    st.integers(-5, 5).map(Fraction), min_size=1, max_size=5,
).map(lambda d: Poly(2, d))


@settings(max_examples=60, deadline=None)
@given(small_polys, small_polys)
def test_exact_division_inverts_multiplication(p, q):
    if q.is_zero():
        return
    assert (p * q).divexact(q) == p


@settings(max_examples=60, deadline=None)
@given(small_polys)
def test_primitive_part_roundtrip(p):
    if p.is_zero():
        return
    unit, prim = primitive_part(p)
    assert prim.scale(unit) == p
    assert prim.leading()[1] > 0


def test_inexact_division_raises():
    with pytest.raises(ArithmeticError):
        poly_from_string("z^2 + 1", ("z", "w")).divexact(poly_from_string("z + 1", ("z", "w")))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=9, max_size=9))
def test_bareiss_matches_numeric_det(vals):
    m = [[Poly.constant(1, v) for v in vals[i * 3:(i + 1) * 3]] for i in range(3)]
    det = bareiss_det(m)
    expected = round(np.linalg.det(np.array(vals, dtype=float).reshape(3, 3)))
    assert det == Poly.constant(1, expected) if expected else det.is_zero()


def test_parser_rejects_unknown_syntax():
    with pytest.raises(ValueError):
        poly_from_string("z / 2", ("z",))
