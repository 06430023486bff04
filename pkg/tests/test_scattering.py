import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph_resonances.graphcore import Edge, MetricGraph, catalog
from qgraph_resonances.scattering import SecularFunction, build, unitary_defect

ALL_CATALOG = [
    catalog("star", [1, 3]), catalog("star", [0, 4]), catalog("interval_Gnn", [1, 2, 3]),
    catalog("Y", [1, math.sqrt(2)]), catalog("circular", [1]), catalog("circular", [2]),
    catalog("circular", [1, 1]), catalog("circular", [1, 1, 1]), catalog("tetrahedron", [2]),
    catalog("cube"), catalog("petersen"), catalog("dodecahedron"),
]


def test_neumann_edge_bond_matrix():
    g = catalog("star", [math.pi, 1])
    bs = build(g, include_leads=False)
    assert np.array_equal(bs.U, [[0, 1], [1, 0]])


def test_bare_vertex_reflection():
    bs = build(catalog("star", [0, 4]))
    assert bs.U.shape == (0, 0)
    assert np.allclose(bs.R, 0.5 - np.eye(4))


def test_y_graph_shapes():
    bs = build(catalog("Y", [1, 2]))
    assert bs.U.shape == (4, 4)
    assert bs.R.shape == (1, 1) and bs.T_o.shape == (1, 4) and bs.T_i.shape == (4, 1)


def test_blocks_are_real_and_frozen():
    bs = build(catalog("tetrahedron", [1]))
    for m in (bs.U, bs.R, bs.T_o, bs.T_i):
        assert not np.iscomplexobj(m)
        with pytest.raises(ValueError):
            m[0, 0] = 1.0


def test_compact_circle_eigenvalue():
    sf = SecularFunction.of(catalog("circular", [1], lengths=[2 * math.pi]), include_leads=False)
    assert abs(sf.evaluate(1.0).f) < 1e-12


def test_star_resonance_is_zero():
    sf = SecularFunction.of(catalog("star", [1, 3]))
    k0 = (math.pi - 1j * math.log(2)) / 2
    assert abs(sf.evaluate(k0).f) < 1e-10


def test_reflection_symmetry():
    sf = SecularFunction.of(catalog("Y", [1, math.sqrt(2)]))
    k = 2.3 - 0.4j
    a, b = sf(k), sf(-k.conjugate())
    assert abs(b - a.conjugate()) <= 1e-12 * abs(a)


@pytest.mark.parametrize("g, k", [(catalog("Y", [1, 1.7]), 1.7), (catalog("tetrahedron", [2]), 0.3)])
def test_unitarity_examples(g, k):
    bs = build(g)
    assert unitary_defect(bs, g.lengths, k) < 1e-12


def test_unitarity_fails_off_axis():
    g = catalog("Y", [1, 1.7])
    bs = build(g)
    d = np.exp(1j * (1 - 0.5j) * np.concatenate([bs.lengths, bs.lengths]))
    S = np.vstack([np.hstack([bs.R, bs.T_o * d]), np.hstack([bs.T_i, bs.U * d])])
    assert np.max(np.abs(S @ S.conj().T - np.eye(5))) > 0.1


@pytest.mark.parametrize("g", ALL_CATALOG, ids=lambda g: f"{len(g.vertices)}v{g.n_edges}e")
def test_unitarity_all_catalog(g):
    rng = np.random.default_rng(0)
    bs = build(g)
    lengths = 0.5 + rng.uniform(size=g.n_edges)
    assert max(unitary_defect(bs, lengths, k) for k in rng.uniform(0, 40, 100)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.lists(st.floats(0.1, 5), min_size=2, max_size=2))
def test_unitarity_property(k, lengths):
    g = catalog("Y", lengths)
    assert unitary_defect(build(g), lengths, k) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 20), st.floats(-1.0, 0.5))
def test_derivative_matches_finite_difference(s, t):
    sf = SecularFunction.of(catalog("circular", [1, 2], lengths=[1.0, math.sqrt(3)]))
    k = complex(s, t)
    val = sf.evaluate(k)
    h = 1e-6
    fd = (sf(k + h) - sf(k - h)) / (2 * h)
    assert abs(val.f_prime - fd) <= 1e-6 * max(abs(fd), abs(val.f), 1e-3)
    assert not val.fd_fallback


def test_singular_fallback_flagged():
    sf = SecularFunction.of(catalog("star", [1, 3]))
    k0 = (math.pi - 1j * math.log(2)) / 2
    val = sf.evaluate(k0)
    f, fp = val
    assert abs(f) < 1e-10 and abs(fp) > 0.1
    assert val.fd_fallback


def test_scaled_representation_deep_in_lower_half_plane():
    sf = SecularFunction.of(catalog("tetrahedron", [1], lengths=[50.0] * 6))
    val = sf.evaluate(1.0 - 30j)
    assert val.exponent > 1000
    assert math.isfinite(abs(val.mantissa)) and 0.5 <= abs(val.mantissa) < 2


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 15), st.floats(-0.8, 0.3), st.floats(0.1, 0.9))
def test_subdivision_leaves_f_unchanged(s, t, frac):
    g = catalog("interval_Gnn", [1.3, 2, 3])
    h = MetricGraph(("v", "w", "m"), (Edge("a", "v", "m", 1.3 * frac), Edge("b", "m", "w", 1.3 * (1 - frac))),
                    g.leads)
    k = complex(s, t)
    f1 = SecularFunction.of(g)(k)
    f2 = SecularFunction.of(h)(k)
    # a degree-2 Kirchhoff vertex is transparent
    assert abs(f1 - f2) <= 1e-12 * max(abs(f1), 1e-300)


def test_compact_zeros_match_known_spectra():
    circle = SecularFunction.of(catalog("circular", [1], lengths=[2 * math.pi]), include_leads=False)
    edge = SecularFunction.of(catalog("star", [math.pi, 1]), include_leads=False)
    for k in (1.0, 2.0, 3.0):
        assert abs(circle(k)) < 1e-10
        assert abs(edge(k)) < 1e-10


def test_log_derivative_vectorised():
    sf = SecularFunction.of(catalog("Y", [1, 2]))
    ks = np.array([1.1 - 0.2j, 2.5 + 0.1j, 7.0])
    batch = sf.log_derivative(ks)
    single = [sf.evaluate(k).log_derivative for k in ks]
    assert np.allclose(batch, single, rtol=1e-10)
