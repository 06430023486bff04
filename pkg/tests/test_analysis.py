import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgraph_resonances import analysis as an
from qgraph_resonances.graphcore import catalog
from qgraph_resonances.resonancefinder import Resonance, SearchRegion, extract_state, find_resonances, search
from qgraph_resonances.scattering import SecularFunction

SQRT2 = math.sqrt(2)


@pytest.fixture(scope="module")
def y_run():
    g = catalog("Y", [1, SQRT2])
    sf = SecularFunction.of(g)
    return g, sf, search(sf, SearchRegion(1e-3, 2000, -0.105, 1e-6))


# --- energy identity ---------------------------------------------------------

def test_energy_star():
    sf = SecularFunction.of(catalog("star", [1, 3]))
    k0 = complex(math.pi / 2, -0.5 * math.log(2))
    r = Resonance(k0, 0.0, state=extract_state(sf, k0))
    assert an.energy_residual(sf, r) < 1e-8
    assert math.isclose(an.state_energy(sf, r), 1 / (2 * abs(k0.imag)), rel_tol=1e-8)


def test_energy_norm_on_y_resonances(y_run):
    _, sf, res = y_run
    for r in res.resonances[::25]:
        assert an.energy_residual(sf, r) < 1e-8
        assert math.isclose(an.state_energy(sf, r) * 2 * abs(r.k.imag), 1, rel_tol=1e-8)


def test_energy_embedded_eigenvalue():
    sf = SecularFunction.of(catalog("circular", [1, 1], lengths=[2 * math.pi, 2 * math.pi]))
    assert an.energy_residual(sf, Resonance(1.0 + 0j, 0.0)) < 1e-12


def test_energy_rejects_zero_sigma():
    sf = SecularFunction.of(catalog("star", [1, 3]))
    with pytest.raises(ValueError):
        an.energy_residual(sf, Resonance(-0.3j, 0.0))


def test_edge_norm_limits():
    a, b = np.array([0.3 + 0.2j]), np.array([-0.1 + 0.7j])
    at_axis = an.edge_norms(2.0 + 0j, a, b, [1.5])
    near_axis = an.edge_norms(2.0 - 1e-9j, a, b, [1.5])
    assert np.allclose(at_axis, near_axis, rtol=1e-7)
    xs = np.linspace(0, 1.5, 20001)
    k = 2.0 - 0.3j
    u = a[0] * np.exp(1j * k * xs) + b[0] * np.exp(-1j * k * xs)
    assert math.isclose(an.edge_norms(k, a, b, [1.5])[0], np.trapezoid(np.abs(u) ** 2, xs), rel_tol=1e-7)


# --- Weyl --------------------------------------------------------------------

def test_weyl_interval():
    sf = SecularFunction.of(catalog("interval_Gnn", [1, 2, 3]))
    res = find_resonances(sf, SearchRegion(0, 100, -2, 1e-6))
    w = an.weyl_fit(res, 100, 1.0)
    assert abs(w.slope * math.pi - 1) < 0.02
    assert w.closest_reference == "|L|/pi"


def test_weyl_star():
    sf = SecularFunction.of(catalog("star", [1, 3]))
    res = find_resonances(sf, SearchRegion(0, 100, -1, 1e-6))
    assert abs(an.weyl_fit(res, 100).slope * math.pi - 1) < 0.02


def test_weyl_c1_rows():
    L = 2 * math.pi
    sf = SecularFunction.of(catalog("circular", [1], lengths=[L]))
    res = find_resonances(sf, SearchRegion(0, 60, -1, 1e-6))
    real = an.weyl_fit([r for r in res if abs(r.k.imag) < 1e-8], 60, L)
    assert abs(real.slope - 1) < 0.02 and real.closest_reference == "|L|/2pi"
    # the full list adds the row at tau = -ln 3 / L and restores the Weyl density
    full = an.weyl_fit(res, 60, L)
    assert abs(full.slope - 2) < 0.04 and full.closest_reference == "|L|/pi"


def test_weyl_needs_twenty():
    with pytest.raises(an.InsufficientDataError):
        an.weyl_fit([Resonance(complex(j, -0.1), 0) for j in range(1, 10)], 10)


# --- N(eps) ------------------------------------------------------------------

def test_neps_y_exponent(y_run):
    g, _, res = y_run
    rep = an.n_eps_curve(g, None, 2000, np.logspace(-3, -1, 9), resonances=res.resonances)
    assert 0.85 <= rep.d_hat <= 1.15
    assert rep.stable
    assert rep.h_hat is None
    assert all(a[1] <= b[1] for a, b in zip(rep.eps_grid, rep.eps_grid[1:]))


def test_neps_star_gap():
    g = catalog("star", [1, 3])
    rep = an.n_eps_curve(g, None, 100, [1e-3, 1e-2, 0.1, 0.5 * math.log(2) - 0.01])
    assert all(n == 0 for _, n in rep.eps_grid)
    assert rep.exponent is None and rep.message
    assert math.isclose(rep.h_hat, 0.5 * math.log(2))


def test_neps_beyond_band_matches_weyl():
    g = catalog("interval_Gnn", [1, 2, 3])
    rep = an.n_eps_curve(g, None, 200, [0.5, 1.0, 1.5])
    assert rep.eps_grid[0][1] == 0
    assert abs(rep.eps_grid[-1][1] / rep.weyl_slope - 1) < 0.05


def test_neps_rejects_bad_eps():
    with pytest.raises(ValueError):
        an.n_eps_curve(catalog("star", [1, 3]), None, 10, [0.0, 0.1])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-4, 0.1), min_size=2, max_size=6))
def test_neps_monotone(y_run, eps):
    g, _, res = y_run
    rep = an.n_eps_curve(g, None, 2000, eps, resonances=res.resonances)
    values = [n for _, n in rep.eps_grid]
    assert values == sorted(values)


# --- h(G) --------------------------------------------------------------------

def test_h_star():
    hs = an.h_samples(catalog("star", [1, 3]), n_samples=5, K=30)
    assert max(hs) - min(hs) < 1e-9
    assert math.isclose(min(hs), 0.5 * math.log(2), abs_tol=1e-9)


def test_h_interval():
    assert math.isclose(an.estimate_h(catalog("interval_Gnn", [1, 2, 3]), n_samples=3, K=30),
                        0.5 * math.log(6), abs_tol=1e-9)


def test_h_no_edges_is_infinite():
    assert an.estimate_h(catalog("star", [0, 3]), n_samples=2) == math.inf


def test_h_rejects_type_two():
    with pytest.raises(an.NotTypeIError):
        an.estimate_h(catalog("Y", [1, 2]))


def test_h_seed_reproducible():
    g = catalog("interval_Gnn", [1, 2, 2])
    assert an.h_samples(g, 3, K=20, seed=4) == an.h_samples(g, 3, K=20, seed=4)


# --- compact spectra and W_G -------------------------------------------------

def test_compact_circle():
    eig = an.compact_eigenvalues(catalog("circular", [1], lengths=[2 * math.pi]), None, 2.5)
    assert [(round(k, 10), m) for k, m in eig] == [(1.0, 2), (2.0, 2)]


def test_compact_neumann_edge():
    eig = an.compact_eigenvalues(catalog("star", [math.pi, 1]), None, 3.5)
    assert [(round(k, 10), m) for k, m in eig] == [(1.0, 1), (2.0, 1), (3.0, 1)]


def test_compact_tetrahedron():
    eig = dict((round(k, 8), m) for k, m in
               an.compact_eigenvalues(catalog("tetrahedron", [1], lengths=[2 * math.pi] * 6), None, 1.5))
    assert eig.get(1.0, 0) >= 1


def test_compact_rejects_bad_kmax():
    with pytest.raises(ValueError):
        an.compact_eigenvalues(catalog("Y", [1, 2]), None, 0)


@pytest.mark.parametrize("lengths, dims", [
    ((2 * math.pi, 2 * math.pi), (2, 1)),
    ((math.pi, math.pi), (2, 1)),
])
def test_vanishing_c11(lengths, dims):
    res = an.vanishing_eigenfunction_test(catalog("circular", [1, 1]), lengths, 1.0)
    assert (res.eigen_dim, res.vanishing_dim) == dims
    assert res.in_W_unique
    assert res.witness is not None


def test_vanishing_c11_sine_witness():
    g = catalog("circular", [1, 1])
    res = an.vanishing_eigenfunction_test(g, (2 * math.pi, 2 * math.pi), 1.0)
    n = g.n_edges
    x = res.witness
    a, b = x[:n], x[n:]  # at k = 1, D = Id
    # vanishing at x = 0 of each edge means a_e = -b_e
    assert np.allclose(a, -b, atol=1e-8)


def test_vanishing_irrational_not_in_w():
    res = an.vanishing_eigenfunction_test(catalog("circular", [1, 1]), (2 * math.pi, 2 * math.pi * SQRT2), 1.0)
    assert not res.in_W


def test_y_torus_points():
    pts = an.torus_zeros(catalog("Y", [1, 2]))
    phases = sorted(tuple(np.round(np.angle(p) / (math.pi / 2)).astype(int)) for p in pts)
    assert phases == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_c11_torus_points():
    pts = an.torus_zeros(catalog("circular", [1, 1]))
    got = sorted(tuple(np.round(p.real).astype(int)) for p in pts)
    assert got == [(-1, -1), (1, 1)]


# --- branch structure ----------------------------------------------------------

def test_branch_symmetric_y():
    tr = an.branch_trace(catalog("Y", [1, 1]), [1j, 1j])
    assert abs(tr.dtau_du0) < 1e-6
    assert abs(tr.m_weights[0] / tr.m_weights[1] - 1) < 1e-8
    assert abs(tr.dbeta_du0 + 1) < 1e-6
    assert tr.tangent_residual < 1e-6
    assert np.all(tr.tau <= 1e-12)


def test_branch_coefficient_against_oracle():
    g = catalog("Y", [1, 2])
    tr = an.branch_trace(g, [1j, 1j])
    assert tr.c > 0
    # the flow is periodic at (1, 2); the oracle needs incommensurate lengths
    gp = catalog("Y", [1, 2.02])
    bases = [an.snap_torus_point(w) for w in an.torus_zeros(gp)]
    oracle = an.direct_branch_fit(gp, bases, K=2000)
    tr_p = an.branch_trace(gp, [1j, 1j])
    assert abs(tr_p.c / oracle.c - 1) < 0.05
    assert abs(tr.c / tr_p.c - 1) < 0.02
    assert abs(tr.c * 3 - 1) < 0.01  # c = 1/(l+L) at leading order, not 1/(4(l+L))
    assert math.isclose(tr.quoted_c, 1 / 12)


def test_branch_rejects_point_outside_w():
    with pytest.raises(an.NotInWError):
        an.branch_trace(catalog("Y", [1, 2]), [1, 1])


def test_branch_rejects_more_edges():
    with pytest.raises(ValueError):
        an.branch_trace(catalog("circular", [1, 1, 1]), [1, 1, 1])


def test_barra_gaspard_matches_direct_count(y_run):
    g, _, res = y_run
    traces = [an.branch_trace(g, an.snap_torus_point(w)) for w in an.torus_zeros(g)]
    assert len(traces) == 4
    for eps in (1e-3, 3e-3, 1e-2):
        direct = an.count_near_axis(res.resonances, 2000, eps) / 2000
        pred = an.barra_gaspard_prediction(traces, eps)
        assert abs(direct / pred - 1) < 0.1
        closed = 2 * (1 + SQRT2) ** 1.5 * math.sqrt(eps) / math.pi ** 2
        assert abs(pred / closed - 1) < 0.02


def test_barra_gaspard_needs_long_trace():
    g = catalog("Y", [1, SQRT2])
    tr = an.branch_trace(g, [1j, 1j], np.linspace(-0.05, 0.05, 101))
    with pytest.raises(an.InsufficientDataError):
        an.barra_gaspard_prediction([tr], 0.1)
