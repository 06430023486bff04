"""Measurements on resonance sets: energy identity, counting statistics,
type-I gaps, compact spectra, vanishing eigenfunctions and the local
structure of the resonance set near real-axis crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .graphcore import MetricGraph, compute_invariants
from .resonancefinder import (
    FinderConfig,
    Resonance,
    SearchRegion,
    SearchResult,
    extract_state,
    search,
)
from .scattering import SecularFunction
from .secularpoly import symbolic_secular


class InsufficientDataError(ValueError):
    pass


class NotTypeIError(ValueError):
    pass


class NotInWError(ValueError):
    pass


class BranchDivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# energy identity

def _phi(z):
    """(exp(z) - 1) / z, continuous at z = 0."""
    z = complex(z)
    if abs(z) < 1e-5:
        return 1 + z / 2 + z * z / 6 + z ** 3 / 24
    return (np.exp(z) - 1) / z


def edge_norms(k: complex, a, b, lengths) -> np.ndarray:
    """Integral of |a e^{ikx} + b e^{-ikx}|^2 over [0, l_e] for every edge."""
    sigma, tau = k.real, k.imag
    out = []
    for ae, be, l in zip(a, b, lengths):
        forward = abs(ae) ** 2 * l * _phi(-2 * tau * l).real
        backward = abs(be) ** 2 * l * _phi(2 * tau * l).real
        cross = 2 * (ae * np.conj(be) * l * _phi(2j * sigma * l)).real
        out.append(forward + backward + cross)
    return np.array(out)


def energy_residual(sf: SecularFunction, r: Resonance) -> float:
    """Relative mismatch of -2 tau ||u||^2 = sum |t_m|^2 for a resonant state."""
    k = r.k
    if k.real == 0:
        raise ValueError("the energy identity needs sigma != 0")
    state = r.state or extract_state(sf, k, multiplicity=r.multiplicity)
    norm2 = float(np.sum(edge_norms(k, state.a, state.b, sf.lengths)))
    flux = float(np.sum(np.abs(state.t_out) ** 2))
    lhs = -2 * k.imag * norm2
    denom = flux if flux > 1e-18 else 1.0
    return abs(lhs - flux) / max(denom, 1e-30)


def state_energy(sf: SecularFunction, r: Resonance) -> float:
    """||u||^2 on the finite part of the graph."""
    state = r.state or extract_state(sf, r.k, multiplicity=r.multiplicity)
    return float(np.sum(edge_norms(r.k, state.a, state.b, sf.lengths)))


# ---------------------------------------------------------------------------
# Weyl counting

@dataclass(frozen=True)
class WeylFit:
    slope: float
    intercept: float
    total_length: float | None = None

    @property
    def one_sided(self) -> float | None:
        return None if self.total_length is None else self.total_length / math.pi

    @property
    def half_density(self) -> float | None:
        return None if self.total_length is None else self.total_length / (2 * math.pi)

    @property
    def closest_reference(self) -> str | None:
        if self.total_length is None:
            return None
        d1 = abs(self.slope - self.one_sided)
        d2 = abs(self.slope - self.half_density)
        return "|L|/pi" if d1 <= d2 else "|L|/2pi"

    def __iter__(self):
        yield self.slope
        yield self.intercept


def weyl_fit(resonances, K: float, total_length: float | None = None, n_grid: int = 512) -> WeylFit:
    """Least-squares line through #{sigma_j <= x} for x in [K/4, K]."""
    sig = np.sort([r.k.real if isinstance(r, Resonance) else complex(r).real for r in resonances])
    sig = sig[(sig >= 0) & (sig <= K)]
    if len(sig) < 20:
        raise InsufficientDataError(f"only {len(sig)} resonances below K={K}; need at least 20")
    xs = np.linspace(K / 4, K, n_grid)
    counts = np.searchsorted(sig, xs, side="right")
    slope, intercept = np.polyfit(xs, counts, 1)
    return WeylFit(float(slope), float(intercept), total_length)


# ---------------------------------------------------------------------------
# N(eps)

@dataclass
class CountingReport:
    K: float
    eps_grid: list  # (eps, N_hat)
    exponent: float | None  # slope of log N_hat against log eps
    d_hat: float | None
    stable: bool | None
    d_hat_half: float | None
    weyl: WeylFit | None
    h_hat: float | None
    counts: list  # raw counts at each eps
    message: str = ""
    search: SearchResult | None = field(default=None, repr=False)

    @property
    def weyl_slope(self):
        return None if self.weyl is None else self.weyl.slope


def _loglog_exponent(eps, counts, min_count=10):
    eps = np.asarray(eps, dtype=float)
    counts = np.asarray(counts, dtype=float)
    mask = counts >= min_count
    if mask.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(eps[mask]), np.log(counts[mask]), 1)
    return float(slope)


def count_near_axis(resonances, K, eps, tau_cap=1e-6) -> int:
    return sum(
        r.multiplicity for r in resonances
        if 0 <= r.k.real <= K and -eps <= r.k.imag <= tau_cap
    )


def n_eps_curve(g: MetricGraph, lengths, K: float, eps_grid, cfg: FinderConfig | None = None,
                k_floor: float = 1e-3, resonances=None) -> CountingReport:
    """Per-unit-frequency counts of resonances within eps of the real axis."""
    eps_grid = sorted({float(e) for e in eps_grid})
    if not eps_grid or eps_grid[0] <= 0:
        raise ValueError("eps values must be positive")
    sf = SecularFunction.of(g, lengths=lengths)
    result = None
    if resonances is None:
        region = SearchRegion(k_floor, K, -eps_grid[-1] * 1.05 - 1e-9, 1e-6, k_floor=k_floor)
        result = search(sf, region, cfg)
        resonances = result.resonances
    counts = [count_near_axis(resonances, K, e) for e in eps_grid]
    half = [count_near_axis(resonances, K / 2, e) for e in eps_grid]
    curve = [(e, c / K) for e, c in zip(eps_grid, counts)]
    exponent = _loglog_exponent(eps_grid, counts)
    exponent_half = _loglog_exponent(eps_grid, half)
    d_hat = None if exponent is None else 2 * exponent
    d_half = None if exponent_half is None else 2 * exponent_half
    stable = None
    if d_hat is not None and d_half is not None:
        stable = abs(d_hat - d_half) <= 0.1 * abs(d_hat)
    message = ""
    if exponent is None:
        message = "fewer than two eps values with at least 10 resonances; widen K or the eps range"
    total_length = float(np.sum(sf.lengths))
    try:
        weyl = weyl_fit(resonances, K, total_length)
    except InsufficientDataError:
        weyl = None
    h_hat = None
    if compute_invariants(g).graph_type == "I":
        taus = [r.k.imag for r in resonances if k_floor <= r.k.real <= K]
        h_hat = min((-t * total_length for t in taus), default=math.inf)
    return CountingReport(K, curve, exponent, d_hat, stable, d_half, weyl, h_hat, counts,
                          message, result)


# ---------------------------------------------------------------------------
# type I gap

def h_samples(g: MetricGraph, n_samples: int = 20, K: float = 40.0, seed: int = 0,
              depth: float = 5.0, cfg: FinderConfig | None = None) -> list[float]:
    """Per-sample gap estimates min(-tau |L|) for seeded random lengths.

    Lengths are drawn as 1 + U(0, 1) per edge and rescaled to total length 1;
    each entry is the smallest -tau over resonances with sigma in
    [k_floor, K] and tau >= -depth (inf when there are none).
    """
    if compute_invariants(g).graph_type != "I":
        raise NotTypeIError("h(G) is zero for type II graphs; estimate_h needs a type I graph")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if g.n_edges == 0:
        return [math.inf] * n_samples
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        lengths = 1 + rng.uniform(0, 1, size=g.n_edges)
        lengths /= lengths.sum()
        sf = SecularFunction.of(g, lengths=lengths)
        res = search(sf, SearchRegion(1e-3, K, -depth, 1e-6), cfg).resonances
        out.append(min((-r.k.imag for r in res), default=math.inf))
    return out


def estimate_h(g: MetricGraph, n_samples: int = 20, K: float = 40.0, seed: int = 0,
               depth: float = 5.0, cfg: FinderConfig | None = None) -> float:
    """Upper-bound estimate of the resonance gap h(G) of a type I graph: the
    minimum of :func:`h_samples`."""
    return min(h_samples(g, n_samples, K, seed, depth, cfg))


# ---------------------------------------------------------------------------
# compact spectrum and vanishing eigenfunctions

def compact_eigenvalues(g: MetricGraph, lengths=None, k_max: float = 10.0,
                        cfg: FinderConfig | None = None, k_floor: float = 1e-3):
    """Eigenvalues k in (k_floor, k_max] of the graph without leads, with multiplicities."""
    if k_max <= 0:
        raise ValueError("k_max must be positive")
    sf = SecularFunction.of(g, include_leads=False, lengths=lengths)
    region = SearchRegion(k_floor, k_max, -1e-6, 1e-6, k_floor=k_floor)
    return [(r.k.real, r.multiplicity) for r in search(sf, region, cfg).resonances]


@dataclass
class VanishingTest:
    eigen_dim: int
    vanishing_dim: int
    witness: np.ndarray | None  # bond amplitudes of the compact graph

    def __iter__(self):
        yield self.eigen_dim
        yield self.vanishing_dim
        yield self.witness

    @property
    def in_W(self) -> bool:
        return self.vanishing_dim >= 1

    @property
    def in_W_unique(self) -> bool:
        return self.vanishing_dim == 1


def _null_space(A: np.ndarray, tol: float) -> np.ndarray:
    if A.shape[0] == 0:
        return np.eye(A.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def vertex_value_rows(g: MetricGraph, z) -> np.ndarray:
    """Linear functionals giving u(v), v in V0, from bond amplitudes."""
    n = g.n_edges
    z = np.asarray(z, dtype=complex)
    rows = []
    for v in g.v0:
        row = np.zeros(2 * n, dtype=complex)
        for i, e in enumerate(g.edges):
            if e.source == v:
                row[i], row[n + i] = 1.0, z[i]
                break
            if e.target == v:
                row[i], row[n + i] = z[i], 1.0
                break
        else:
            continue
        rows.append(row)
    return np.array(rows).reshape(len(rows), 2 * n)


def vanishing_eigenfunction_test(g: MetricGraph, lengths, k: float, tol: float = 1e-8) -> VanishingTest:
    """Dimension of the k-eigenspace of the compact graph and of its subspace
    vanishing on the lead vertices."""
    sf = SecularFunction.of(g, include_leads=False, lengths=lengths)
    if sf.size == 0:
        return VanishingTest(0, 0, None)
    N = _null_space(sf.matrix(k), tol)
    if N.shape[1] == 0:
        return VanishingTest(0, 0, None)
    z = np.exp(1j * k * np.asarray(sf.lengths))
    C = vertex_value_rows(g, z)
    sub = _null_space(C @ N, tol) if C.size else np.eye(N.shape[1], dtype=complex)
    witness = None
    if sub.shape[1]:
        witness = N @ sub[:, 0]
        witness = witness / np.linalg.norm(witness)
    return VanishingTest(N.shape[1], sub.shape[1], witness)


def torus_lengths(w) -> np.ndarray:
    """Lengths in (0, 2 pi] whose exponentials at k = 1 give the torus point w."""
    ang = np.mod(np.angle(np.asarray(w, dtype=complex)), 2 * math.pi)
    return np.where(ang <= 1e-14, 2 * math.pi, ang)


def w_membership(g: MetricGraph, w, tol: float = 1e-8) -> VanishingTest:
    return vanishing_eigenfunction_test(g, torus_lengths(w), 1.0, tol)


# ---------------------------------------------------------------------------
# branch structure for two-edge graphs

class _NumericPoly:
    """Float evaluation of a two-variable polynomial and its partials."""

    def __init__(self, poly):
        self.monos = np.array(list(poly.terms), dtype=int)
        self.coefs = np.array([float(c) for c in poly.terms.values()])

    def __call__(self, z, w):
        e = self.monos
        return np.sum(self.coefs * z ** e[:, 0] * w ** e[:, 1])

    def dz(self, z, w):
        e = self.monos
        return np.sum(self.coefs * e[:, 0] * z ** np.maximum(e[:, 0] - 1, 0) * w ** e[:, 1])

    def dw(self, z, w):
        e = self.monos
        return np.sum(self.coefs * e[:, 1] * z ** e[:, 0] * w ** np.maximum(e[:, 1] - 1, 0))


@dataclass
class BranchTrace:
    base: tuple  # torus point w0
    lengths: tuple
    u: np.ndarray
    tau: np.ndarray
    beta: np.ndarray  # absolute phase of the second edge along the branch
    c: float  # tau ~ -c u^2
    dtau_du0: float
    dbeta_du0: float
    m_weights: np.ndarray
    tangent_residual: float

    @property
    def quoted_c(self) -> float:
        l, L = self.lengths
        return 1 / (4 * (l + L))

    def samples(self):
        return list(zip(self.u.tolist(), self.tau.tolist()))


def _solve_branch_point(P: _NumericPoly, alpha, lengths, beta0, tau0, tol=1e-14, maxiter=50):
    l, L = lengths
    beta, tau = beta0, tau0
    for _ in range(maxiter):
        z = np.exp(1j * alpha - tau * l)
        w = np.exp(1j * beta - tau * L)
        F = P(z, w)
        Pz, Pw = P.dz(z, w), P.dw(z, w)
        dF_dbeta = 1j * w * Pw
        dF_dtau = -l * z * Pz - L * w * Pw
        J = np.array([[dF_dbeta.real, dF_dtau.real], [dF_dbeta.imag, dF_dtau.imag]])
        try:
            step = np.linalg.solve(J, [-F.real, -F.imag])
        except np.linalg.LinAlgError:
            raise BranchDivergenceError("singular Jacobian while tracing the branch") from None
        beta += step[0]
        tau += step[1]
        if abs(step[0]) + abs(step[1]) < tol:
            return beta, tau
    raise BranchDivergenceError(f"Newton did not converge at alpha={alpha}")


def _trace_along(P, alpha0, lengths, beta0, us):
    """Continue (beta, tau) from u = 0 along the sorted grid ``us``."""
    out = {}
    for direction in (1, -1):
        side = sorted((u for u in us if direction * u > 0), key=abs)
        beta, tau = _solve_branch_point(P, alpha0, lengths, beta0, 0.0)
        out[0.0] = (beta, tau)
        prev_u, prev = 0.0, (beta, tau)
        slope = (0.0, 0.0)
        for u in side:
            guess_b = prev[0] + slope[0] * (u - prev_u)
            guess_t = prev[1] + slope[1] * (u - prev_u)
            cur = _solve_branch_point(P, alpha0 + u, lengths, guess_b, guess_t)
            slope = ((cur[0] - prev[0]) / (u - prev_u), (cur[1] - prev[1]) / (u - prev_u))
            out[u] = cur
            prev_u, prev = u, cur
    return out


def branch_trace(g: MetricGraph, w0, u_grid=None, fit_window: float = 0.05,
                 lengths=None, check_membership: bool = True) -> BranchTrace:
    """Follow the resonance set {R_G(e^{i alpha - tau l}) = 0} through a real-axis
    point w0 with alpha_1 = alpha_1(w0) + u, solving for the second phase and tau."""
    if g.n_edges != 2:
        raise ValueError("branch_trace is implemented for graphs with exactly two edges")
    w0 = np.asarray(w0, dtype=complex)
    if check_membership and not w_membership(g, w0, tol=1e-6).in_W:
        raise NotInWError(f"torus point {w0} is not in W_G")
    lengths = tuple(float(x) for x in (lengths if lengths is not None else g.lengths))
    P = _NumericPoly(symbolic_secular(g).poly)
    if u_grid is None:
        u_grid = np.linspace(-0.2, 0.2, 401)
    us = sorted(set(float(u) for u in u_grid) | {0.0})
    alpha0, beta0 = float(np.angle(w0[0])), float(np.angle(w0[1]))
    sol = _trace_along(P, alpha0, lengths, beta0, us)
    u = np.array(us)
    beta = np.array([sol[x][0] for x in us])
    tau = np.array([sol[x][1] for x in us])

    mask = (np.abs(u) <= fit_window) & (u != 0)
    if mask.sum() < 2:
        raise InsufficientDataError("need at least two samples inside the fit window")
    u2 = u[mask] ** 2
    c = float(-np.sum(tau[mask] * u2) / np.sum(u2 * u2))

    h = 1e-4
    local = _trace_along(P, alpha0, lengths, beta0, [-h, h])
    dtau = (local[h][1] - local[-h][1]) / (2 * h)
    dbeta = (local[h][0] - local[-h][0]) / (2 * h)

    m = _edge_weights_at(g, w0)
    tangent = abs(m[0] * 1.0 + m[1] * dbeta) / float(np.sum(m))
    return BranchTrace(tuple(w0.tolist()), lengths, u, tau, beta, c, float(dtau), float(dbeta),
                       m, float(tangent))


def _edge_weights_at(g: MetricGraph, w0) -> np.ndarray:
    """m_e = |a_e|^2 + |b_e|^2 of the null vector of Id - U (w0)_2 (leads included)."""
    sf = SecularFunction.of(g)
    _, s, vh = np.linalg.svd(sf.matrix_at(w0))
    x = vh[-1].conj()
    n = g.n_edges
    return np.abs(x[:n]) ** 2 + np.abs(x[n:]) ** 2


def torus_zeros(g: MetricGraph, grid: int = 256, tol: float = 1e-6) -> list:
    """Points of the torus where the secular polynomial of a two-edge graph
    vanishes, confirmed as members of W_G."""
    if g.n_edges != 2:
        raise ValueError("torus_zeros is implemented for graphs with exactly two edges")
    P = _NumericPoly(symbolic_secular(g).poly)
    th = np.linspace(0, 2 * math.pi, grid, endpoint=False)
    A, B = np.meshgrid(th, th, indexing="ij")
    Z, W = np.exp(1j * A), np.exp(1j * B)
    e = P.monos
    vals = np.zeros_like(Z)
    for (p, q), c in zip(e, P.coefs):
        vals += c * Z ** p * W ** q
    mag = np.abs(vals)
    scale = np.max(mag)
    local_min = np.ones_like(mag, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                local_min &= mag <= np.roll(np.roll(mag, di, 0), dj, 1)
    candidates = np.argwhere(local_min & (mag < 0.05 * scale))

    def resid(x):
        v = P(np.exp(1j * x[0]), np.exp(1j * x[1]))
        return [v.real, v.imag]

    found = []
    for i, j in candidates:
        sol = least_squares(resid, [A[i, j], B[i, j]], xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(sol.fun)) > 1e-12 * scale:
            continue
        pt = np.exp(1j * sol.x)
        if any(np.max(np.abs(pt - f)) < 1e-5 for f in found):
            continue
        if w_membership(g, pt, tol).in_W:
            found.append(pt)
    found.sort(key=lambda p: (round(float(np.angle(p[0])), 6), round(float(np.angle(p[1])), 6)))
    return found


def snap_torus_point(w, digits: int = 6) -> np.ndarray:
    """Round the phases of w onto multiples of pi/2 when they are that close."""
    ang = np.angle(np.asarray(w, dtype=complex))
    quarter = np.round(ang / (math.pi / 2)) * (math.pi / 2)
    ang = np.where(np.abs(ang - quarter) < 10.0 ** (-digits), quarter, ang)
    return np.exp(1j * ang)


def barra_gaspard_prediction(traces, eps: float) -> float:
    """Predicted N(eps) from traced branches: the flux of the linear flow
    sigma -> sigma * (l, L) through {tau >= -eps} on each branch, divided by
    the torus area 4 pi^2."""
    total = 0.0
    for tr in traces:
        l, L = tr.lengths
        u, tau, beta = tr.u, tr.tau, tr.beta
        density = np.abs(l * np.gradient(beta, u) - L * 1.0)
        inside = tau >= -eps
        if inside[0] or inside[-1]:
            raise InsufficientDataError(f"traced branch too short to contain tau >= -{eps}")
        total += _masked_integral(u, density, tau + eps)
    return total / (4 * math.pi ** 2)


def _masked_integral(u, density, level):
    """Integral of density over {level >= 0}, with linear interpolation of the
    boundary crossings."""
    total = 0.0
    for i in range(len(u) - 1):
        a, b = level[i], level[i + 1]
        du = u[i + 1] - u[i]
        da, db = density[i], density[i + 1]
        if a >= 0 and b >= 0:
            total += 0.5 * (da + db) * du
        elif a >= 0 > b or b >= 0 > a:
            frac = a / (a - b)
            if a >= 0:
                dm = da + frac * (db - da)
                total += 0.5 * (da + dm) * frac * du
            else:
                dm = da + frac * (db - da)
                total += 0.5 * (dm + db) * (1 - frac) * du
    return total


def quoted_y_graph_constant(l: float, L: float) -> float:
    """The closed-form N(eps) prefactor stated for the Y-graph: 4 (l+L)^{3/2} / pi^2."""
    return 4 * (l + L) ** 1.5 / math.pi ** 2


@dataclass
class DirectBranchFit:
    c: float
    samples: list  # (u, tau)


def direct_branch_fit(g: MetricGraph, base_points, K: float = 2000.0, u_max: float = 0.05,
                      lengths=None, tau_depth: float = 0.02, resonances=None,
                      cfg: FinderConfig | None = None) -> DirectBranchFit:
    """Independent estimate of tau ~ -c u^2 from actual resonances.

    Every resonance near the real axis gives a point (sigma l, sigma L, tau)
    of the resonance set; u is the deviation of sigma * l from the first
    phase of the nearest base point.
    """
    lengths = np.asarray(lengths if lengths is not None else g.lengths, dtype=float)
    if resonances is None:
        sf = SecularFunction.of(g, lengths=lengths)
        resonances = search(sf, SearchRegion(1e-3, K, -tau_depth, 1e-6), cfg).resonances
    phases = [np.angle(np.asarray(b, dtype=complex)) for b in base_points]
    samples = []
    for r in resonances:
        if not 0 < r.k.real <= K:
            continue
        ang = r.k.real * lengths
        best = None
        for ph in phases:
            dev = np.angle(np.exp(1j * (ang - ph)))
            dist = float(np.max(np.abs(dev)))
            if best is None or dist < best[0]:
                best = (dist, float(dev[0]))
        if best is not None and abs(best[1]) <= u_max and best[0] <= 3 * u_max:
            samples.append((best[1], r.k.imag))
    if len(samples) < 3:
        raise InsufficientDataError(f"only {len(samples)} resonances within |u| <= {u_max}")
    u = np.array([s[0] for s in samples])
    tau = np.array([s[1] for s in samples])
    c = float(-np.sum(tau * u ** 2) / np.sum(u ** 4))
    return DirectBranchFit(c, samples)
