"""Zeros of the secular function in a rectangle of the k-plane.

Zeros are counted with the argument principle (adaptive Gauss-Legendre
quadrature of f'/f along box edges), boxes are bisected until each holds a
single zero, and each zero is polished by Newton's method.

The secular function has no zeros in the open upper half-plane (U D(k) is a
strict contraction there), and for a compact graph none in the open lower
half-plane either.  The integration contour is therefore pushed into those
zero-free half-planes, which keeps it well away from zeros sitting on or
just below the real axis without changing any count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scattering import SecularFunction


_GRID_SHIFT = (math.sqrt(5) - 1) / 20


class BoundaryZeroError(RuntimeError):
    """A zero of f lies (numerically) on the integration contour."""


class WindingError(RuntimeError):
    """The winding integral did not settle on an integer."""


class StateError(ValueError):
    """k is too far from a zero to carry a resonant state."""


@dataclass(frozen=True)
class SearchRegion:
    sigma_min: float
    sigma_max: float
    tau_min: float
    tau_max: float
    tau_cap: float = 1e-6
    k_floor: float = 1e-3

    def __post_init__(self):
        if not self.sigma_min < self.sigma_max:
            raise ValueError("sigma_min must be below sigma_max")
        if not self.tau_min < self.tau_max:
            raise ValueError("tau_min must be below tau_max")
        if self.tau_max > self.tau_cap:
            raise ValueError(f"tau_max={self.tau_max} exceeds tau_cap={self.tau_cap}")

    @classmethod
    def window(cls, sigma_max, tau_min, sigma_min=0.0, tau_cap=1e-6, **kw):
        return cls(sigma_min, sigma_max, tau_min, tau_cap, tau_cap=tau_cap, **kw)

    def contains(self, k: complex, slack: float = 0.0) -> bool:
        return (self.sigma_min - slack <= k.real <= self.sigma_max + slack
                and self.tau_min - slack <= k.imag <= self.tau_max + slack)


@dataclass(frozen=True)
class FinderConfig:
    gl_nodes: int = 15  # odd, so every segment midpoint is sampled
    quad_tol: float = 1e-6  # absolute, on the winding number, per top-level segment
    accept_tol: float = 0.05
    reject_tol: float = 0.25
    max_refinements: int = 3
    newton_tol: float = 1e-12
    newton_maxiter: int = 60
    dedup_tol: float = 1e-8
    min_box: float = 1e-9
    jitter_rel: float = 1e-4
    max_jitter: int = 12
    clearance_rel: float = 1e-5  # a new contour line must stay this far (x box size) from zeros
    lift: float | None = None  # how far the contour is pushed into a zero-free half-plane


@dataclass
class ResonantState:
    a: np.ndarray  # coefficient of exp(+ikx) on each edge
    b: np.ndarray  # coefficient of exp(-ikx) on each edge
    bond_amplitudes: np.ndarray  # null vector of M(k)
    t_out: np.ndarray
    sigma_min: float  # smallest singular value of M(k)
    sigma_next: float  # second smallest singular value
    degenerate: bool = False

    @property
    def t_norm(self) -> float:
        return float(np.linalg.norm(self.t_out))

    @property
    def edge_weights(self) -> np.ndarray:
        """m_e = |a_e|^2 + |b_e|^2."""
        return np.abs(self.a) ** 2 + np.abs(self.b) ** 2


@dataclass
class Resonance:
    k: complex
    residual: float
    multiplicity: int = 1
    state: ResonantState | None = None
    degraded: bool = False

    @property
    def sigma(self) -> float:
        return self.k.real

    @property
    def tau(self) -> float:
        return self.k.imag


@dataclass
class SplitRecord:
    parent: tuple  # (sigma0, sigma1, tau0, tau1)
    count: int
    child_counts: tuple


@dataclass
class SearchResult:
    region: SearchRegion
    resonances: list
    total_count: int
    splits: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    jitters: int = 0
    evaluations: int = 0

    def additivity_ok(self) -> bool:
        return all(s.count == sum(s.child_counts) for s in self.splits)

    def multiplicity_ok(self) -> bool:
        return sum(r.multiplicity for r in self.resonances) == self.total_count


# ---------------------------------------------------------------------------
# contour integration

class _Integrator:
    """Adaptive integral of f'/f along straight segments, with a cache."""

    def __init__(self, sf: SecularFunction, cfg: FinderConfig):
        self.sf = sf
        self.cfg = cfg
        x, w = np.polynomial.legendre.leggauss(cfg.gl_nodes)
        self._x = (x + 1) / 2
        self._w = w / 2
        self._cache: dict = {}
        self.evaluations = 0

    def forget(self, a: complex, b: complex) -> None:
        self._cache.pop((a, b), None)
        self._cache.pop((b, a), None)

    def segment(self, a: complex, b: complex, clearance: float, tol: float) -> complex:
        """Integral of f'/f from a to b divided by 2 pi i."""
        key = (a, b)
        if key in self._cache:
            return self._cache[key]
        if (b, a) in self._cache:
            return -self._cache[(b, a)]
        value = self._integrate(a, b, clearance, tol)
        self._cache[key] = value
        return value

    def _integrate(self, a, b, clearance, tol):
        x, w = self._x, self._w
        total_len = abs(b - a)
        min_len = max(clearance * 1e-3, total_len * 1e-14)
        pending = [(a, b, tol)]
        total = 0j
        while pending:
            starts = np.array([p[0] for p in pending])
            ends = np.array([p[1] for p in pending])
            mids = (starts + ends) / 2
            # whole segment, left half, right half
            seg_a = np.concatenate([starts, starts, mids])
            seg_b = np.concatenate([ends, mids, ends])
            nodes = seg_a[:, None] + (seg_b - seg_a)[:, None] * x[None, :]
            g = self.sf.log_derivative(nodes)
            self.evaluations += g.size
            with np.errstate(divide="ignore", invalid="ignore"):
                near = ~np.isfinite(g) | (1.0 / np.abs(g) < clearance)
            if near.any():
                idx = np.argwhere(near)[0]
                raise BoundaryZeroError(f"zero within {clearance:.3g} of contour near k={nodes[tuple(idx)]:.12g}")
            integrals = (seg_b - seg_a) * (g @ w)
            m = len(pending)
            whole, left, right = integrals[:m], integrals[m:2 * m], integrals[2 * m:]
            next_pending = []
            for i, (sa, sb, t) in enumerate(pending):
                refined = left[i] + right[i]
                err = abs(refined - whole[i]) / (2 * math.pi)
                if err <= t:
                    total += refined
                elif abs(sb - sa) < min_len:
                    raise BoundaryZeroError(f"quadrature failed to converge near k={sa:.12g}")
                else:
                    mid = (sa + sb) / 2
                    next_pending.append((sa, mid, t / 2))
                    next_pending.append((mid, sb, t / 2))
            pending = next_pending
        return total / (2j * math.pi)


def _box_edges(box):
    s0, s1, t0, t1 = box
    c00, c10, c11, c01 = complex(s0, t0), complex(s1, t0), complex(s1, t1), complex(s0, t1)
    return [(c00, c10), (c10, c11), (c11, c01), (c01, c00)]


def _box_scale(box) -> float:
    return max(box[1] - box[0], box[3] - box[2])


def _winding(integ: _Integrator, box, clearance, tol, cfg: FinderConfig, edges=None) -> int:
    edges = edges or _box_edges(box)
    for attempt in range(cfg.max_refinements + 1):
        raw = sum(integ.segment(a, b, clearance, tol) for a, b in edges)
        n = round(raw.real)
        dev = max(abs(raw.real - n), abs(raw.imag))
        if dev <= cfg.accept_tol:
            return int(n)
        if attempt == cfg.max_refinements:
            break
        tol /= 100
        for a, b in edges:
            integ.forget(a, b)
    if dev <= cfg.reject_tol:
        return int(n)
    raise WindingError(f"winding number {raw:.6g} not near an integer on box {box}")


def count_zeros(sf: SecularFunction, region: SearchRegion, cfg: FinderConfig | None = None) -> int:
    """Number of zeros (with multiplicity) inside the region's rectangle.

    Raises :class:`BoundaryZeroError` when a zero sits on the boundary; the
    caller is expected to jitter the rectangle.
    """
    cfg = cfg or FinderConfig()
    box = (region.sigma_min, region.sigma_max, region.tau_min, region.tau_max)
    integ = _Integrator(sf, cfg)
    scale = _box_scale(box)
    return _winding(integ, box, cfg.clearance_rel * scale * 1e-2, cfg.quad_tol, cfg)


# ---------------------------------------------------------------------------
# Newton refinement

def _newton(sf: SecularFunction, k0: complex, cfg: FinderConfig, multiplicity: int = 1,
            bound=None, maxiter=None):
    """Newton iteration on f using f'/f; returns (k, converged)."""
    k = complex(k0)
    maxiter = maxiter or cfg.newton_maxiter
    for _ in range(maxiter):
        g = complex(sf.log_derivative(np.array([k]))[0])
        if not np.isfinite(g):
            return k, True  # landed on a numerically exact zero
        if g == 0:
            return k, False
        step = multiplicity / g
        k = k - step
        if bound is not None:
            s0, s1, t0, t1 = bound
            if not (s0 <= k.real <= s1 and t0 <= k.imag <= t1):
                return k, False
        if abs(step) < cfg.newton_tol * (1 + abs(k)):
            return k, True
    return k, False


def _residual(sf: SecularFunction, k: complex) -> float:
    return abs(sf.evaluate(k).f)


# ---------------------------------------------------------------------------
# search driver

def _contour_limits(sf: SecularFunction, region: SearchRegion, cfg: FinderConfig):
    lift = cfg.lift
    if lift is None:
        lmax = float(np.max(sf.lengths)) if sf.size else 1.0
        lift = min(1.0, max(0.05, 1.0 / lmax))
    top = region.tau_max
    if top >= 0:
        top = max(top, lift)
    bottom = region.tau_min
    if sf.bs.n_channels == 0 and bottom <= 0 <= region.tau_max:
        bottom = min(bottom, -lift)
    return bottom, top


def _sigma_parts(region: SearchRegion):
    lo, hi, f = region.sigma_min, region.sigma_max, region.k_floor
    parts = []
    if lo < -f:
        parts.append((lo, min(hi, -f)))
    if hi > f:
        parts.append((max(lo, f), hi))
    return [p for p in parts if p[1] > p[0]]


def _jitter_offsets(delta: float, n: int):
    yield 0.0
    for i in range(1, n + 1):
        step = delta * ((i + 1) // 2)
        yield step if i % 2 else -step


class _Search:
    def __init__(self, sf, region, cfg):
        self.sf = sf
        self.region = region
        self.cfg = cfg
        self.integ = _Integrator(sf, cfg)
        self.found: list[Resonance] = []
        self.splits: list[SplitRecord] = []
        self.unresolved: list[Resonance] = []
        self.jitters = 0
        self.total = 0

    def run(self):
        bottom, top = _contour_limits(self.sf, self.region, self.cfg)
        if self.sf.size == 0:
            return
        height = top - bottom
        for s_lo, s_hi in _sigma_parts(self.region):
            saved = (len(self.found), len(self.splits), len(self.unresolved), self.total)
            for off in _jitter_offsets(self.cfg.jitter_rel * height, self.cfg.max_jitter):
                try:
                    self._strip(s_lo, s_hi, bottom + off, top)
                    break
                except BoundaryZeroError:
                    self.jitters += 1
                    n_found, n_splits, n_unres, self.total = saved
                    del self.found[n_found:], self.splits[n_splits:], self.unresolved[n_unres:]
            else:
                raise BoundaryZeroError("could not place the bottom edge of the search region")

    def _place_line(self, fixed_a: complex, fixed_b: complex, vertical: bool, scale: float, lo, hi):
        """Integrate a new contour line, shifting it off nearby zeros."""
        cfg = self.cfg
        clearance = cfg.clearance_rel * scale
        base = fixed_a.real if vertical else fixed_a.imag
        for off in _jitter_offsets(cfg.jitter_rel * scale, cfg.max_jitter):
            pos = base + off
            if not lo < pos < hi:
                continue
            if vertical:
                a, b = complex(pos, fixed_a.imag), complex(pos, fixed_b.imag)
            else:
                a, b = complex(fixed_a.real, pos), complex(fixed_b.real, pos)
            try:
                self.integ.segment(a, b, clearance, cfg.quad_tol)
                if off:
                    self.jitters += 1
                return pos
            except BoundaryZeroError:
                continue
        raise BoundaryZeroError(f"no clear position for a contour line near {base}")

    def _strip(self, s_lo, s_hi, bottom, top):
        cfg = self.cfg
        height = top - bottom
        total_length = self.sf.total_length or 1.0
        width0 = max(height, math.pi / total_length)
        n_boxes = max(1, int(math.ceil((s_hi - s_lo) / width0)))
        scale0 = min(max(height, (s_hi - s_lo) / n_boxes), s_hi - s_lo)
        clearance = cfg.clearance_rel * scale0
        xs = [self._place_line(complex(s_lo, bottom), complex(s_lo, top), True, scale0,
                               -math.inf, math.inf)]
        for i in range(1, n_boxes):
            # irrational offset keeps grid lines off round-number zeros
            guess = s_lo + (s_hi - s_lo) * (i + _GRID_SHIFT) / n_boxes
            xs.append(self._place_line(complex(guess, bottom), complex(guess, top), True, scale0,
                                       xs[-1], s_hi))
        xs.append(self._place_line(complex(s_hi, bottom), complex(s_hi, top), True, scale0,
                                   xs[-1], math.inf))
        for x0, x1 in zip(xs[:-1], xs[1:]):
            self.integ.segment(complex(x0, bottom), complex(x1, bottom), clearance, cfg.quad_tol)
        for x0, x1 in zip(xs[:-1], xs[1:]):
            box = (x0, x1, bottom, top)
            count = _winding(self.integ, box, clearance * 1e-2, cfg.quad_tol, cfg)
            self.total += count
            self._process(box, count)

    def _process(self, box, count):
        stack = [(box, count)]
        while stack:
            box, count = stack.pop()
            if count == 0:
                continue
            if count < 0:
                raise WindingError(f"negative winding {count} on box {box}")
            if self._try_newton(box, count):
                continue
            scale = _box_scale(box)
            if scale < self.cfg.min_box * max(1.0, abs(complex(box[0], box[2]))):
                center = complex((box[0] + box[1]) / 2, (box[2] + box[3]) / 2)
                r = Resonance(center, _residual(self.sf, center), count, degraded=True)
                self.found.append(r)
                self.unresolved.append(r)
                continue
            children = self._split(box, count)
            # push in reverse so the left/lower child is processed first
            stack.extend(reversed(children))

    def _try_newton(self, box, count) -> bool:
        cfg = self.cfg
        s0, s1, t0, t1 = box
        scale = _box_scale(box)
        center = complex((s0 + s1) / 2, (t0 + t1) / 2)
        pad = 0.5 * scale
        bound = (s0 - pad, s1 + pad, t0 - pad, t1 + pad)
        maxiter = cfg.newton_maxiter if count == 1 else 25
        k, ok = _newton(self.sf, center, cfg, count, bound, maxiter)
        if not ok:
            return False
        margin = 1e-12 * (1 + abs(k))
        if not (s0 - margin <= k.real <= s1 + margin and t0 - margin <= k.imag <= t1 + margin):
            return False
        if count > 1:
            r = max(1e-7 * (1 + abs(k)), 1e3 * cfg.newton_tol * (1 + abs(k)))
            small = (k.real - r, k.real + r, k.imag - r, k.imag + r)
            if small[0] < s0 or small[1] > s1 or small[2] < t0 or small[3] > t1:
                return False
            try:
                inner = _winding(self.integ, small, r * 1e-3, cfg.quad_tol, cfg)
            except (BoundaryZeroError, WindingError):
                return False
            if inner != count:
                return False
        self.found.append(Resonance(k, _residual(self.sf, k), count))
        return True

    def _split(self, box, count):
        cfg = self.cfg
        s0, s1, t0, t1 = box
        scale = _box_scale(box)
        clearance_sub = cfg.clearance_rel * scale * 1e-2
        if s1 - s0 >= t1 - t0:
            m = self._place_line(complex((s0 + s1) / 2, t0), complex((s0 + s1) / 2, t1), True,
                                 scale, s0, s1)
            children = [(s0, m, t0, t1), (m, s1, t0, t1)]
        else:
            m = self._place_line(complex(s0, (t0 + t1) / 2), complex(s1, (t0 + t1) / 2), False,
                                 scale, t0, t1)
            children = [(s0, s1, t0, m), (s0, s1, m, t1)]
        counts = [_winding(self.integ, c, clearance_sub, cfg.quad_tol, cfg) for c in children]
        if sum(counts) != count:
            for c in children:
                for a, b in _box_edges(c):
                    self.integ.forget(a, b)
            counts = [_winding(self.integ, c, clearance_sub, cfg.quad_tol * 1e-3, cfg) for c in children]
        self.splits.append(SplitRecord(box, count, tuple(counts)))
        if sum(counts) != count:
            raise WindingError(f"child counts {counts} do not add up to {count} on box {box}")
        return list(zip(children, counts))


def _dedup(resonances, tol):
    out: list[Resonance] = []
    for r in sorted(resonances, key=lambda r: (r.k.real, r.k.imag)):
        dup = next((o for o in out[-4:] if abs(o.k - r.k) <= tol * (1 + abs(r.k))), None)
        if dup is None:
            out.append(r)
        else:
            dup.multiplicity = max(dup.multiplicity, r.multiplicity)
    return out


def search(sf: SecularFunction, region: SearchRegion, cfg: FinderConfig | None = None) -> SearchResult:
    """Locate every zero of ``sf`` in ``region``, with full bookkeeping."""
    cfg = cfg or FinderConfig()
    s = _Search(sf, region, cfg)
    s.run()
    found = [r for r in s.found if r.k.imag <= region.tau_cap]
    resonances = _dedup(found, cfg.dedup_tol)
    return SearchResult(region, resonances, s.total, s.splits, s.unresolved, s.jitters,
                        s.integ.evaluations)


def find_resonances(sf: SecularFunction, region: SearchRegion, cfg: FinderConfig | None = None) -> list:
    """Resonances in ``region`` sorted by (sigma, tau)."""
    return search(sf, region, cfg).resonances


# ---------------------------------------------------------------------------
# resonant states

def extract_state(sf: SecularFunction, k: complex, threshold: float = 1e-6,
                  multiplicity: int = 1) -> ResonantState:
    """Null vector of M(k) turned into edge coefficients and lead amplitudes.

    The state is scaled so that sum |t_m|^2 = 1 when the outgoing amplitudes
    do not vanish, and so that the bond amplitude vector has unit norm
    otherwise.
    """
    M = sf.matrix(k)
    _, s, vh = np.linalg.svd(M)
    smin = float(s[-1])
    if smin > threshold:
        raise StateError(f"smallest singular value {smin:.3g} at k={k} exceeds {threshold:g}")
    snext = float(s[-2]) if len(s) > 1 else math.inf
    x = vh[-1].conj()
    n = sf.bs.n_edges
    d = sf.phases(k)
    a = x[:n]
    b = x[n:] * d[n:]
    t = sf.bs.T_o @ (d * x) if sf.bs.n_channels else np.zeros(0, dtype=complex)
    tn = np.linalg.norm(t)
    if tn > 1e-9:
        scale = 1.0 / tn
        x, a, b, t = x * scale, a * scale, b * scale, t * scale
    degenerate = multiplicity > 1 or snext < 1e-3
    return ResonantState(a, b, x, t, smin, snext, degenerate)
