"""Kirchhoff bond scattering and the secular function det(Id - U D(k)).

Directed bonds are numbered edge order forward (source -> target) first,
then the same edges backward.  The bond amplitude ``x_b`` is the value of the
travelling wave at the start of bond ``b``; it arrives at the end of the bond
multiplied by ``exp(i k l_b)``.  With ``D(k)`` the diagonal of those phases,

    t_out = R t_in + T_o D(k) x,        x = T_i t_in + U D(k) x,

and resonances are the ``k`` for which the second relation has a nonzero
solution with ``t_in = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphcore import MetricGraph

_SINGULAR_COND = 1e13
_DEEP = 50.0  # beyond this -Im(k) l, work with D^{-1} - U to avoid overflow


@dataclass(frozen=True, eq=False)
class BondScattering:
    U: np.ndarray  # (2n, 2n) bond -> bond
    R: np.ndarray  # (N, N) lead -> lead
    T_o: np.ndarray  # (N, 2n) bond -> lead
    T_i: np.ndarray  # (2n, N) lead -> bond
    lengths: np.ndarray  # (n,)
    bond_edges: tuple  # edge index of each directed bond
    bond_heads: tuple  # vertex each bond points to
    bond_tails: tuple  # vertex each bond starts from
    lead_vertices: tuple  # vertex of each lead channel

    def __post_init__(self):
        for arr in (self.U, self.R, self.T_o, self.T_i, self.lengths):
            arr.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return len(self.lengths)

    @property
    def n_bonds(self) -> int:
        return 2 * len(self.lengths)

    @property
    def n_channels(self) -> int:
        return self.R.shape[0]

    @property
    def bond_lengths(self) -> np.ndarray:
        return np.concatenate([self.lengths, self.lengths])

    def phases(self, k: complex) -> np.ndarray:
        """Diagonal of D(k): exp(i k l_e), doubled over both directions."""
        return np.exp(1j * k * self.bond_lengths)

    def full_matrix(self, k: complex) -> np.ndarray:
        """The (N + 2n) block matrix [[R, T_o D], [T_i, U D]]."""
        d = self.phases(k)
        top = np.hstack([self.R, self.T_o * d[None, :]])
        bottom = np.hstack([self.T_i, self.U * d[None, :]])
        return np.vstack([top, bottom]).astype(complex)


def build(g: MetricGraph, include_leads: bool = True) -> BondScattering:
    n = g.n_edges
    tails = [e.source for e in g.edges] + [e.target for e in g.edges]
    heads = [e.target for e in g.edges] + [e.source for e in g.edges]
    bond_edges = tuple(list(range(n)) * 2)

    lead_vertices: list[str] = []
    if include_leads:
        for v in g.vertices:
            lead_vertices.extend([v] * g.lead_count(v))
    deg = {v: g.edge_degree(v) + (g.lead_count(v) if include_leads else 0) for v in g.vertices}

    U = np.zeros((2 * n, 2 * n))
    for out in range(2 * n):
        v = tails[out]
        mix = 2.0 / deg[v]
        for inc in range(2 * n):
            if heads[inc] != v:
                continue
            reverse = inc == (out + n) % (2 * n)
            U[out, inc] = mix - (1.0 if reverse else 0.0)

    N = len(lead_vertices)
    R = np.zeros((N, N))
    T_o = np.zeros((N, 2 * n))
    T_i = np.zeros((2 * n, N))
    for m, v in enumerate(lead_vertices):
        mix = 2.0 / deg[v]
        for m2, v2 in enumerate(lead_vertices):
            if v2 == v:
                R[m, m2] = mix - (1.0 if m == m2 else 0.0)
        for b in range(2 * n):
            if heads[b] == v:
                T_o[m, b] = mix
            if tails[b] == v:
                T_i[b, m] = mix

    return BondScattering(
        U=U, R=R, T_o=T_o, T_i=T_i,
        lengths=np.array(g.lengths, dtype=float),
        bond_edges=bond_edges, bond_heads=tuple(heads), bond_tails=tuple(tails),
        lead_vertices=tuple(lead_vertices),
    )


def unitary_defect(bs: BondScattering, lengths, k: float) -> float:
    """Max-norm of S(k) S(k)^* - Id for the assembled block matrix."""
    lengths = np.asarray(lengths, dtype=float)
    d = np.exp(1j * k * np.concatenate([lengths, lengths]))
    top = np.hstack([bs.R, bs.T_o * d[None, :]])
    bottom = np.hstack([bs.T_i, bs.U * d[None, :]])
    S = np.vstack([top, bottom])
    if S.size == 0:
        return 0.0
    return float(np.max(np.abs(S @ S.conj().T - np.eye(S.shape[0]))))


@dataclass(frozen=True)
class SecularValue:
    """f(k) = mantissa * 2**exponent together with f'(k) and f'/f.

    ``fd_fallback`` is set when M(k) was numerically singular and the
    derivative came from a central difference instead of the trace identity.
    """

    mantissa: complex
    exponent: int
    log_derivative: complex
    f_prime: complex
    fd_fallback: bool = False

    @property
    def f(self) -> complex:
        try:
            return complex(math.ldexp(self.mantissa.real, self.exponent),
                           math.ldexp(self.mantissa.imag, self.exponent))
        except OverflowError:
            return complex(math.inf, math.inf)

    def __iter__(self):
        yield self.f
        yield self.f_prime


@dataclass(frozen=True, eq=False)
class SecularFunction:
    """f(k) = det(Id - U D(k)) for a fixed bond scattering and length vector."""

    bs: BondScattering
    lengths: np.ndarray = field(default=None)

    def __post_init__(self):
        lengths = self.bs.lengths if self.lengths is None else np.asarray(self.lengths, dtype=float)
        if lengths.shape != self.bs.lengths.shape:
            raise ValueError("length vector does not match the bond structure")
        lengths = lengths.copy()
        lengths.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        L2 = np.concatenate([lengths, lengths])
        L2.setflags(write=False)
        object.__setattr__(self, "_L2", L2)

    @classmethod
    def of(cls, g: MetricGraph, include_leads: bool = True, lengths=None) -> "SecularFunction":
        return cls(build(g, include_leads), lengths)

    @property
    def size(self) -> int:
        return len(self._L2)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    def phases(self, k) -> np.ndarray:
        return np.exp(1j * np.multiply.outer(k, self._L2))

    def matrix(self, k: complex) -> np.ndarray:
        """M(k) = Id - U D(k)."""
        return np.eye(self.size) - self.bs.U * self.phases(k)[None, :]

    def matrix_at(self, z) -> np.ndarray:
        """Id - U (z)_2 for an arbitrary point z of C^E."""
        z = np.asarray(z, dtype=complex)
        return np.eye(self.size) - self.bs.U * np.concatenate([z, z])[None, :]

    def log_derivative(self, ks) -> np.ndarray:
        """f'/f at an array of k values (vectorised).

        Uses f'/f = tr(M^{-1} (-U D'(k))) with D' = diag(i l e^{ikl}).  Entries
        where M is singular come back as inf.
        """
        ks = np.asarray(ks, dtype=complex)
        shape = ks.shape
        ks = ks.ravel()
        if self.size == 0:
            return np.zeros(shape, dtype=complex)
        out = np.empty(len(ks), dtype=complex)
        deep = self._is_deep(ks)
        for mask, flip in ((~deep, False), (deep, True)):
            if mask.any():
                out[mask] = self._log_derivative_batch(ks[mask], flip)
        return out.reshape(shape)

    def _is_deep(self, ks) -> np.ndarray:
        return -np.imag(ks) * float(np.max(self._L2)) > _DEEP

    def _log_derivative_batch(self, ks, flip: bool) -> np.ndarray:
        # M = Id - U D; in the deep lower half-plane use M = (D^{-1} - U) D,
        # whose trace identity is tr((D^{-1} - U)^{-1} (-U) diag(i l)).
        UL = -self.bs.U * (1j * self._L2)[None, :]
        if flip:
            M = np.zeros((len(ks), self.size, self.size), dtype=complex)
            idx = np.arange(self.size)
            M[:, idx, idx] = np.exp(-1j * np.multiply.outer(ks, self._L2))
            M -= self.bs.U[None]
            A = np.broadcast_to(UL, M.shape)
        else:
            d = self.phases(ks)
            Ud = self.bs.U[None, :, :] * d[:, None, :]
            M = np.eye(self.size)[None] - Ud
            A = UL[None] * d[:, None, :]
        out = np.empty(len(ks), dtype=complex)
        try:
            out[:] = np.trace(np.linalg.solve(M, A), axis1=1, axis2=2)
        except np.linalg.LinAlgError:
            for i in range(len(ks)):
                try:
                    out[i] = np.trace(np.linalg.solve(M[i], A[i]))
                except np.linalg.LinAlgError:
                    out[i] = complex(math.inf, 0.0)
        return out

    def _kernel(self, k: complex):
        """(A, log det D) with det M = det A * exp(log det D)."""
        if self._is_deep(np.array([k]))[0]:
            A = np.diag(np.exp(-1j * k * self._L2)) - self.bs.U
            return A, 1j * k * float(np.sum(self._L2)), True
        return self.matrix(k), 0j, False

    def log_abs(self, k: complex) -> float:
        if self.size == 0:
            return 0.0
        A, logd, _ = self._kernel(complex(k))
        _, logabs = np.linalg.slogdet(A)
        return float(logabs + logd.real)

    def evaluate(self, k: complex) -> SecularValue:
        k = complex(k)
        if not (math.isfinite(k.real) and math.isfinite(k.imag)):
            raise ValueError("k must be finite")
        if self.size == 0:
            return SecularValue(1.0 + 0j, 0, 0j, 0j)
        A, logd, flip = self._kernel(k)
        sign, logabs = np.linalg.slogdet(A)
        sign = sign * np.exp(1j * logd.imag)
        mantissa, exponent = _scaled(sign, logabs + logd.real)
        singular = not np.isfinite(logabs) or np.linalg.cond(A) > _SINGULAR_COND
        if not singular:
            logder = complex(self._log_derivative_batch(np.array([k]), flip)[0])
            f_prime = _times_scaled(logder, mantissa, exponent)
            return SecularValue(mantissa, exponent, logder, f_prime)
        h = max(abs(k), 1.0) * np.finfo(float).eps ** (1 / 3)
        fp = (self._det(k + h) - self._det(k - h)) / (2 * h)
        f = _times_scaled(1.0, mantissa, exponent)
        logder = fp / f if f != 0 else complex(math.inf, 0.0)
        return SecularValue(mantissa, exponent, logder, fp, fd_fallback=True)

    def __call__(self, k: complex) -> complex:
        return self._det(k)

    def _det(self, k: complex) -> complex:
        if self.size == 0:
            return 1.0 + 0j
        return complex(np.linalg.det(self.matrix(k)))


def _scaled(sign: complex, logabs: float) -> tuple[complex, int]:
    if not np.isfinite(logabs):
        return 0j, 0
    e2 = logabs / math.log(2.0)
    exponent = int(math.floor(e2))
    return complex(sign) * 2.0 ** (e2 - exponent), exponent


def _times_scaled(c: complex, mantissa: complex, exponent: int) -> complex:
    v = c * mantissa
    try:
        return complex(math.ldexp(v.real, exponent), math.ldexp(v.imag, exponent))
    except OverflowError:
        return complex(math.inf, math.inf)
