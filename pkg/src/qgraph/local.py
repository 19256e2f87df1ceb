"""Per-edge solutions of ``-y'' + q y = lam y``.

All potentials are piecewise constant, so every local solution is obtained
exactly by multiplying per-piece transfer matrices (see ``_kernels``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import piece_entries, transfer_batch
from .errors import PoleError
from .graph import CompactEdge, Ray

NONE, PLUS, MINUS = "none", "plus_i0", "minus_i0"


@dataclass(frozen=True)
class SpectralPoint:
    """``lam = rho**2`` with ``Im rho >= 0``.

    On the cut ``[0, inf)`` the side of approach is recorded: ``rho > 0`` is
    ``lam + i0`` and ``rho < 0`` is ``lam - i0``.
    """

    lam: complex
    rho: complex
    side: str = NONE

    @classmethod
    def from_lambda(cls, lam, side=None):
        lam = complex(lam)
        if lam.imag == 0.0 and lam.real >= 0.0:
            side = side or PLUS
            if side not in (PLUS, MINUS):
                raise ValueError(f"points on [0, inf) need side plus_i0 or minus_i0, got {side!r}")
            r = np.sqrt(lam.real)
            return cls(lam, complex(r if side == PLUS else -r, 0.0), side)
        if side not in (None, NONE):
            raise ValueError("side only applies to real nonnegative lambda")
        rho = complex(np.sqrt(lam))
        if rho.imag < 0 or (rho.imag == 0 and lam.real < 0):
            rho = -rho
        if lam.real < 0 and lam.imag == 0.0:
            rho = complex(0.0, np.sqrt(-lam.real))
        return cls(lam, rho, NONE)

    @classmethod
    def from_rho(cls, rho):
        rho = complex(rho)
        if rho.imag < 0:
            raise ValueError(f"rho must lie in the closed upper half-plane, got {rho}")
        if rho.imag == 0.0:
            side = MINUS if rho.real < 0 else PLUS
            return cls(complex(rho.real**2, 0.0), rho, side)
        return cls(rho * rho, rho, NONE)

    @property
    def degenerate(self):
        return self.rho == 0


def _as_sp(sp):
    return sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_lambda(sp)


def _transfer_to(widths, values, lam, x):
    """Transfer matrix over ``[0, x]`` for a single ``lam``."""
    ends = np.cumsum(widths)
    a, b, c, d = 1 + 0j, 0j, 0j, 1 + 0j
    start = 0.0
    for w, v, e in zip(widths, values, ends):
        span = min(e, x) - start
        if span > 0:
            co, sw, ksk = (complex(t) for t in piece_entries(lam - v, span))
            a, b, c, d = co * a + sw * c, co * b + sw * d, -ksk * a + co * c, -ksk * b + co * d
        start = e
        if e >= x:
            break
    if x > start:  # past the last piece: zero potential
        co, sw, ksk = (complex(t) for t in piece_entries(lam, x - start))
        a, b, c, d = co * a + sw * c, co * b + sw * d, -ksk * a + co * c, -ksk * b + co * d
    return np.array([[a, b], [c, d]])


class LocalSolution:
    """Solution on one edge given by its value/derivative at the anchor end.

    ``sol(x)`` returns ``(y, y')`` where ``x`` and the derivative both refer to
    arc length measured from the anchor end (``u`` for ``C``/``S``/``S_u``,
    ``v`` for ``S_v``).
    """

    def __init__(self, kind, widths, values, length, lam, y0, dy0):
        self.kind = kind
        self.widths = widths
        self.values = values
        self.length = length
        self.lam = complex(lam)
        self.state0 = np.array([y0, dy0], dtype=complex)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([_transfer_to(self.widths, self.values, self.lam, xi) @ self.state0 for xi in x])
        return out[:, 0], out[:, 1]

    def at_end(self):
        y, dy = self(self.length)
        return complex(y[0]), complex(dy[0])


def local_basis(edge: CompactEdge, sp):
    """Cosine- and sine-type solutions anchored at the initial vertex."""
    sp = _as_sp(sp)
    w, v = edge.potential.pieces(edge.length)
    return (LocalSolution("C", w, v, edge.length, sp.lam, 1, 0),
            LocalSolution("S", w, v, edge.length, sp.lam, 0, 1))


def local_basis_at(edge: CompactEdge, endpoint, sp):
    """Sine-type solution vanishing at ``endpoint`` ('u' or 'v') with unit inward slope."""
    sp = _as_sp(sp)
    if endpoint not in ("u", "v"):
        raise ValueError("endpoint must be 'u' or 'v'")
    pot = edge.potential if endpoint == "u" else edge.potential.reversed(edge.length)
    w, v = pot.pieces(edge.length)
    return LocalSolution("S_" + endpoint, w, v, edge.length, sp.lam, 0, 1)


def edge_transfer(edge: CompactEdge, lams):
    """``[[C, S], [C', S']]`` at the terminal end for each ``lam``; shape (n, 2, 2)."""
    w, v = edge.potential.pieces(edge.length)
    return transfer_batch(np.atleast_1d(lams), w, v)


def ray_jost_data(ray: Ray, lams, rhos):
    """Jost value ``d_r`` and inward derivative ``d^r`` at the ray base (arrays)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    R = ray.support
    tail = np.exp(1j * rhos * R)
    if R <= 0:
        return tail, 1j * rhos * tail
    w, v = ray.potential.pieces(R)
    T = transfer_batch(lams, w, v)
    yR, dyR = tail, 1j * rhos * tail
    # T has unit determinant: inverse is [[d, -b], [-c, a]]
    d0 = T[:, 1, 1] * yR - T[:, 0, 1] * dyR
    dd0 = -T[:, 1, 0] * yR + T[:, 0, 0] * dyR
    return d0, dd0


class JostSolution:
    """``e_r(x, rho)``: equals ``exp(i rho x)`` beyond the support radius."""

    def __init__(self, ray: Ray, sp: SpectralPoint):
        self.ray = ray
        self.sp = sp
        self.degenerate = sp.degenerate
        d, dd = ray_jost_data(ray, [sp.lam], [sp.rho])
        self.d = complex(d[0])
        self.dd = complex(dd[0])
        self._w, self._v = ray.potential.pieces(ray.support) if ray.support > 0 else (np.zeros(0), np.zeros(0))

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        rho = self.sp.rho
        y = np.empty(x.shape, complex)
        dy = np.empty(x.shape, complex)
        for k, xi in enumerate(x):
            if xi >= self.ray.support:
                y[k] = np.exp(1j * rho * xi)
                dy[k] = 1j * rho * y[k]
            else:
                s = _transfer_to(self._w, self._v, self.sp.lam, xi) @ np.array([self.d, self.dd])
                y[k], dy[k] = s
        return y, dy


def jost(ray: Ray, sp) -> JostSolution:
    """Jost solution on a ray with ``d_r = e_r(v)`` and ``d^r = e_r'(v)`` attached."""
    sp = sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_rho(sp)
    js = JostSolution(ray, sp)
    if js.degenerate:
        warnings.warn("Jost solution at rho = 0: normalisation degenerates", RuntimeWarning, stacklevel=2)
    return js


def classical_weyl_m(ray: Ray, sp) -> complex:
    """Half-line Weyl function ``m_r = d^r / d_r``."""
    sp = sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_rho(sp)
    d, dd = ray_jost_data(ray, [sp.lam], [sp.rho])
    if abs(d[0]) <= 1e-14 * max(1.0, abs(dd[0])):
        raise PoleError(f"d_r vanishes at rho = {sp.rho}")
    return complex(dd[0] / d[0])
