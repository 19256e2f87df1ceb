"""Characteristic determinant, Weyl solutions and Weyl functions."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, PoleError, StructuralError
from .graph import BOUNDARY_D, INTERNAL, MetricGraph, Ray
from .local import SpectralPoint, edge_transfer, local_basis, ray_jost_data, _transfer_to
from .roots import real_zeros, winding_number
from .surgery import split_vertex

log = logging.getLogger(__name__)


@dataclass
class CharacteristicMatrix:
    matrix: np.ndarray
    row_labels: list
    col_labels: list

    @property
    def det(self):
        return complex(np.linalg.det(self.matrix)) if self.matrix.size else 1 + 0j


def _sp(sp):
    return sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_lambda(sp)


def _labels(g):
    rows, cols = [], []
    for e in g.edges:
        rows += [("edge_u", e.id), ("edge_v", e.id)]
        cols += [("beta1", e.id), ("beta2", e.id)]
    for r in g.rays:
        rows.append(("ray", r.id))
        cols.append(("gamma", r.id))
    for v in g.vertices:
        rows.append(("dirichlet" if v.kind == BOUNDARY_D else "kirchhoff", v.id))
        cols.append(("alpha", v.id))
    return rows, cols


def local_data(g: MetricGraph, lams, rhos):
    """Per-edge transfer entries and per-ray Jost data on a batch of points."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    T = [edge_transfer(e, lams) for e in g.edges]
    edata = [(t[:, 0, 0], t[:, 0, 1], t[:, 1, 0], t[:, 1, 1]) for t in T]
    rdata = [ray_jost_data(r, lams, rhos) for r in g.rays]
    return edata, rdata


def assemble_from(g: MetricGraph, edata, rdata, n):
    """Batch of system matrices from ``(C, S, C', S')`` per edge and ``(d, d^r)`` per ray."""
    E, R, V = len(g.edges), len(g.rays), len(g.vertices)
    m = 2 * E + R + V
    A = np.zeros((n, m, m), dtype=complex)
    col_v = {v.id: 2 * E + R + i for i, v in enumerate(g.vertices)}
    for j, e in enumerate(g.edges):
        C, S, dC, dS = edata[j]
        ru, rv = 2 * j, 2 * j + 1
        A[:, ru, 2 * j] = 1.0
        A[:, ru, col_v[e.initial]] -= 1.0
        A[:, rv, 2 * j] = C
        A[:, rv, 2 * j + 1] = S
        A[:, rv, col_v[e.terminal]] -= 1.0
        ku, kv = col_v[e.initial], col_v[e.terminal]
        if g.vertex(e.initial).kind != BOUNDARY_D:
            A[:, ku, 2 * j + 1] += 1.0
        if g.vertex(e.terminal).kind != BOUNDARY_D:
            A[:, kv, 2 * j] -= dC
            A[:, kv, 2 * j + 1] -= dS
    for k, r in enumerate(g.rays):
        d, dd = rdata[k]
        row = 2 * E + k
        A[:, row, row] = d
        A[:, row, col_v[r.base]] = -1.0
        if g.vertex(r.base).kind != BOUNDARY_D:
            A[:, col_v[r.base], row] += dd
    for v in g.vertices:
        if v.kind == BOUNDARY_D:
            A[:, col_v[v.id], col_v[v.id]] = 1.0
    return A


def system_batch(g: MetricGraph, lams, rhos):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    edata, rdata = local_data(g, lams, rhos)
    return assemble_from(g, edata, rdata, lams.size)


def assemble_system(g: MetricGraph, sp) -> CharacteristicMatrix:
    """The ordered linear system whose determinant is the characteristic function."""
    sp = _sp(sp)
    A = system_batch(g, [sp.lam], [sp.rho])[0]
    rows, cols = _labels(g)
    return CharacteristicMatrix(A, rows, cols)


def delta_batch(g: MetricGraph, lams, rhos=None):
    """Characteristic function on arrays of ``lam`` (and matching ``rho``)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if rhos is None:
        rhos = np.array([SpectralPoint.from_lambda(l).rho for l in lams])
    if not g.edges and not g.rays and not g.vertices:
        return np.ones(lams.shape, dtype=complex)
    return np.linalg.det(system_batch(g, lams, rhos))


def delta_rho(g: MetricGraph, rhos):
    """Characteristic function as a function of ``rho`` (``lam = rho**2``)."""
    rhos = np.atleast_1d(np.asarray(rhos, dtype=complex))
    return delta_batch(g, rhos * rhos, rhos)


def delta(g: MetricGraph, sp) -> complex:
    """``Delta(lam, G, q)``; on ``[0, inf)`` the side of ``sp`` selects the limit."""
    sp = _sp(sp)
    return complex(delta_batch(g, [sp.lam], [sp.rho])[0])


# ---------------------------------------------------------------------------
# Weyl solutions


@dataclass
class WeylSolution:
    """Weyl solution ``Phi_v``: continuous, Kirchhoff/Dirichlet everywhere but ``v``,
    square integrable, equal to 1 at ``v``."""

    graph: MetricGraph
    vertex: str
    sp: SpectralPoint
    coeffs: np.ndarray
    M: complex = field(default=0j)

    def beta(self, eid):
        j = self.graph.edge_index(eid)
        return self.coeffs[2 * j], self.coeffs[2 * j + 1]

    def gamma(self, rid):
        return self.coeffs[2 * len(self.graph.edges) + self.graph.ray_index(rid)]

    def value_at_vertex(self, vid):
        return self.coeffs[2 * len(self.graph.edges) + len(self.graph.rays) + self.graph.vertex_index(vid)]

    def __call__(self, eid, x):
        """Value and derivative at arc length ``x`` from the initial vertex (ray base)."""
        x = np.atleast_1d(np.asarray(x, float))
        e = self.graph.edge(eid)
        if isinstance(e, Ray):
            from .local import JostSolution
            js = JostSolution(e, self.sp)
            y, dy = js(x)
            g_ = self.gamma(eid)
            return g_ * y, g_ * dy
        C, S = local_basis(e, self.sp)
        b1, b2 = self.beta(eid)
        cy, cd = C(x)
        sy, sd = S(x)
        return b1 * cy + b2 * sy, b1 * cd + b2 * sd


def _derivative_sum(g, v, coeffs, edata, rdata, idx=0):
    """Sum of inward derivatives at ``v`` of the solution with coefficients ``coeffs``."""
    E = len(g.edges)
    total = 0j
    for j, e in enumerate(g.edges):
        b1, b2 = coeffs[2 * j], coeffs[2 * j + 1]
        if e.initial == v:
            total += b2
        if e.terminal == v:
            C, S, dC, dS = (t[idx] for t in edata[j])
            total -= b1 * dC + b2 * dS
    for k, r in enumerate(g.rays):
        if r.base == v:
            total += coeffs[2 * E + k] * rdata[k][1][idx]
    return total


def _modified_systems(g, v, A):
    E, R = len(g.edges), len(g.rays)
    row = 2 * E + R + g.vertex_index(v)
    A = A.copy()
    A[:, row, :] = 0.0
    A[:, row, row] = 1.0
    rhs = np.zeros(A.shape[:2], dtype=complex)
    rhs[:, row] = 1.0
    return A, rhs


def _solve(A, rhs, what):
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > 1e14)
    if np.any(bad):
        raise PoleError(f"{what}: modified system is singular (condition number {np.max(cond):.3g})")
    return np.linalg.solve(A, rhs[..., None])[..., 0]


def weyl_solution(g: MetricGraph, v, sp) -> WeylSolution:
    """Solve the system with the matching row at ``v`` replaced by ``alpha_v = 1``."""
    sp = _sp(sp)
    g.vertex(v)
    edata, rdata = local_data(g, [sp.lam], [sp.rho])
    A = assemble_from(g, edata, rdata, 1)
    Am, rhs = _modified_systems(g, v, A)
    x = _solve(Am, rhs, f"Weyl solution at {v}")[0]
    M = _derivative_sum(g, v, x, edata, rdata)
    return WeylSolution(g, v, sp, x, M)


def weyl_function_batch(g: MetricGraph, v, lams, rhos=None):
    """``M_v`` as the derivative sum of ``Phi_v`` on a batch of points."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if rhos is None:
        rhos = np.array([SpectralPoint.from_lambda(l).rho for l in lams])
    g.vertex(v)
    edata, rdata = local_data(g, lams, rhos)
    A = assemble_from(g, edata, rdata, lams.size)
    Am, rhs = _modified_systems(g, v, A)
    X = _solve(Am, rhs, f"Weyl function at {v}")
    return np.array([_derivative_sum(g, v, X[i], edata, rdata, i) for i in range(lams.size)])


def weyl_function_ratio(g: MetricGraph, v, sp) -> complex:
    """``Delta(G) / Delta(E(G, v))`` for an internal or K-type vertex."""
    sp = _sp(sp)
    if g.vertex(v).kind == BOUNDARY_D:
        raise StructuralError("the determinant ratio applies to internal or K-type vertices only")
    d0 = delta(split_vertex(g, v).graph, sp)
    if d0 == 0:
        raise PoleError(f"Delta(E(G,{v})) vanishes: pole of M_{v}")
    return delta(g, sp) / d0


def weyl_function(g: MetricGraph, v, sp, cross_check=True, rtol=1e-6) -> complex:
    """Weyl function ``M_v``: sum of inward derivatives of ``Phi_v`` at ``v``.

    For internal and K-type vertices the determinant ratio is computed as well
    and a relative disagreement above ``rtol`` raises ``NumericalError``.
    """
    sp = _sp(sp)
    M = weyl_solution(g, v, sp).M
    if cross_check and g.vertex(v).kind != BOUNDARY_D:
        ratio = weyl_function_ratio(g, v, sp)
        if abs(M - ratio) > rtol * max(1.0, abs(M)):
            raise NumericalError(f"M_{v}: derivative sum {M} disagrees with determinant ratio {ratio}")
    return M


# ---------------------------------------------------------------------------
# spectrum


@dataclass
class SpectrumReport:
    negative_eigenvalues: list = field(default_factory=list)  # (lam, multiplicity)
    positive_candidates: list = field(default_factory=list)  # dicts with diagnostics
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_negative(self):
        return sum(m for _, m in self.negative_eigenvalues)

    @property
    def positive_singular(self):
        return [c["lam"] for c in self.positive_candidates if c["member"]]


def _delta_kappa(g):
    # lam = -kappa^2, rho = i kappa: analytic in kappa, real for real kappa
    def f(kappa):
        kappa = np.asarray(kappa, dtype=complex)
        return delta_batch(g, -kappa * kappa, 1j * kappa)
    return f


def _negative_zeros(g, n):
    qmin, _ = g.potential_bounds()
    if qmin >= 0:
        return [], 0.0
    kmax = np.sqrt(-qmin) + 1.0
    f = _delta_kappa(g)
    zs = real_zeros(f, 1e-9 * kmax, kmax, n)
    return [(-float(k) ** 2, m) for k, m in sorted(zs, reverse=True)], kmax


def _grid_size(g, kmax, n):
    if n is not None:
        return n
    return int(max(400, 60 * (g.total_length + 2 * sum(r.support for r in g.rays) + 1) * kmax))


def negative_spectrum(g: MetricGraph, n=None) -> SpectrumReport:
    """Negative eigenvalues from sign changes/minima of the real function ``Delta(-kappa^2)``.

    Multiplicities come from winding numbers on small circles.  The search is
    repeated on a grid twice as fine and the counts are compared.
    """
    qmin, _ = g.potential_bounds()
    if qmin >= 0:
        return SpectrumReport([], [], {"grid": 0, "lambda_min": 0.0, "stable": True,
                                       "reason": "potential nonnegative"})
    kmax = np.sqrt(-qmin) + 1.0
    n = _grid_size(g, kmax, n)
    probe = delta_batch(g, -np.linspace(0.1, kmax, 7) ** 2 + 0j, 1j * np.linspace(0.1, kmax, 7))
    if np.max(np.abs(probe.imag)) > 1e-8 * max(1.0, np.max(np.abs(probe))):
        raise NumericalError("characteristic function is not real on the negative axis")
    ev, _ = _negative_zeros(g, n)
    ev2, _ = _negative_zeros(g, 2 * n)
    stable = sum(m for _, m in ev) == sum(m for _, m in ev2)
    if not stable:
        log.warning("negative eigenvalue count changed under grid refinement: %d -> %d",
                    sum(m for _, m in ev), sum(m for _, m in ev2))
        ev = ev2
    return SpectrumReport(ev, [], {"grid": n, "lambda_min": -kmax**2, "stable": stable})


def compact_eigenvalues(g: MetricGraph, lam_max, n=None):
    """All eigenvalues ``<= lam_max`` of a compact graph as ``(lam, multiplicity)``."""
    if g.rays:
        raise StructuralError("compact_eigenvalues needs a graph without rays")
    if not g.edges:
        return []
    out = list(reversed(negative_spectrum(g, n).negative_eigenvalues))
    r0 = min(0.5, 0.25 * np.pi / max(e.length for e in g.edges)) ** 2
    m0 = winding_number(lambda lam: delta_batch(g, lam, np.sqrt(lam + 0j)), 0.0, r0)
    if m0 > 0:
        out.append((0.0, m0))
    rho_max = np.sqrt(lam_max)
    npts = n or int(max(400, 80 * (g.total_length + 1) * rho_max))
    f = lambda rho: delta_batch(g, np.asarray(rho, complex) ** 2, rho)
    for rho, m in real_zeros(f, np.sqrt(r0), rho_max, npts):
        out.append((float(rho) ** 2, m))
    return out


def _cut_all_rays(g):
    from .surgery import cut_keep
    for r in g.rays:
        g = cut_keep(g, [r.id], at=r.base)
    return g


def positive_singular_set(g: MetricGraph, rho_max=20.0, threshold=1e-9, n=None) -> SpectrumReport:
    """Candidates for positive zeros of ``Delta(lam + i0)``.

    Every such zero is an eigenvalue of the compact graph left after K-cutting
    all rays; those eigenvalues are listed with ``|Delta(lam + i0, G)|``
    relative to its maximum over ``rho +- 0.5``.
    """
    gc = _cut_all_rays(g)
    cands = []
    if gc.edges:
        for lam, m in compact_eigenvalues(gc, rho_max**2, n):
            if lam <= 0:
                continue
            rho = np.sqrt(lam)
            val = abs(delta_batch(g, [lam], [rho])[0])
            local = np.linspace(max(rho - 0.5, 1e-3), rho + 0.5, 41)
            scale = np.max(np.abs(delta_rho(g, local)))
            ratio = val / scale if scale > 0 else 0.0
            cands.append({"lam": lam, "compact_multiplicity": m, "abs_delta": val,
                          "relative": ratio, "member": bool(ratio < threshold)})
    return SpectrumReport([], cands, {"compact_edges": len(gc.edges), "rho_max": rho_max})
