"""High-energy structure of the characteristic function.

For ``rho -> inf`` in the closed upper half-plane

    Delta(rho**2, G) = (i / 2 rho)**(N - 1) * (sum_l B_l exp(-i rho l) + O(exp(tau |G|) / rho))

with ``N`` the number of Dirichlet vertices plus cycles and ``l`` running over
signed sums of edge lengths.  ``B_l`` do not depend on the potential.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .characteristic import assemble_from, delta_batch, delta_rho
from .errors import NumericalError, StructuralError
from .graph import INTERNAL, MetricGraph
from .roots import complex_zeros
from .surgery import branches_at, cut_dirichlet, cut_keep, piece, split_vertex

_CHUNK = 8192


@dataclass
class ExpSumExpansion:
    N: int
    total_length: float
    coefficients: dict  # l -> B_l (real)
    diagnostics: dict = field(default_factory=dict)

    @property
    def leading(self):
        """``B_l`` at ``l = |G|``."""
        return self.coefficient(self.total_length)

    def coefficient(self, l, tol=1e-9):
        for key, val in self.coefficients.items():
            if abs(key - l) <= tol * max(1.0, abs(l)):
                return val
        return 0.0

    def evaluate(self, rho):
        """``sum_l B_l exp(-i rho l)``."""
        rho = np.asarray(rho, dtype=complex)
        return sum(b * np.exp(-1j * rho * l) for l, b in self.coefficients.items())


def normalized_delta(g: MetricGraph, rhos):
    """``Delta * (2 rho / i)**(N - 1)``."""
    rhos = np.asarray(rhos, dtype=complex)
    return delta_rho(g, rhos) * (2 * rhos / 1j) ** (g.n_index - 1)


def _free_dets(g, w, rho):
    """Zero-potential determinants with each edge phase ``exp(i rho |r|)`` replaced by ``w[:, j]``."""
    n = rho.size
    edata = []
    for j in range(len(g.edges)):
        wj = w[:, j]
        cos_ = 0.5 * (wj + 1 / wj)
        sin_ = (wj - 1 / wj) / 2j
        edata.append((cos_, sin_ / rho, -rho * sin_, cos_))
    rdata = [(np.ones(n, complex), 1j * rho) for _ in g.rays]
    return np.linalg.det(assemble_from(g, edata, rdata, n))


def exp_sum_coefficients(g: MetricGraph, drop=1e-8) -> ExpSumExpansion:
    """Exact ``B_l`` of the zero-potential characteristic function.

    With ``q = 0`` every entry of the system is a Laurent polynomial in
    ``rho`` and in the edge phases ``w_r = exp(i rho |r|)``, of degree at most
    one in each phase per column pair.  Treating the phases as independent
    unit-circle variables, the coefficients are read off a multidimensional
    DFT (3 nodes per phase, ``M`` nodes on ``|rho| = 1``).  ``B_l`` is the
    ``rho**0`` coefficient of the normalised determinant summed over phase
    monomials with ``sum eps_r |r| = l``.
    """
    E, R = len(g.edges), len(g.rays)
    N = g.n_index
    span = 2 * E + R + abs(N - 1) + 2
    M = int(2 ** np.ceil(np.log2(2 * span + 4)))
    roots3 = np.exp(2j * np.pi * np.arange(3) / 3)
    rho_nodes = np.exp(2j * np.pi * np.arange(M) / M)
    grid = np.array(list(itertools.product(range(3), repeat=E)), dtype=int).reshape(-1, E) if E else np.zeros((1, 0), int)
    n_w = grid.shape[0]
    W = np.repeat(roots3[grid], M, axis=0) if E else np.ones((M, 0), complex)
    rho = np.tile(rho_nodes, n_w)
    vals = np.empty(rho.size, complex)
    for s in range(0, rho.size, _CHUNK):
        vals[s:s + _CHUNK] = _free_dets(g, W[s:s + _CHUNK], rho[s:s + _CHUNK])
    vals *= (2 * rho / 1j) ** (N - 1)
    F = vals.reshape((3,) * E + (M,))
    C = np.fft.fftn(F) / F.size
    # rho-powers: index p -> coefficient of rho**p (p mod M)
    pos = [p for p in range(1, M // 2)]
    lead = C[(Ellipsis, 0)]
    positive_power = float(max((np.max(np.abs(C[(Ellipsis, p)])) for p in pos), default=0.0))
    lengths = np.array([e.length for e in g.edges])
    coeffs = {}
    for eps in itertools.product((-1, 0, 1), repeat=E):
        idx = tuple((-e) % 3 for e in eps)
        b = lead[idx] if E else complex(lead)
        l = float(np.dot(eps, lengths)) if E else 0.0
        key = round(l, 9) + 0.0
        coeffs[key] = coeffs.get(key, 0j) + b
    imag = max(abs(b.imag) for b in coeffs.values())
    scale = max(abs(b) for b in coeffs.values())
    out = {l: float(b.real) for l, b in sorted(coeffs.items()) if abs(b) >= drop}
    diag = {"method": "fourier", "max_imag": float(imag), "max_positive_power": positive_power,
            "rho_nodes": M, "phase_nodes": n_w, "scale": float(scale)}
    if imag > 1e-8 * max(1.0, scale):
        raise NumericalError(f"non-real expansion coefficients (max imaginary part {imag:.3g})")
    return ExpSumExpansion(N, g.total_length, out, diag)


def exp_sum_fit(g: MetricGraph, tau=None, x0=40.0, n_corr=3, max_cond=1e12, periods=10) -> ExpSumExpansion:
    """Least-squares fit of ``B_l`` from samples on the line ``Im rho = tau``.

    The basis is ``rho**-k exp(-i rho l)`` for ``k <= n_corr`` so the
    ``1/rho`` remainder is absorbed instead of biasing ``B_l``.  Refuses
    (``NumericalError``) when the design matrix is too ill-conditioned.
    """
    gz = g.zero_potential()
    G = g.total_length
    lengths = [e.length for e in g.edges]
    ls = sorted({round(float(np.dot(eps, lengths)), 9) + 0.0
                 for eps in itertools.product((-1, 0, 1), repeat=len(lengths))}) if lengths else [0.0]
    tau = 2.0 / G if tau is None and G > 0 else (tau or 1.0)
    n_unknown = len(ls) * (n_corr + 1)
    period = 2 * np.pi / max(min(abs(a - b) for a, b in zip(ls[1:], ls[:-1])), 1e-3) if len(ls) > 1 else 2 * np.pi
    # at least four samples per oscillation of the fastest exponential
    npts = max(4 * n_unknown, int(np.ceil(4 * periods * period * max(abs(ls[0]), abs(ls[-1]), 1.0) / (2 * np.pi))))
    x = x0 + np.linspace(0, periods * period, npts)
    rho = x + 1j * tau
    F = normalized_delta(gz, rho) * np.exp(-tau * G)
    cols = []
    for l in ls:
        base = np.exp(-1j * rho * l) * np.exp(-tau * G)
        for k in range(n_corr + 1):
            cols.append(base * rho ** (-k))
    A = np.stack(cols, axis=1)
    scale = np.linalg.norm(A, axis=0)
    A = A / scale
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > max_cond:
        raise NumericalError(f"exponential-sum fit is ill-conditioned (cond = {cond:.3g})")
    sol, *_ = np.linalg.lstsq(A, F, rcond=None)
    sol = sol / scale
    B = sol[0::n_corr + 1]
    coeffs = {l: float(b.real) for l, b in zip(ls, B) if abs(b) >= 1e-8}
    return ExpSumExpansion(g.n_index, G, coeffs, {"method": "lstsq", "cond": float(cond), "tau": tau,
                                                 "max_imag": float(np.max(np.abs(B.imag)))})


def _decomposition_vertex(g):
    for v in g.vertices:
        if v.kind == INTERNAL and g.degree(v.id) >= 3:
            return v.id
    return None


@dataclass
class RecursionResult:
    value: float
    ratios: list  # B(G_j)/B(G'_j) at every decomposition step
    depth: int


def leading_coefficient_recursive(g: MetricGraph) -> RecursionResult:
    """Leading coefficient ``B_{|G|}`` from the branch decomposition recursion.

    At an internal vertex with at least three incident edge ends the graph is
    split into branches ``G_j``; then
    ``B(G) = sum_k B(G_k) prod_{j != k} B(E(G_j, v))``.
    Graphs without such a vertex are base cases evaluated directly.
    """
    ratios = []

    def rec(h, depth):
        v = _decomposition_vertex(h)
        if v is None:
            return exp_sum_coefficients(h).leading, depth
        parts = [piece(h, br, v) for br in branches_at(h, v)]
        if len(parts) < 2:
            raise StructuralError(f"vertex {v} does not separate the graph")
        bk, dk = zip(*(rec(p, depth + 1) for p in parts))
        bs, ds = zip(*(rec(split_vertex(p, v).graph, depth + 1) for p in parts))
        for a, b in zip(bk, bs):
            ratios.append(a / b)
        total = 0.0
        for k in range(len(parts)):
            total += bk[k] * np.prod([bs[j] for j in range(len(parts)) if j != k])
        return total, max(dk + ds)

    value, depth = rec(g, 0)
    return RecursionResult(float(value), ratios, depth)


def remainder_size(g: MetricGraph, tau, expansion=None, n=64, slope=(4.0, 8.0)):
    """Max of ``|F(rho) - sum_l B_l exp(-i rho l)| exp(-tau |G|)`` on ``rho = tau (c + i)``.

    ``F`` is the normalised characteristic function with the graph's own
    potential; ``B_l`` belong to the zero potential.  Doubling ``tau`` doubles
    every sample point, so the ratio of successive values measures the decay
    order of the remainder.  ``c`` runs over ``slope``: a shallow direction
    reaches the ``1/rho`` regime at moderate ``tau``, before the products of
    ``exp(tau |r|)`` entries in the determinant start to cancel.
    """
    expansion = expansion or exp_sum_coefficients(g)
    rho = tau * (np.linspace(*slope, n) + 1j)
    F = normalized_delta(g, rho)
    return float(np.max(np.abs(F - expansion.evaluate(rho)) * np.exp(-rho.imag * g.total_length)))


# ---------------------------------------------------------------------------
# two-sided bounds


def zero_set(g: MetricGraph, re_lo, re_hi, im_lo=-0.5, im_hi=4.0, cell=0.25):
    """Zeros of ``rho -> Delta(rho**2)`` in a rectangle of the rho-plane.

    The lower edge is shifted so the real axis runs through the middle of a
    cell row; real zeros (embedded eigenvalues) never sit on a cell boundary.
    """
    im_lo = -cell * (np.ceil(max(-im_lo, 0.0) / cell) + 0.5)
    return complex_zeros(lambda z: delta_rho(g, z), re_lo, re_hi, im_lo, im_hi, cell)


def sandwich_constants(g: MetricGraph, rho_lo=20.0, rho_hi=40.0, eps=0.1,
                       taus=(0.0, 0.1, 0.25, 0.5, 1.0, 2.0), n=800):
    """Empirical constants in ``C1 <= |Delta| |rho|**(N-1) exp(-tau |G|) <= C2`` on A_eps.

    The octave ``[rho_lo, rho_hi]`` is split at its geometric midpoint and
    the constants are reported per half.
    """
    zs = zero_set(g, rho_lo - 1, rho_hi + 1, -1.0, max(taus) + 1.0)
    Z = np.array([z for z, _ in zs]) if zs else np.zeros(0, complex)
    x = np.linspace(rho_lo, rho_hi, n)
    pts = (x[None, :] + 1j * np.asarray(taus)[:, None]).ravel()
    pts = pts[(np.abs(pts) >= rho_lo) & (np.abs(pts) <= rho_hi)]
    if Z.size:
        dist = np.min(np.abs(pts[:, None] - Z[None, :]), axis=1)
        pts = pts[dist >= eps]
    Q = np.abs(delta_rho(g, pts)) * np.abs(pts) ** (g.n_index - 1) * np.exp(-pts.imag * g.total_length)
    mid = np.sqrt(rho_lo * rho_hi)
    lo, hi = Q[np.abs(pts) < mid], Q[np.abs(pts) >= mid]
    out = {"n_zeros": len(zs), "n_samples": int(pts.size),
           "C1": [float(lo.min()), float(hi.min())], "C2": [float(lo.max()), float(hi.max())]}
    out["C1_drift"] = max(out["C1"]) / min(out["C1"])
    out["C2_drift"] = max(out["C2"]) / min(out["C2"])
    return out


def lemma_bounds(g: MetricGraph, ray_id, rhos):
    """Both lower bounds for ``|Delta|`` obtained by cutting off a ray.

    Returns arrays ``(|Delta|, |Delta_r| |d_r| |Im m_r|, |Delta^r| |d^r| |Im 1/m_r|)``.
    """
    from .local import ray_jost_data
    r = g.edge(ray_id)
    rhos = np.atleast_1d(np.asarray(rhos, complex))
    lams = rhos * rhos
    D = np.abs(delta_batch(g, lams, rhos))
    Dk = delta_batch(cut_keep(g, [ray_id], at=r.base), lams, rhos)
    Dd = delta_batch(cut_dirichlet(g, [ray_id], at=r.base), lams, rhos)
    d, dd = ray_jost_data(r, lams, rhos)
    m = dd / d
    return D, np.abs(Dd) * np.abs(d) * np.abs(m.imag), np.abs(Dk) * np.abs(dd) * np.abs((1 / m).imag)
