"""Weyl-type solutions on rays, reflection coefficients, poles and weights."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .characteristic import (
    delta_batch,
    negative_spectrum,
    positive_singular_set,
    system_batch,
    weyl_function_batch,
)
from .errors import NumericalError, PoleError, StructuralError
from .graph import BOUNDARY_D, MetricGraph, Ray, compute_orders, enumerate_cycles
from .local import SpectralPoint, _transfer_to, jost, ray_jost_data
from .roots import winding_number
from .surgery import cut_dirichlet, unroll_cycle

DEFAULT_RHO_GRID = (0.05, 20.0, 512)
DEFAULT_LAMBDA_RE = (-10.0, 50.0, 32)
_H = 1e-6


def rho_grid(a=None, b=None, n=None):
    a0, b0, n0 = DEFAULT_RHO_GRID
    return np.linspace(a0 if a is None else a, b0 if b is None else b, n0 if n is None else n)


def lambda_grid(a=None, b=None, n=None):
    """``n`` points on each of the lines ``Im lam = +1`` and ``Im lam = -1``."""
    a0, b0, n0 = DEFAULT_LAMBDA_RE
    x = np.linspace(a0 if a is None else a, b0 if b is None else b, n0 if n is None else n)
    return np.concatenate([x + 1j, x - 1j])


def _ray(g, r) -> Ray:
    e = g.edge(r)
    if not isinstance(e, Ray):
        raise StructuralError(f"{r!r} is not a ray")
    return e


def _direct(g, r, rhos):
    """Solve the incoming-wave system ``psi_r = e(x, -rho) + s e(x, rho)`` on ray ``r``.

    Returns the full coefficient vectors; the ray's own slot holds ``s``.
    """
    rhos = np.atleast_1d(np.asarray(rhos, complex))
    lams = rhos * rhos
    A = system_batch(g, lams, rhos)
    ray = _ray(g, r)
    dm, ddm = ray_jost_data(ray, lams, -rhos)
    E, R = len(g.edges), len(g.rays)
    row = 2 * E + g.ray_index(r)
    b = np.zeros(A.shape[:2], complex)
    b[:, row] = -dm
    if g.vertex(ray.base).kind != BOUNDARY_D:
        b[:, 2 * E + R + g.vertex_index(ray.base)] = -ddm
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond) | (cond > 1e14)):
        raise PoleError(f"incoming-wave system singular on ray {r!r} (condition {np.max(cond):.3g})")
    return np.linalg.solve(A, b[..., None])[..., 0]


def reflection_direct(g: MetricGraph, r, rhos):
    """``s_r`` from the incoming-wave system (independent of the representation)."""
    x = _direct(g, r, rhos)
    return x[:, 2 * len(g.edges) + g.ray_index(r)]


def _sine_beyond(ray, sp, x):
    """Sine-type solution (``S(0)=0, S'(0)=1``) on the ray at ``x``."""
    w, v = ray.potential.pieces(ray.support) if ray.support > 0 else (np.zeros(0), np.zeros(0))
    T = _transfer_to(w, v, sp.lam, min(x, ray.support))
    y, dy = T[0, 1], T[1, 1]
    if x <= ray.support:
        return y, dy
    k, t = sp.rho, x - ray.support
    if k == 0:
        return y + dy * t, dy
    c, s = np.cos(k * t), np.sin(k * t)
    return y * c + dy * s / k, -y * k * s + dy * c


@dataclass
class WeylTypeSolution:
    """``psi_r``: matching conditions everywhere, incoming wave ``exp(-i rho x)`` on ``r``.

    ``gamma``/``delta`` are the coefficients of ``e_r`` and of the sine-type
    solution on ``r``; ``s`` is the reflection coefficient from the direct
    system and ``coeffs`` the direct solution on the whole graph.
    """

    graph: MetricGraph
    ray: str
    sp: SpectralPoint
    gamma: complex
    delta: complex
    s: complex
    coeffs: np.ndarray
    representation: bool = True
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, x):
        """Value and derivative on the ray ``r`` at arc length ``x``."""
        ray = _ray(self.graph, self.ray)
        x = np.atleast_1d(np.asarray(x, float))
        je = jost(ray, self.sp)
        ye, de = je(x)
        if self.representation:
            sv = np.array([_sine_beyond(ray, self.sp, xi) for xi in x])
            return self.gamma * ye + self.delta * sv[:, 0], self.gamma * de + self.delta * sv[:, 1]
        jm = jost(ray, SpectralPoint(self.sp.lam, -self.sp.rho, self.sp.side))
        ym, dm = jm(x)
        return ym + self.s * ye, dm + self.s * de

    def on_edge(self, eid, x):
        """Value and derivative on any edge or ray of the graph (direct coefficients)."""
        from .local import local_basis
        g = self.graph
        x = np.atleast_1d(np.asarray(x, float))
        e = g.edge(eid)
        if isinstance(e, Ray):
            if eid == self.ray:
                return self(x)
            c = self.coeffs[2 * len(g.edges) + g.ray_index(eid)]
            y, dy = jost(e, self.sp)(x)
            return c * y, c * dy
        j = g.edge_index(eid)
        C, S = local_basis(e, self.sp)
        (cy, cd), (sy, sd) = C(x), S(x)
        b1, b2 = self.coeffs[2 * j], self.coeffs[2 * j + 1]
        return b1 * cy + b2 * sy, b1 * cd + b2 * sd


def weyl_type_solution(g: MetricGraph, r, sp) -> WeylTypeSolution:
    """``psi_r = gamma e_r + delta S_r`` with ``delta = -2 i rho / d_r`` and
    ``gamma = (2 i rho / d_r) Delta_r / Delta``; ``Delta_r`` belongs to the graph
    with ``r`` cut off and its base split into Dirichlet ends.

    At exceptional points (``d_r = 0``) the direct solve is used instead.
    """
    sp = sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_rho(sp)
    if sp.rho == 0:
        raise PoleError("Weyl-type solution is undefined at rho = 0")
    ray = _ray(g, r)
    coeffs = _direct(g, r, [sp.rho])[0]
    s = complex(coeffs[2 * len(g.edges) + g.ray_index(r)])
    rho = sp.rho
    d, dd = ray_jost_data(ray, [sp.lam], [rho])
    dm, _ = ray_jost_data(ray, [sp.lam], [-rho])
    d, dm = complex(d[0]), complex(dm[0])
    D = complex(delta_batch(g, [sp.lam], [rho])[0])
    if abs(d) <= 1e-12 * max(1.0, abs(dd[0])):
        return WeylTypeSolution(g, r, sp, np.nan, np.nan, s, coeffs, False, {"exceptional": True})
    if g.vertex(ray.base).kind == BOUNDARY_D:
        Dr = 0j
    else:
        Dr = complex(delta_batch(cut_dirichlet(g, [r], at=ray.base), [sp.lam], [rho])[0])
    delta_ = -2j * rho / d
    gamma = (2j * rho / d) * Dr / D
    s_rep = gamma - dm / d
    diag = {"s_representation": s_rep, "consistency": abs(s_rep - s) / max(1.0, abs(s))}
    return WeylTypeSolution(g, r, sp, gamma, delta_, s, coeffs, True, diag)


def _match(g, r, rho, xs=None):
    """Plane-wave match of the representation beyond the support: ``(a, b)`` with
    ``psi = a exp(-i rho x) + b exp(i rho x)``."""
    ray = _ray(g, r)
    w = weyl_type_solution(g, r, SpectralPoint.from_rho(rho))
    if xs is None:
        xs = (ray.support + 0.5, ray.support + 1.25)
    y, _ = w(np.array(xs))
    M = np.array([[np.exp(-1j * rho * x), np.exp(1j * rho * x)] for x in xs])
    a, b = np.linalg.solve(M, y)
    return complex(a), complex(b)


def reflection(g: MetricGraph, r, rho, singular=(), window=1e-5):
    """``s_r(rho)`` for real ``rho > 0`` from the plane-wave match.

    Returns ``(s, quality)`` with quality ``"ok"`` or ``"extrapolated"``; within
    ``window`` of a singular point ``rho**2`` the value is Richardson-extrapolated
    from ``rho + i h`` and ``rho + 2 i h``.
    """
    rho = float(rho)
    if rho <= 0:
        raise ValueError("reflection needs rho > 0")
    near = any(abs(rho - rs) < window for rs in singular)
    if near:
        a1, b1 = _match(g, r, rho + 1j * _H)
        a2, b2 = _match(g, r, rho + 2j * _H)
        a, b, quality = 2 * a1 - a2, 2 * b1 - b2, "extrapolated"
    else:
        try:
            a, b = _match(g, r, rho)
            quality = "ok"
        except PoleError:
            a1, b1 = _match(g, r, rho + 1j * _H)
            a2, b2 = _match(g, r, rho + 2j * _H)
            a, b, quality = 2 * a1 - a2, 2 * b1 - b2, "extrapolated"
    dev = abs(a - 1)
    if dev > 1e-6:
        raise NumericalError(f"incoming coefficient {a} deviates from 1 at rho = {rho}")
    if dev > 1e-8:
        quality = "marginal"
    return complex(b), quality


def singular_rhos(g: MetricGraph, rho_max):
    """``sqrt`` of flagged positive singular candidates up to ``rho_max``."""
    if len(g.rays) == 0:
        return []
    rep = positive_singular_set(g, rho_max=rho_max)
    return [float(np.sqrt(c["lam"])) for c in rep.positive_candidates if c["member"]]


# ---------------------------------------------------------------------------
# poles and weights


def _contour_residue(f, z0, radius, n=64):
    t = np.exp(2j * np.pi * np.arange(n) / n)
    z = z0 + radius * t
    return complex(np.mean(f(z) * radius * t))


def pole_set(g: MetricGraph, r, spectrum=None, rtol=1e-8):
    """Poles of ``psi_r`` on the positive imaginary axis with their contour radii."""
    spectrum = spectrum or negative_spectrum(g)
    kappas = [float(np.sqrt(-lam)) for lam, _ in spectrum.negative_eigenvalues]
    out = []
    for k, kap in enumerate(kappas):
        others = [abs(kap - o) for j, o in enumerate(kappas) if j != k]
        radius = min(0.1, 0.5 * min(others, default=np.inf), 0.5 * kap)
        res = _contour_residue(lambda z: reflection_direct(g, r, z), 1j * kap, radius)
        scale = np.max(np.abs(reflection_direct(g, r, 1j * kap + radius * np.exp(2j * np.pi * np.arange(8) / 8))))
        if abs(res) > rtol * max(scale * radius, 1e-300):
            out.append((1j * kap, radius))
    return out


def pole_winding(g: MetricGraph, r, rho0, radius):
    """Winding number of ``s_r`` around ``rho0`` (``-1`` for a simple pole)."""
    return winding_number(lambda z: reflection_direct(g, r, z), rho0, radius)


def weight_numbers(g: MetricGraph, r, poles=None, check=True):
    """``alpha_r(rho0) = -i res s_r`` at each pole; returns ``{rho0: alpha}``.

    The residue is taken by the trapezoidal rule on a circle; with ``check``
    the half-radius circle must reproduce it and ``alpha`` must be real and
    positive.
    """
    poles = pole_set(g, r) if poles is None else poles
    out = {}
    for rho0, radius in poles:
        f = lambda z: reflection_direct(g, r, z)
        alpha = -1j * _contour_residue(f, rho0, radius)
        if check:
            alpha2 = -1j * _contour_residue(f, rho0, radius / 2)
            if abs(alpha - alpha2) > 1e-8 * max(1.0, abs(alpha)):
                raise NumericalError(f"weight at {rho0} depends on the contour radius ({alpha} vs {alpha2})")
            if abs(alpha.imag) > 1e-8 * max(1.0, abs(alpha)) or alpha.real <= 0:
                raise NumericalError(f"weight at {rho0} is not real positive: {alpha} (radius {radius})")
        out[rho0] = alpha.real if check else alpha
    return out


# ---------------------------------------------------------------------------
# bundles


@dataclass
class ScatteringData:
    ray: str
    rho: np.ndarray
    reflection: np.ndarray
    quality: list
    poles: list  # kappa values: rho0 = i kappa
    weights: list

    def at(self, rho):
        """Sampled ``s_r`` extended to negative ``rho`` by conjugation."""
        rho = float(rho)
        k = int(np.argmin(np.abs(self.rho - abs(rho))))
        if self.rho[k] != abs(rho):
            raise KeyError(f"rho = {rho} is not on the grid")
        s = self.reflection[k]
        return s if rho > 0 else np.conj(s)

    def to_json(self):
        return {
            "ray": self.ray,
            "reflection": [{"rho": float(x), "re": float(s.real), "im": float(s.imag), "quality": q}
                           for x, s, q in zip(self.rho, self.reflection, self.quality)],
            "poles": [{"kappa": float(k), "alpha": float(a)} for k, a in zip(self.poles, self.weights)],
        }

    @classmethod
    def from_json(cls, d):
        refl = d["reflection"]
        return cls(d["ray"], np.array([p["rho"] for p in refl], float),
                   np.array([complex(p["re"], p["im"]) for p in refl]), [p["quality"] for p in refl],
                   [p["kappa"] for p in d["poles"]], [p["alpha"] for p in d["poles"]])


def scattering_data(g: MetricGraph, r, grid=None, spectrum=None) -> ScatteringData:
    grid = rho_grid() if grid is None else np.asarray(grid, float)
    sing = singular_rhos(g, float(np.max(grid)) + 1.0)
    vals, qual = [], []
    for rho in grid:
        s, q = reflection(g, r, rho, sing)
        vals.append(s)
        qual.append(q)
    poles = pole_set(g, r, spectrum)
    weights = weight_numbers(g, r, poles)
    kap = [float(p.imag) for p, _ in poles]
    return ScatteringData(r, np.asarray(grid, float), np.array(vals), qual, kap, [weights[p] for p, _ in poles])


@dataclass
class FullData:
    scattering: dict  # ray id -> ScatteringData
    boundary_m: dict  # vertex id -> array of M_v on lam grid
    cycle_m: dict  # cycle key -> (vertex, array of M on unrolled graph)
    lam: np.ndarray

    def to_json(self):
        def cplx(a):
            return [[float(z.real), float(z.imag)] for z in a]
        return {
            "lambda": cplx(self.lam),
            "rays": {k: v.to_json() for k, v in self.scattering.items()},
            "boundary_weyl": {k: cplx(v) for k, v in self.boundary_m.items()},
            "cycle_weyl": {k: {"vertex": v, "M": cplx(m)} for k, (v, m) in self.cycle_m.items()},
        }


def cycle_key(c):
    return "+".join(c.members)


def full_data(g: MetricGraph, grid=None, lam=None) -> FullData:
    """Problem data: ``J_r`` per ray, ``M_v`` at every non-root boundary vertex
    and ``M`` at the new vertex of every unrolled cycle."""
    if g.root is None:
        raise StructuralError("full data needs a rooted graph")
    compute_orders(g)
    lam = lambda_grid() if lam is None else np.asarray(lam, complex)
    spectrum = negative_spectrum(g) if g.rays else None
    scat = {r.id: scattering_data(g, r.id, grid, spectrum) for r in g.rays}
    bm = {v.id: weyl_function_batch(g, v.id, lam) for v in g.vertices if v.is_boundary and v.id != g.root}
    cm = {}
    for c in enumerate_cycles(g):
        res = unroll_cycle(g, c)
        (vc,) = res.created
        cm[cycle_key(c)] = (vc, weyl_function_batch(res.graph, vc, lam))
    return FullData(scat, bm, cm, lam)
