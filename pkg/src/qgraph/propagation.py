"""Weyl-data propagation identities and the order-by-order peeling schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characteristic import weyl_function, weyl_function_batch, weyl_solution
from .errors import NumericalError, QGraphError, StructuralError
from .graph import (
    BOUNDARY_D,
    AEdge,
    MetricGraph,
    Potential,
    Ray,
    compute_orders,
    is_boundary_cycle,
    subgraph_beyond,
)
from .local import SpectralPoint, classical_weyl_m
from .scattering import (
    cycle_key,
    lambda_grid,
    rho_grid,
    scattering_data,
    weyl_type_solution,
)
from .surgery import branches_at, cut_keep, piece, unroll_cycle

IP1, IP2, IP3, IP4, IP5 = "IP1_ray", "IP2_boundary_edge", "IP3_internal_edge", "IP4_boundary_cycle", "IP5_internal_cycle"
_CASE_ORDER = {IP1: 0, IP2: 1, IP4: 2, IP3: 3, IP5: 4}
MATCH_TOL = 1e-8
MISMATCH_TOL = 1e-3


def _sp(sp):
    return sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_lambda(sp)


# ---------------------------------------------------------------------------
# residual identities


def additivity_residual(g: MetricGraph, v, parts=None, sp=None):
    """``|M_v(G) - sum_j M_v(G_j)|`` over the pieces of ``G`` meeting at ``v``."""
    sp = _sp(sp)
    parts = branches_at(g, v) if parts is None else parts
    ids = sorted(eid for p in parts for eid in p)
    if ids != sorted(g.edge_ids()):
        raise StructuralError("parts do not partition the edges of the graph")
    total = sum(weyl_function(piece(g, p, v), v, sp, cross_check=False) for p in parts)
    return abs(weyl_function(g, v, sp, cross_check=False) - total)


def _ray_base(g, r):
    ray = g.edge(r)
    if not isinstance(ray, Ray):
        raise StructuralError(f"{r!r} is not a ray")
    if g.vertex(ray.base).kind == BOUNDARY_D or g.degree(ray.base) < 2:
        raise StructuralError(f"ray {r!r} has no remaining graph at its base")
    return ray


def matching_residual(g: MetricGraph, r, sp):
    """``|psi_r'(v) / psi_r(v) + M_v(G^r)|`` at the base ``v`` of ray ``r``."""
    sp = sp if isinstance(sp, SpectralPoint) else SpectralPoint.from_lambda(sp)
    ray = _ray_base(g, r)
    y, dy = weyl_type_solution(g, r, sp)(0.0)
    if abs(y[0]) < 1e-12:
        raise NumericalError("psi_r vanishes at the base: point excluded")
    rest = cut_keep(g, [r], at=ray.base)
    return abs(dy[0] / y[0] + weyl_function(rest, ray.base, sp, cross_check=False))


def m_addition_residual(g: MetricGraph, r, sp):
    """``|M_v(G) - M_v(G^r) - m_r|`` at the base ``v`` of ray ``r``."""
    sp = _sp(sp)
    ray = _ray_base(g, r)
    rest = cut_keep(g, [r], at=ray.base)
    lhs = weyl_function(g, ray.base, sp, cross_check=False)
    return abs(lhs - weyl_function(rest, ray.base, sp, cross_check=False) - classical_weyl_m(ray, sp))


def _boundary_edge_ends(g, eid):
    e = g.edge(eid)
    if isinstance(e, Ray) or e.is_loop:
        raise StructuralError(f"{eid!r} is not a compact simple edge")
    ends = [w for w in (e.initial, e.terminal) if g.vertex(w).is_boundary and w != g.root]
    if not ends:
        raise StructuralError(f"{eid!r} has no non-root boundary vertex")
    b = ends[0]
    u = e.terminal if b == e.initial else e.initial
    return e, b, u


def phi_matching_residual(g: MetricGraph, eid, sp):
    """For a boundary edge ``r = [u, b]``: ``|d_r Phi_b(u) / Phi_b(u) + M_u(G^r)|``
    and ``|M_u(G) - M_u(r) - M_u(G^r)|`` (returned as a pair)."""
    sp = _sp(sp)
    e, b, u = _boundary_edge_ends(g, eid)
    if g.degree(u) < 2:
        raise StructuralError(f"edge {eid!r} is the whole graph")
    phi = weyl_solution(g, b, sp)
    x = 0.0 if e.initial == u else e.length
    y, dy = phi(eid, x)
    inward = dy[0] if e.initial == u else -dy[0]
    rest = cut_keep(g, [eid], at=u)
    Mr = weyl_function(rest, u, sp, cross_check=False)
    r1 = abs(inward / y[0] + Mr)
    single = piece(g, [eid], u)
    r2 = abs(weyl_function(g, u, sp, cross_check=False) - weyl_function(single, u, sp, cross_check=False) - Mr)
    return r1, r2


# ---------------------------------------------------------------------------
# schedule


@dataclass
class PeelStep:
    mu: int
    a_edge: AEdge
    problem: str
    input_data: str
    output_claim: str

    def to_json(self):
        return {"mu": self.mu, "kind": self.a_edge.kind, "members": list(self.a_edge.members),
                "anchor": self.a_edge.anchor, "problem": self.problem,
                "input": self.input_data, "output": self.output_claim}


def _far_end(g, e, anchor):
    return e.terminal if e.initial == anchor else e.initial


def classify(g: MetricGraph, a: AEdge) -> PeelStep:
    if a.is_cycle:
        (vc,) = unroll_cycle(g, a).created
        key = cycle_key(a)
        if is_boundary_cycle(g, a):
            return PeelStep(a.order, a, IP4, f"M_{vc}(G_c) for cycle {key}", f"q on {key}; M_{a.anchor}(G^c)")
        return PeelStep(a.order, a, IP5, f"M_{vc}(G_c) for cycle {key}; q beyond {key}",
                        f"q on {key}; M_{a.anchor}(G^c)")
    (eid,) = a.members
    e = g.edge(eid)
    if isinstance(e, Ray):
        return PeelStep(a.order, a, IP1, f"J_{eid}", f"q on {eid}; M_{e.base}(G^{eid})")
    far = _far_end(g, e, a.anchor)
    if a.anchor == g.root:
        return PeelStep(a.order, a, IP2, f"M_{far}(G) propagated to the root edge", f"q on {eid}")
    if g.vertex(far).is_boundary:
        return PeelStep(a.order, a, IP2, f"M_{far}(G)", f"q on {eid}; M_{a.anchor}(G^{eid})")
    beyond = subgraph_beyond(g, a)
    if len(beyond.edge_ids()) <= 1:
        raise StructuralError(f"edge {eid!r} cannot be classified")
    return PeelStep(a.order, a, IP3, f"M_{far}(G^+); q on G^+({eid}) minus {eid}", f"q on {eid}; M_{a.anchor}(G^{eid})")


def peel_schedule(g: MetricGraph):
    """Steps for ``mu = omega, ..., 0``; within a level rays, boundary edges,
    boundary cycles, internal edges, internal cycles, then declaration order."""
    items, omega = compute_orders(g)
    steps = [classify(g, a) for a in items]
    pos = {eid: k for k, eid in enumerate(g.edge_ids())}
    steps.sort(key=lambda s: (-s.mu, _CASE_ORDER[s.problem], min(pos[m] for m in s.a_edge.members)))
    return steps


# ---------------------------------------------------------------------------
# probe


@dataclass
class ProbeConfig:
    lam: np.ndarray = field(default_factory=lambda: lambda_grid())
    rho: np.ndarray = field(default_factory=lambda: rho_grid())
    mode: str = "localized"
    match_tol: float = MATCH_TOL
    mismatch_tol: float = MISMATCH_TOL


@dataclass
class ProbeReport:
    steps: list
    residuals: list
    verdicts: list
    errors: list
    mode: str

    @property
    def first_mismatch(self):
        for k, v in enumerate(self.verdicts):
            if v == "mismatch":
                return k
        return None

    @property
    def all_match(self):
        return all(v == "match" for v in self.verdicts)

    def to_json(self):
        fm = self.first_mismatch
        return {
            "mode": self.mode,
            "steps": [dict(s.to_json(), residual=float(r) if np.isfinite(r) else None, verdict=v, error=err)
                      for s, r, v, err in zip(self.steps, self.residuals, self.verdicts, self.errors)],
            "first_mismatch": fm,
        }


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return np.inf
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))


def _scattering_residual(j1, j2):
    if len(j1.poles) != len(j2.poles):
        return np.inf
    res = _rel(j1.reflection, j2.reflection)
    if j1.poles:
        res = max(res, _rel(j1.poles, j2.poles), _rel(j1.weights, j2.weights))
    return res


def _step_datum(g, step, cfg, cache):
    """The quantity a step consumes, for the operator on ``g``."""
    a = step.a_edge
    if cfg.mode == "localized":
        if step.problem == IP1:
            ray = g.edge(a.members[0])
            return np.array([classical_weyl_m(ray, SpectralPoint.from_lambda(l)) for l in cfg.lam])
        sub = subgraph_beyond(g, a)
        if step.problem in (IP4, IP5):
            res = unroll_cycle(sub, a)
            return weyl_function_batch(res.graph, res.created[0], cfg.lam)
        return weyl_function_batch(sub, a.anchor, cfg.lam)
    if step.problem == IP1:
        key = ("J", a.members[0])
        if key not in cache:
            cache[key] = scattering_data(g, a.members[0], cfg.rho)
        return cache[key]
    if step.problem in (IP4, IP5):
        res = unroll_cycle(g, a)
        return weyl_function_batch(res.graph, res.created[0], cfg.lam)
    far = _far_end(g, g.edge(a.members[0]), a.anchor)
    return weyl_function_batch(g, far, cfg.lam)


def _verdict(res, cfg):
    if res <= cfg.match_tol:
        return "match"
    if res >= cfg.mismatch_tol:
        return "mismatch"
    return "inconclusive"


def _as_graph(g, q):
    if q is None:
        return g
    if isinstance(q, MetricGraph):
        if q.edge_ids() != g.edge_ids():
            raise StructuralError("potential graphs must share the edge set")
        q = q.potentials()
    return g.with_potentials(q)


def uniqueness_probe(g: MetricGraph, q=None, q_tilde=None, config=None) -> ProbeReport:
    """Walk the peeling schedule comparing each step's datum for two potentials.

    ``mode="direct"`` compares the global data the step consumes (``J_r`` or a
    Weyl function of the whole graph at the far vertex); every such datum
    depends on the potential everywhere.  ``mode="localized"`` compares the
    Weyl function of the part beyond each a-edge at its anchor, which depends
    only on the potential there and is what each step propagates.
    """
    cfg = config or ProbeConfig()
    if cfg.mode not in ("direct", "localized"):
        raise ValueError(f"unknown probe mode {cfg.mode!r}")
    g1, g2 = _as_graph(g, q), _as_graph(g, q_tilde)
    steps = peel_schedule(g1)
    c1, c2 = {}, {}
    residuals, verdicts, errors = [], [], []
    for s in steps:
        try:
            d1, d2 = _step_datum(g1, s, cfg, c1), _step_datum(g2, s, cfg, c2)
            if s.problem == IP1 and cfg.mode == "direct":
                r = _scattering_residual(d1, d2)
            else:
                r = _rel(d1, d2)
            residuals.append(r)
            verdicts.append(_verdict(r, cfg))
            errors.append(None)
        except QGraphError as exc:
            residuals.append(np.nan)
            verdicts.append("error")
            errors.append(str(exc))
    return ProbeReport(steps, residuals, verdicts, errors, cfg.mode)


def bump(g: MetricGraph, eid, height=1.0):
    """Potentials of ``g`` with ``height`` added on the middle third of ``eid``."""
    e = g.edge(eid)
    L = e.support if isinstance(e, Ray) else e.length
    if L <= 0:
        raise StructuralError(f"{eid!r} has no room for a bump")
    b = Potential.piecewise([0.0, L / 3, 2 * L / 3], [0.0, height, 0.0])
    pots = g.potentials()
    pots[eid] = e.potential.add(b, L)
    return pots
