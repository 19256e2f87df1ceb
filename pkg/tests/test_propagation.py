import json

import numpy as np
import pytest

from qgraph import StructuralError, compute_orders, parse_graph_file
from qgraph.characteristic import weyl_function
from qgraph.graph import BOUNDARY_D, Ray
from qgraph.local import SpectralPoint
from qgraph.propagation import (
    IP1,
    IP2,
    IP3,
    IP4,
    ProbeConfig,
    additivity_residual,
    bump,
    m_addition_residual,
    matching_residual,
    peel_schedule,
    phi_matching_residual,
    uniqueness_probe,
)
from qgraph.randgraph import random_a_graph
from qgraph.scattering import lambda_grid, rho_grid

from conftest import random_lambdas

SMALL = ProbeConfig(lam=lambda_grid(-10, 50, 8), rho=rho_grid(0.5, 10, 24))


def _shape(steps):
    return [(s.mu, s.problem, tuple(s.a_edge.members)) for s in steps]


def test_schedule_three_star(graphs):
    assert _shape(peel_schedule(graphs["star_rays"])) == [(1, IP1, ("r1",)), (1, IP1, ("r2",)), (0, IP2, ("e0",))]


def test_schedule_lasso(graphs):
    assert _shape(peel_schedule(graphs["lasso"])) == [(1, IP4, ("l",)), (0, IP2, ("e0",))]


def test_schedule_chain(graphs):
    assert _shape(peel_schedule(graphs["chain"])) == [(2, IP1, ("r",)), (1, IP3, ("e1",)), (0, IP2, ("e0",))]


def test_schedule_needs_root(graphs):
    with pytest.raises(StructuralError):
        peel_schedule(graphs["loop"])


@pytest.mark.parametrize("seed", range(10))
def test_schedule_covers_every_a_edge_once(seed):
    g = random_a_graph(np.random.default_rng(seed), max_edges=8)
    items, omega = compute_orders(g)
    steps = peel_schedule(g)
    seen = [tuple(s.a_edge.members) for s in steps]
    assert sorted(seen) == sorted(tuple(a.members) for a in items)
    assert len(set(seen)) == len(seen)
    mus = [s.mu for s in steps]
    assert mus == sorted(mus, reverse=True) and mus[0] == omega and mus[-1] == 0
    covered = sorted(m for s in steps for m in s.a_edge.members)
    assert covered == sorted(g.edge_ids())


def test_additivity_two_star_closed_form():
    L1, L2 = 0.8, 1.7
    g = parse_graph_file("vertex a boundary_D\nvertex v internal\nvertex b boundary_D\n"
                         f"edge e1 v a length {L1} potential zero\nedge e2 v b length {L2} potential zero\n")
    for lam in (2.0 + 1j, -3.0 - 0.7j, 15 + 2j):
        sp = SpectralPoint.from_lambda(lam)
        rho = sp.rho
        closed = -rho / np.tan(rho * L1) - rho / np.tan(rho * L2)
        assert abs(weyl_function(g, "v", sp) - closed) <= 1e-8 * max(1, abs(closed))
        assert additivity_residual(g, "v", sp=sp) <= 1e-8 * max(1, abs(closed))


def test_ray_plus_interval_closed_form():
    L = 1.1
    g = parse_graph_file(f"vertex v internal\nvertex b boundary_D\nedge e v b length {L} potential zero\n"
                         "ray r v support 0 potential zero\n")
    for lam in (4.0 + 1j, -2 + 0.5j, 30 - 3j):
        sp = SpectralPoint.from_lambda(lam)
        rho = sp.rho
        closed = 1j * rho - rho / np.tan(rho * L)
        assert abs(weyl_function(g, "v", sp) - closed) <= 1e-8 * max(1, abs(closed))
        assert additivity_residual(g, "v", sp=sp) <= 1e-8 * max(1, abs(closed))
        assert m_addition_residual(g, "r", sp) <= 1e-8 * max(1, abs(closed))
        assert matching_residual(g, "r", sp) <= 1e-8 * max(1, abs(closed))


def _internal_multi_branch(g):
    return [v.id for v in g.vertices if not v.is_boundary and g.degree(v.id) >= 2]


@pytest.mark.parametrize("seed", range(20))
def test_residual_identities_random(seed):
    rng = np.random.default_rng(1000 + seed)
    g = random_a_graph(rng, max_edges=6, max_cycles=2, max_rays=2, qmax=5.0)
    lams = random_lambdas(rng, 20)
    for lam in lams:
        sp = SpectralPoint.from_lambda(lam)
        for v in _internal_multi_branch(g):
            scale = max(1.0, abs(weyl_function(g, v, sp, cross_check=False)))
            assert additivity_residual(g, v, sp=sp) <= 1e-6 * scale
        for r in g.rays:
            if g.vertex(r.base).kind == BOUNDARY_D or g.degree(r.base) < 2:
                continue
            scale = max(1.0, abs(weyl_function(g, r.base, sp, cross_check=False)))
            assert m_addition_residual(g, r.id, sp) <= 1e-6 * scale
            assert matching_residual(g, r.id, sp) <= 1e-6 * scale


def test_phi_matching_at_boundary_edge():
    g = parse_graph_file("vertex v0 boundary_D\nvertex v1 internal\nvertex b boundary_K\n"
                         "edge e0 v0 v1 length 1 potential pw 0.0 2\nedge e1 v1 b length 0.9 potential pw 0.0 -3 0.4 1\n"
                         "edge l v1 v1 length 1.2 potential pw 0.0 1.5\nroot v0\n")
    for lam in random_lambdas(np.random.default_rng(3), 10):
        sp = SpectralPoint.from_lambda(lam)
        scale = max(1.0, abs(weyl_function(g, "v1", sp)))
        r1, r2 = phi_matching_residual(g, "e1", sp)
        assert r1 <= 1e-6 * scale and r2 <= 1e-6 * scale


def test_invalid_decomposition_rejected(graphs):
    with pytest.raises(StructuralError):
        additivity_residual(graphs["theta"], "a", parts=[["e1"], ["e2"]], sp=1 + 1j)


@pytest.mark.parametrize("name", ["star_rays", "lasso", "chain", "loop_ray_root"])
@pytest.mark.parametrize("mode", ["localized", "direct"])
def test_probe_identical_potentials_match(graphs, name, mode):
    cfg = ProbeConfig(lam=SMALL.lam, rho=SMALL.rho, mode=mode)
    rep = uniqueness_probe(graphs[name], config=cfg)
    assert rep.all_match, rep.to_json()
    assert all(0 <= r <= 1e-8 for r in rep.residuals)
    assert rep.first_mismatch is None


@pytest.mark.parametrize("name", ["star_rays", "chain", "loop_ray_root", "lasso"])
def test_probe_localizes_single_bump(graphs, name):
    g = graphs[name]
    steps = peel_schedule(g)
    for k, s in enumerate(steps):
        for eid in s.a_edge.members:
            rep = uniqueness_probe(g, q_tilde=bump(g, eid), config=SMALL)
            fm = rep.first_mismatch
            assert fm is not None, (name, eid)
            assert rep.residuals[fm] >= 1e-3
            assert rep.steps[fm].mu <= s.mu
            assert fm == k, (name, eid, rep.to_json())


def test_direct_mode_ray_bump_changes_scattering_data(graphs):
    g = graphs["star_rays"]
    cfg = ProbeConfig(lam=SMALL.lam, rho=SMALL.rho, mode="direct")
    rep = uniqueness_probe(g, q_tilde=bump(g, "r1"), config=cfg)
    k = [tuple(s.a_edge.members) for s in rep.steps].index(("r1",))
    assert rep.verdicts[k] == "mismatch" and rep.residuals[k] >= 1e-3


def test_direct_mode_sees_remote_perturbation(graphs):
    # global data of the root edge depend on the potential everywhere
    g = graphs["chain"]
    cfg = ProbeConfig(lam=SMALL.lam, rho=SMALL.rho, mode="direct")
    rep = uniqueness_probe(g, q_tilde=bump(g, "e0"), config=cfg)
    assert rep.first_mismatch == 0


def test_probe_report_json(graphs):
    rep = uniqueness_probe(graphs["chain"], q_tilde=bump(graphs["chain"], "e1"), config=SMALL)
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["mode"] == "localized" and doc["first_mismatch"] == 1
    assert [s["problem"] for s in doc["steps"]] == [IP1, IP3, IP2]
    assert all(set(s) >= {"mu", "members", "residual", "verdict", "input", "output"} for s in doc["steps"])


def test_probe_rejects_unknown_mode(graphs):
    with pytest.raises(ValueError):
        uniqueness_probe(graphs["chain"], config=ProbeConfig(mode="global"))


def test_bump_leaves_other_edges(graphs):
    g = graphs["chain"]
    pots = bump(g, "e1", 1.0)
    assert pots["e0"] == g.edge("e0").potential
    e1 = g.edge("e1")
    x = np.array([0.1, e1.length / 2, e1.length - 0.1])
    L = e1.length
    assert np.allclose(pots["e1"](x, L) - e1.potential(x, L), [0.0, 1.0, 0.0])
    assert isinstance(g.edge("r"), Ray)
